"""Ground-truth oracles: Rademacher chaos moments and exhaustive path enumeration.

Everything here is deliberately independent of the fast formulas in
:mod:`nof1.variance`: moments come either from closed-form chaos identities or
from brute force over all ``2^T`` sign vectors. When the inputs are integers
the results are exact ``Fraction`` values.
"""

import csv
import io
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._backend import kernels
from .design import ENUMERATION_CAP, path_matrix
from .errors import DimensionError, PreconditionError, RefusalError
from .model import check_model_kind

DEFAULT_ENUMERATION_LIMIT = 12
DIRECT_CYCLE_LIMIT = 32


def _is_integral(*arrays):
    return all(np.all(np.asarray(a) == np.round(np.asarray(a))) for a in arrays)


def _int_array(a):
    return np.array([int(round(float(v))) for v in np.ravel(a)], dtype=object).reshape(np.shape(a))


@dataclass(frozen=True, eq=False)
class ChaosMoments:
    """Second and fourth moments of ``G = sum_{i<j} z_i z_j W_ij``."""

    second: object
    fourth: object
    W: np.ndarray


def _check_w(W):
    W = np.asarray(W)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise DimensionError(f"W must be square, got shape {W.shape}")
    if not np.array_equal(W, W.T):
        raise PreconditionError("W must be symmetric")
    if np.any(np.diag(W) != 0):
        raise PreconditionError("W must have a zero diagonal")
    return W


def cycle_sum_direct(W):
    """``sum over distinct i, j, k, l of W_ij W_jk W_kl W_li`` by explicit loops."""
    W = np.asarray(W)
    n = W.shape[0]
    if n > DIRECT_CYCLE_LIMIT:
        raise RefusalError(f"direct cycle sum is O(T^4); refusing T={n} > {DIRECT_CYCLE_LIMIT}")
    total = 0
    idx = range(n)
    for i in idx:
        for j in idx:
            if j == i or W[i, j] == 0:
                continue
            for k in idx:
                if k == i or k == j or W[j, k] == 0:
                    continue
                wijk = W[i, j] * W[j, k]
                for l in idx:
                    if l != i and l != j and l != k:
                        total += wijk * W[k, l] * W[l, i]
    return total


def cycle_sum_trace(W):
    """The same cycle sum via ``tr(W^4) - 2 sum_i ((W^2)_ii)^2 + sum_ij W_ij^4``.

    With a zero diagonal, the closed walks of length four counted by
    ``tr(W^4)`` that are not 4-cycles revisit a vertex two steps later
    (``i = k`` or ``j = l``); inclusion-exclusion removes them.
    """
    W = np.asarray(W)
    w2 = W @ W
    d = np.diag(w2)
    return np.sum(w2 * w2.T) - 2 * np.sum(d * d) + np.sum(W**4)


def chaos_moments_formula(W, method="auto"):
    """Closed-form ``E[G^2]`` and ``E[G^4]`` for a symmetric zero-diagonal ``W``."""
    W = _check_w(W)
    if _is_integral(W):
        W = _int_array(W)
    n = W.shape[0]
    exact = W.dtype == object
    sq = np.sum(W * W) if n else 0
    second = Fraction(int(sq), 2) if exact else float(sq) / 2.0
    if method == "direct" or (method == "auto" and n <= 8):
        cyc = cycle_sum_direct(W)
    else:
        cyc = cycle_sum_trace(W)
    fourth = 3 * second * second - np.sum(W**4) + 3 * cyc
    if not exact:
        fourth = float(fourth)
    return ChaosMoments(second, fourth, W)


def _sign_matrix(n):
    if n > ENUMERATION_CAP:
        raise RefusalError(f"refusing to enumerate 2^{n} sign vectors (cap {ENUMERATION_CAP})")
    return 2 * path_matrix(n).astype(np.int64) - 1


def enumerate_chaos_moments(W):
    """``(E[G^2], E[G^4])`` for ``G = sum_{i<j} z_i z_j W_ij`` by brute force."""
    W = np.asarray(W)
    n = W.shape[0]
    z = _sign_matrix(n)
    upper = np.triu(W, 1)
    if _is_integral(W):
        g = np.einsum("ri,ij,rj->r", z, _int_array(upper).astype(np.int64), z)
        vals = [int(v) for v in g]
        m = len(vals)
        return Fraction(sum(v * v for v in vals), m), Fraction(sum(v**4 for v in vals), m)
    g = np.einsum("ri,ij,rj->r", z.astype(np.float64), upper, z.astype(np.float64))
    return float(np.mean(g**2)), float(np.mean(g**4))


def quadratic_form_moments(M):
    """Mean ``tr(M)`` and variance ``||M||_F^2 + tr(M^2) - 2 sum_i M_ii^2`` of ``z^T M z``."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"M must be square, got shape {M.shape}")
    if _is_integral(M):
        M = _int_array(M)
    d = np.diag(M)
    mean = np.trace(M)
    var = np.sum(M * M) + np.sum(M * M.T) - 2 * np.sum(d * d)
    if M.dtype == object:
        return Fraction(int(mean)), Fraction(int(var))
    return float(mean), float(var)


def enumerate_quadratic_form(M):
    """``(mean, variance)`` of ``z^T M z`` by brute force."""
    M = np.asarray(M)
    z = _sign_matrix(M.shape[0])
    if _is_integral(M):
        vals = [int(v) for v in np.einsum("ri,ij,rj->r", z, _int_array(M).astype(np.int64), z)]
        m = len(vals)
        s1 = sum(vals)
        s2 = sum(v * v for v in vals)
        return Fraction(s1, m), Fraction(m * s2 - s1 * s1, m * m)
    v = np.einsum("ri,ij,rj->r", z.astype(np.float64), M, z.astype(np.float64))
    return float(np.mean(v)), float(np.var(v))


@dataclass(frozen=True, eq=False)
class PathDistribution:
    """Estimator value on every path (lexicographic, ``x_0`` most significant).

    Moments are ``Fraction`` when ``exact`` is set, floats otherwise.
    """

    values: np.ndarray
    horizon: int
    model_kind: str
    mean: object
    variance: object
    fourth_central: object
    exact: bool

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["path", "value"])
        n = self.horizon
        for i, v in enumerate(self.values):
            w.writerow([format(i, f"0{n}b"), repr(float(v))])
        return buf.getvalue()


def _exact_moments(sums, scale):
    """Exact mean, variance, fourth central moment of ``sums / scale``."""
    m = len(sums)
    s1 = sum(sums)
    dev = [m * s - s1 for s in sums]  # m * (s - mean)
    mean = Fraction(s1, m * scale)
    var = Fraction(sum(d * d for d in dev), m**3 * scale**2)
    fourth = Fraction(sum(d**4 for d in dev), m**5 * scale**4)
    return mean, var, fourth


def enumerate_estimator_distribution(g, q, e, model_kind, limit=DEFAULT_ENUMERATION_LIMIT, exact=None):
    """Evaluate the method-of-moments estimator on all ``2^T`` paths.

    ``limit`` is the horizon accepted without complaint (raise it up to the
    hard cap of 20 explicitly). ``exact`` defaults to true when g, q and e
    are integer valued.
    """
    check_model_kind(model_kind)
    g = np.ascontiguousarray(g, dtype=np.float64)
    q = np.ascontiguousarray(q, dtype=np.float64)
    e = np.ascontiguousarray(e, dtype=np.float64)
    n = g.shape[0]
    if q.shape[0] != n or e.shape[0] != n:
        raise DimensionError("g, q and e must share a horizon")
    cap = min(limit, ENUMERATION_CAP)
    if n > cap:
        raise RefusalError(f"refusing to enumerate 2^{n} paths (limit T <= {cap})")
    if exact is None:
        exact = _is_integral(g, q, e)
    raw = np.asarray(kernels.enumerate_moments(g, q, e, model_kind == "circular"))
    values = raw / n
    values.setflags(write=False)
    if exact:
        if not _is_integral(g, q, e):
            raise PreconditionError("exact enumeration needs integer-valued g, q and e")
        sums = [int(v) for v in np.rint(raw)]
        mean, var, fourth = _exact_moments(sums, n)
    else:
        mean = float(np.mean(values))
        d = values - mean
        var = float(np.mean(d * d))
        fourth = float(np.mean(d**4))
    return PathDistribution(values, n, model_kind, mean, var, fourth, bool(exact))


# Exact (rational) evaluation of the closed-form estimands and variances, used to
# compare the enumeration with the formulas without any floating point.


def _iconv(u, v, circular):
    n = len(u)
    out = [0] * n
    for s, us in enumerate(u):
        if us == 0:
            continue
        for r, vr in enumerate(v):
            t = s + r
            if t < n:
                out[t] += us * vr
            elif circular:
                out[t - n] += us * vr
    return out


def _ints(a):
    if not _is_integral(a):
        raise PreconditionError("exact evaluation needs integer-valued inputs")
    return [int(round(float(v))) for v in a]


def exact_estimand(q, g, model_kind):
    """``<q, g>`` or ``sum (T - t)/T q_t g_t`` as a Fraction."""
    check_model_kind(model_kind)
    q, g = _ints(q), _ints(g)
    n = len(g)
    if model_kind == "circular":
        return Fraction(sum(a * b for a, b in zip(q, g)))
    return Fraction(sum((n - t) * q[t] * g[t] for t in range(n)), n)


def exact_formula_variance(g, q, e, model_kind):
    """Closed-form estimator variance evaluated in rational arithmetic."""
    check_model_kind(model_kind)
    g, q, e = _ints(g), _ints(q), _ints(e)
    n = len(g)
    if model_kind == "circular":
        gq = _iconv(g, q, True)
        gg = _iconv(g, g, True)
        qq = _iconv(q, q, True)
        ip = sum(a * b for a, b in zip(q, g))
        v_q = sum(v * v for v in gq) + sum(a * b for a, b in zip(gg, qq)) - 2 * ip * ip
        h = [sum(g) + 2 * et for et in e]
        hq = _iconv(h, q, True)
        v_l = Fraction(sum(v * v for v in hq), n)
        return (v_q + v_l) / n
    tq = [[q[t - s] if t >= s else 0 for s in range(n)] for t in range(n)]
    tg = [[g[t - s] if t >= s else 0 for s in range(n)] for t in range(n)]
    H = [[sum(tq[t][i] * tg[t][j] for t in range(n)) for j in range(n)] for i in range(n)]
    fro = sum(H[i][j] ** 2 for i in range(n) for j in range(n))
    tr = sum(H[i][j] * H[j][i] for i in range(n) for j in range(n))
    diag = sum(H[i][i] ** 2 for i in range(n))
    csum = 0
    h = []
    for t in range(n):
        csum += g[t]
        h.append(csum + 2 * e[t])
    lin = [sum(tq[t][i] * h[t] for t in range(n)) for i in range(n)]
    return Fraction(fro + tr - 2 * diag + sum(v * v for v in lin), n * n)
