"""Numpy implementations of the hot kernels.

Every function here has a twin with the same signature in ``_ckernels.pyx``.
These versions are the fallback when the extension is not built and serve as
the reference in the backend equivalence tests.
"""

import numpy as np


def conv_linear(u, v):
    n = u.shape[0]
    return np.convolve(u, v)[:n]


def conv_circular(u, v):
    n = u.shape[0]
    full = np.convolve(u, v)
    out = full[:n].copy()
    out[: n - 1] += full[n:]
    return out


def corr_linear(q, v):
    # (T_q^T v)_i = sum_s q_s v_{i+s}
    n = q.shape[0]
    return np.convolve(v[::-1], q)[:n][::-1].copy()


def corr_circular(q, v):
    # (C_q^T v)_i = sum_s q_s v_{(i+s) mod T}
    return conv_circular(np.roll(q[::-1], 1), v)


def _support(a):
    nz = np.flatnonzero(a)
    return int(nz[-1]) + 1 if nz.size else 0


def _prefix_with_tail(prod, length, n_total):
    """Prefix sums of ``prod[:length]`` padded with the final value to ``n_total``."""
    if length <= 0:
        return np.zeros(0), 0.0, n_total
    c = np.cumsum(prod[:length])
    return c, float(c[-1]), n_total - length


def linear_quadratic_terms(q, g):
    """Return ``(||H||_F^2, tr(H^2), sum_i H_ii^2)`` for ``H = T_q^T T_g``.

    Works diagonal by diagonal: entries of H along offset d are prefix sums of
    products of q and shifted g, so each diagonal costs O(T) and diagonals
    beyond the supports of q and g vanish.
    """
    n = q.shape[0]
    kq = _support(q)
    kg = _support(g)
    fro = 0.0
    tr = 0.0
    diag = 0.0
    for d in range(min(n, max(kq, kg))):
        m = n - d
        # A_d[m] = sum_{j<=m} q_{d+j} g_j  (diagonal j = i + d, d >= 0)
        la = min(m, max(0, min(kq - d, kg)))
        a_pre, a_last, a_tail = _prefix_with_tail(q[d : d + la] * g[:la], la, m)
        # B_d[m] = sum_{u<=m} q_u g_{u+d}  (diagonal j = i - d)
        lb = min(m, max(0, min(kq, kg - d)))
        b_pre, b_last, b_tail = _prefix_with_tail(q[:lb] * g[d : d + lb], lb, m)
        a_sq = float(a_pre @ a_pre) + a_tail * a_last * a_last
        b_sq = float(b_pre @ b_pre) + b_tail * b_last * b_last
        lmax = max(la, lb)
        a_ext = np.full(lmax, a_last)
        a_ext[:la] = a_pre
        b_ext = np.full(lmax, b_last)
        b_ext[:lb] = b_pre
        ab = float(a_ext @ b_ext) + (m - lmax) * a_last * b_last
        if d == 0:
            fro += a_sq
            tr += a_sq
            diag += a_sq
        else:
            fro += a_sq + b_sq
            tr += 2.0 * ab
    return fro, tr, diag


def lagged_cross(z, y, nlags, circular):
    """Row-wise ``sum_t z_{t-k} y_t`` for lags ``k < nlags``.

    ``z`` is an (R, T) int8 array of +-1, ``y`` an (R, T) float array.
    """
    r, n = y.shape
    out = np.empty((r, nlags))
    zf = z.astype(np.float64)
    for k in range(nlags):
        if circular:
            out[:, k] = np.einsum("ij,ij->i", np.roll(zf, k, axis=1), y)
        else:
            out[:, k] = np.einsum("ij,ij->i", zf[:, : n - k], y[:, k:])
    return out


def conv_linear_rows(x, g, kg):
    """Row-wise truncated linear convolution of a 0/1 matrix with ``g[:kg]``."""
    r, n = x.shape
    out = np.zeros((r, n))
    xf = x.astype(np.float64)
    for s in range(min(kg, n)):
        if g[s] != 0.0:
            out[:, s:] += g[s] * xf[:, : n - s]
    return out


def conv_circular_rows(x, g, kg):
    r, n = x.shape
    out = np.zeros((r, n))
    xf = x.astype(np.float64)
    for s in range(min(kg, n)):
        if g[s] != 0.0:
            out += g[s] * np.roll(xf, s, axis=1)
    return out


def enumerate_moments(g, q, e, circular):
    """Unscaled estimator ``<z * q, 2y>`` on every 0/1 path, lexicographic order.

    Vectorised over the full path matrix; memory is O(2^T T).
    """
    n = g.shape[0]
    idx = np.arange(1 << n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    x = ((idx[:, None] >> shifts[None, :]) & 1).astype(np.float64)
    z = 2.0 * x - 1.0
    if circular:
        gm = np.array([[g[(t - s) % n] for s in range(n)] for t in range(n)])
        qm = np.array([[q[(t - s) % n] for s in range(n)] for t in range(n)])
    else:
        gm = np.array([[g[t - s] if t >= s else 0.0 for s in range(n)] for t in range(n)])
        qm = np.array([[q[t - s] if t >= s else 0.0 for s in range(n)] for t in range(n)])
    y = x @ gm.T + e[None, :]
    zq = z @ qm.T
    return 2.0 * np.einsum("ij,ij->i", zq, y)
