"""Exact and plug-in variances of the method-of-moments estimator.

Writing ``z = 2x - 1`` and ``h = 1 * g + 2e`` the scaled estimator is
``T tau_hat = z^T H z + z^T L`` with ``H = A_q^T A_g`` and ``L = A_q^T h``, where
``A_u`` is the Toeplitz (linear model) or circulant (circular model) matrix of
``u``. The off-diagonal part of ``H`` gives the quadratic component ``V_Q``,
``L`` the linear component ``V_L``; the estimator variance is
``(V_Q + V_L) / T``. Nothing here materialises ``H`` except
:func:`build_h_l`, which exists for checking.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from ._backend import kernels
from .errors import DimensionError, DomainError, PreconditionError
from .estimation import Observation, estimate_g_batch, estimate_g_truncated, estimate_error
from .model import _weights, check_model_kind, horizon_weights
from .signal import (
    DENSE_CAP,
    as_signal,
    build_circulant,
    build_toeplitz,
    circular_convolve,
    correlate,
    linear_convolve,
)


@dataclass(frozen=True)
class VarianceDecomposition:
    """``V_Q`` and ``V_L`` with ``total = (V_Q + V_L) / T``.

    ``v_q_raw`` keeps the unclamped quadratic component; it differs from
    ``v_quadratic`` only for plug-in estimates that came out negative.
    """

    v_quadratic: float
    v_linear: float
    v_q_raw: float
    total: float
    horizon: int

    @classmethod
    def from_components(cls, v_q, v_l, horizon):
        v_q = float(v_q)
        v_l = float(v_l)
        clamped = max(v_q, 0.0)
        return cls(clamped, max(v_l, 0.0), v_q, (clamped + max(v_l, 0.0)) / horizon, horizon)

    def to_dict(self):
        return {"v_q": self.v_quadratic, "v_l": self.v_linear, "v_q_raw": self.v_q_raw, "total": self.total}


@dataclass(frozen=True, eq=False)
class HLForms:
    H: np.ndarray
    L: np.ndarray
    model_kind: str


def _inputs(g, q, e):
    g = as_signal(g, "g")
    w = _weights(q)
    e = as_signal(e, "e")
    if not (g.shape[0] == w.horizon == e.shape[0]):
        raise DimensionError(f"horizon mismatch: g={g.shape[0]}, q={w.horizon}, e={e.shape[0]}")
    return g, w.q, e


def _linear_parts(g, q, e, g_trace=None):
    """``(Q, ||L||^2)`` for the linear model; ``Q`` is ``Var(z^T H z)``."""
    fro, tr, diag = kernels.linear_quadratic_terms(q, g)
    if g_trace is not None:
        tr = kernels.linear_quadratic_terms(q, g_trace)[1]
    h = np.cumsum(g) + 2.0 * e
    lin = correlate(q, h, circular=False)
    return fro + tr - 2.0 * diag, float(lin @ lin)


def exact_variance_linear(g, q, e):
    """Exact randomisation variance of the linear-model estimator."""
    g, q, e = _inputs(g, q, e)
    quad, lin = _linear_parts(g, q, e)
    n = g.shape[0]
    return max(quad + lin, 0.0) / (n * n)


def variance_linear(g, q, e):
    """Linear-model variance split into quadratic and linear parts (per unit of ``1/T``)."""
    g, q, e = _inputs(g, q, e)
    n = g.shape[0]
    quad, lin = _linear_parts(g, q, e)
    return VarianceDecomposition.from_components(quad / n, lin / n, n)


def _circular_vq(g, q, g_trace=None):
    gt = g if g_trace is None else g_trace
    gq = circular_convolve(g, q)
    gg = circular_convolve(gt, gt)
    qq = circular_convolve(q, q)
    return float(gq @ gq + gg @ qq - 2.0 * float(q @ g) ** 2)


def _circular_vl(g, q, e):
    n = g.shape[0]
    h = np.sum(g) + 2.0 * e
    hq = circular_convolve(h, q)
    return float(hq @ hq) / n


def variance_circular(g, q, e):
    """``V_Q``, ``V_L`` and the total variance for the circular model."""
    g, q, e = _inputs(g, q, e)
    n = g.shape[0]
    return VarianceDecomposition.from_components(_circular_vq(g, q), _circular_vl(g, q, e), n)


def second_moment_formula(g, q, e, model_kind):
    """``V_Q = ||g * q||^2 + <g * g, q * q> - 2 <q, g>^2`` and ``V_L = ||(1 * g + 2e) * q||^2 / T``.

    ``*`` is the convolution of ``model_kind``. For the circular model this is
    the exact variance; for the linear model it is the same closed form with
    truncated convolutions, an approximation that ignores the start-up
    terms of the exact linear formula.
    """
    check_model_kind(model_kind)
    g, q, e = _inputs(g, q, e)
    if model_kind == "circular":
        return variance_circular(g, q, e)
    n = g.shape[0]
    gq = linear_convolve(g, q)
    gg = linear_convolve(g, g)
    qq = linear_convolve(q, q)
    v_q = float(gq @ gq + gg @ qq - 2.0 * float(q @ g) ** 2)
    hq = linear_convolve(np.cumsum(g) + 2.0 * e, q)
    return VarianceDecomposition.from_components(v_q, float(hq @ hq) / n, n)


def variance(g, q, e, model_kind):
    check_model_kind(model_kind)
    return variance_circular(g, q, e) if model_kind == "circular" else variance_linear(g, q, e)


def build_h_l(g, q, e, model_kind, cap=DENSE_CAP):
    """Dense ``H`` and vector ``L`` of the error decomposition (for checking only)."""
    check_model_kind(model_kind)
    g, q, e = _inputs(g, q, e)
    if model_kind == "circular":
        aq, ag = build_circulant(q, cap), build_circulant(g, cap)
        h = np.sum(g) + 2.0 * e
    else:
        aq, ag = build_toeplitz(q, cap), build_toeplitz(g, cap)
        h = np.cumsum(g) + 2.0 * e
    H = aq.T @ ag
    L = aq.T @ h
    H.setflags(write=False)
    L.setflags(write=False)
    return HLForms(H, L, model_kind)


def quadratic_variance_from_h(H):
    """``sum_{i != j} (H_ij^2 + H_ij H_ji)``: variance of ``sum_{i != j} z_i z_j H_ij``."""
    H = np.asarray(H, dtype=np.float64)
    d = np.diag(H)
    return float(np.sum(H * H) + np.sum(H * H.T) - 2.0 * d @ d)


def _check_plugin(q, K, n):
    w = _weights(q)
    if w.support > K:
        raise PreconditionError(f"q is supported on {w.support} entries, more than K={K}")
    if not 1 <= K or 2 * K > n:
        raise DomainError(f"plug-in variance needs 1 <= K and 2K <= T (K={K}, T={n})")
    return w.q


def plugin_variance(obs, q, K):
    """Plug-in estimate of the variance decomposition from one observation.

    ``g`` is replaced by the truncated estimate ``g_hat_{<K}`` everywhere except
    the trace (cross) term, which uses ``g_hat_{<2K}``; ``e`` is replaced by the
    residual ``y - x * g_hat_{<K}``.
    """
    n = obs.horizon
    q = _check_plugin(q, K, n)
    g2 = estimate_g_truncated(obs, 2 * K).values
    gk = g2.copy()
    gk[K:] = 0.0
    e_hat = estimate_error(obs, gk)
    if obs.circular:
        v_q = _circular_vq(gk, q, g_trace=g2)
        v_l = _circular_vl(gk, q, e_hat)
    else:
        quad, lin = _linear_parts(gk, q, e_hat, g_trace=g2)
        v_q, v_l = quad / n, lin / n
    return VarianceDecomposition.from_components(v_q, v_l, n)


def plugin_variance_batch(x, y, q, K, circular, chunk=256):
    """Plug-in ``(v_q_raw, v_l)`` for every row of ``(R, T)`` path/outcome matrices.

    The circular model is vectorised with FFTs. The linear model loops over
    rows with :func:`plugin_variance`.
    """
    x = np.ascontiguousarray(x, dtype=np.uint8)
    y = np.ascontiguousarray(y, dtype=np.float64)
    r, n = x.shape
    q = _check_plugin(q, K, n)
    v_q = np.empty(r)
    v_l = np.empty(r)
    if not circular:
        for i in range(r):
            d = plugin_variance(Observation(x[i], y[i], "linear"), q, K)
            v_q[i], v_l[i] = d.v_q_raw, d.v_linear
        return v_q, v_l
    qf = np.fft.rfft(q)
    qq = circular_convolve(q, q)
    for lo in range(0, r, chunk):
        hi = min(r, lo + chunk)
        g2 = estimate_g_batch(x[lo:hi], y[lo:hi], 2 * K, True)
        gk = np.zeros((hi - lo, n))
        gk[:, :K] = g2[:, :K]
        g2full = np.zeros((hi - lo, n))
        g2full[:, : 2 * K] = g2
        gkf = np.fft.rfft(gk, axis=1)
        gq = np.fft.irfft(gkf * qf, n, axis=1)
        gg = np.fft.irfft(np.fft.rfft(g2full, axis=1) ** 2, n, axis=1)
        v_q[lo:hi] = np.einsum("ij,ij->i", gq, gq) + gg @ qq - 2.0 * (gk[:, :K] @ q[:K]) ** 2
        # 1 * g_hat + 2 e_hat = 2y - z * g_hat
        z = 2.0 * x[lo:hi] - 1.0
        h = 2.0 * y[lo:hi] - np.fft.irfft(np.fft.rfft(z, axis=1) * gkf, n, axis=1)
        hq = np.fft.irfft(np.fft.rfft(h, axis=1) * qf, n, axis=1)
        v_l[lo:hi] = np.einsum("ij,ij->i", hq, hq) / n
    return v_q, v_l


@dataclass(frozen=True)
class SnrReport:
    """Signal-to-noise ratios of the immediate-effect estimators under ``g = (A - B) g_base``.

    ``rapid_prefactor`` is the rapid-design SNR divided by ``r sqrt(T)`` with
    ``r = (A - B) / (A + B)``; ``prefactor_lower_bound`` is the geometric-decay
    value ``1 / sqrt(v_bound + w_bound)`` that lower-bounds it. The
    conservative prefactor is ``washout^{-1/2}``. ``*_2dp`` fields truncate to
    two decimals.
    """

    v: float
    w: float
    v_bound: float
    w_bound: float
    ratio: float
    rapid_snr: float
    rapid_prefactor: float
    prefactor_lower_bound: float
    conservative_prefactor: float
    conservative_snr: float
    prefactor_lower_bound_2dp: float
    conservative_prefactor_2dp: float

    def to_dict(self):
        return asdict(self)


def snr_v(g):
    """``v(g) = sum_{t >= 1} (T - t)/T g_t^2``."""
    g = as_signal(g, "g")
    return float(np.sum(horizon_weights(g.shape[0])[1:] * g[1:] ** 2))


def snr_w(g):
    """``w(g) = (1/T) ||g * 1||^2``."""
    g = as_signal(g, "g")
    c = np.cumsum(g)
    return float(c @ c) / g.shape[0]


def _floor2(x):
    return math.floor(x * 100.0 + 1e-9) / 100.0


def snr_analysis(A, B, g_base, horizon, washout, beta=None):
    """Analytic SNR of the rapid design versus the washout design.

    ``beta`` is the geometric decay rate of ``g_base`` used for the bounds on
    ``v`` and ``w``; when omitted it is read off as ``g_base[1] / g_base[0]``.
    """
    if horizon < 1:
        raise DomainError("horizon must be >= 1")
    if washout < 1:
        raise DomainError("washout must be >= 1 for the conservative SNR")
    g = as_signal(g_base, "g_base")
    if g.shape[0] != horizon:
        g = g[:horizon] if g.shape[0] > horizon else np.concatenate([g, np.zeros(horizon - g.shape[0])])
    if beta is None:
        beta = float(g[1] / g[0]) if horizon > 1 and g[0] != 0 else 0.0
    if not 0.0 <= abs(beta) < 1.0:
        raise DomainError(f"decay rate must lie in [0, 1), got {beta}")
    v, w = snr_v(g), snr_w(g)
    v_bound = beta**2 / (1.0 - beta**2)
    w_bound = 1.0 / (1.0 - beta) ** 2
    ratio = (A - B) / (A + B) if A + B != 0 else 0.0
    root_t = math.sqrt(horizon)
    if A == B:
        rapid = 0.0
        pref = 0.0
    else:
        var = (A + B) ** 2 / horizon * (ratio**2 * v + w)
        rapid = (A - B) * float(g[0]) / math.sqrt(var)
        pref = rapid / (ratio * root_t)
    lower = 1.0 / math.sqrt(v_bound + w_bound)
    cons = washout**-0.5
    return SnrReport(
        v=v,
        w=w,
        v_bound=v_bound,
        w_bound=w_bound,
        ratio=ratio,
        rapid_snr=rapid,
        rapid_prefactor=pref,
        prefactor_lower_bound=lower,
        conservative_prefactor=cons,
        conservative_snr=ratio * root_t * cons,
        prefactor_lower_bound_2dp=_floor2(lower),
        conservative_prefactor_2dp=_floor2(cons),
    )
