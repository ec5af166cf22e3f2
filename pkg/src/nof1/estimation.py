"""Point estimators: method-of-moments, Horvitz-Thompson and truncated impulse response."""

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import DimensionError, DomainError
from .model import _weights, as_path, check_model_kind, default_K, support_size
from .signal import as_signal, convolve, correlate

#: Supports up to this many lags are handled by the direct lagged-sum kernel;
#: longer ones go through convolution.
DIRECT_LAGS = 64


@dataclass(frozen=True, eq=False)
class Observation:
    """A treatment path and the outcome it produced under ``model_kind``."""

    x: np.ndarray
    y: np.ndarray
    model_kind: str = "linear"

    def __post_init__(self):
        check_model_kind(self.model_kind)
        x = as_path(self.x)
        y = as_signal(self.y, "y")
        if x.shape != y.shape:
            raise DimensionError(f"x has length {x.shape[0]} but y has length {y.shape[0]}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def horizon(self):
        return self.x.shape[0]

    @property
    def circular(self):
        return self.model_kind == "circular"

    @property
    def z(self):
        return 2.0 * self.x.astype(np.float64) - 1.0


@dataclass(frozen=True, eq=False)
class TruncatedResponseEstimate:
    """``g_hat`` with entries beyond ``K`` set to exactly zero."""

    values: np.ndarray
    K: int

    def __post_init__(self):
        v = as_signal(self.values, "g_hat")
        if not 0 <= self.K <= v.shape[0]:
            raise DomainError(f"K={self.K} outside [0, {v.shape[0]}]")
        if np.any(v[self.K :] != 0.0):
            raise DomainError("truncated estimate has nonzero entries beyond K")
        object.__setattr__(self, "values", v)


def lag_sums(obs, nlags):
    """``c_k = sum_t z_{t-k} y_t`` for ``k < nlags`` (indices wrap in the circular model)."""
    n = obs.horizon
    if nlags <= DIRECT_LAGS:
        z = (2 * obs.x.astype(np.int8) - 1).reshape(1, n)
        return kernels.lagged_cross(z, obs.y.reshape(1, n).copy(), nlags, obs.circular)[0]
    # sum_t z_{t-k} y_t is the adjoint of convolution by z applied to y
    return correlate(obs.z, obs.y, obs.circular)[:nlags]


def mom_estimate(obs, q):
    """Method-of-moments estimate ``(1/T) <(2x - 1) * q, 2y>``."""
    w = _weights(q)
    n = obs.horizon
    if w.horizon != n:
        raise DimensionError(f"q has length {w.horizon} but the observation has length {n}")
    k = w.support
    if k == 0:
        return 0.0
    c = lag_sums(obs, k)
    return float(2.0 / n * np.dot(c, w.q[:k]))


def mom_estimate_batch(x, y, q, circular):
    """Estimates for each row of a ``(R, T)`` path matrix and outcome matrix."""
    w = _weights(q)
    x = np.ascontiguousarray(x, dtype=np.uint8)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if x.shape != y.shape or x.shape[1] != w.horizon:
        raise DimensionError("path, outcome and weight horizons disagree")
    k = w.support
    if k == 0:
        return np.zeros(x.shape[0])
    z = (2 * x.astype(np.int8) - 1).astype(np.int8)
    c = kernels.lagged_cross(z, y, k, circular)
    return 2.0 / x.shape[1] * (c @ w.q[:k])


def ht_estimate(measured_y, arms):
    """Horvitz-Thompson estimate ``(2/n) sum_i z_i y_i`` for fair-coin arms ``z_i = +-1``."""
    y = np.asarray(measured_y, dtype=np.float64)
    z = np.asarray(arms, dtype=np.float64)
    if y.ndim != 1 or y.shape != z.shape:
        raise DimensionError("measured outcomes and arms must be 1-D with equal length")
    if y.shape[0] == 0:
        raise DomainError("Horvitz-Thompson estimate needs at least one measurement")
    if not np.all(np.abs(z) == 1.0):
        raise DomainError("arms must be +1 or -1")
    return float(2.0 / y.shape[0] * np.dot(z, y))


def estimate_g_truncated(obs, K=None):
    """``g_hat_k = tau_hat(u_k)`` for ``k < K``; zero beyond. ``K`` defaults to ``ceil(2 log T)``."""
    n = obs.horizon
    if K is None:
        K = default_K(n)
    if not 0 <= K <= n:
        raise DomainError(f"K={K} outside [0, {n}]")
    values = np.zeros(n)
    if K:
        values[:K] = 2.0 / n * lag_sums(obs, K)
    return TruncatedResponseEstimate(values, K)


def estimate_g_batch(x, y, K, circular):
    """Row-wise ``g_hat_{<K}`` restricted to its first ``K`` entries, shape ``(R, K)``."""
    x = np.ascontiguousarray(x, dtype=np.uint8)
    y = np.ascontiguousarray(y, dtype=np.float64)
    z = (2 * x.astype(np.int8) - 1).astype(np.int8)
    return 2.0 / x.shape[1] * kernels.lagged_cross(z, y, K, circular)


def estimate_error(obs, ghat):
    """Residual ``e_hat = y - x * g_hat`` under the observation's convolution."""
    g = ghat.values if isinstance(ghat, TruncatedResponseEstimate) else as_signal(ghat, "g_hat")
    if g.shape[0] != obs.horizon:
        raise DimensionError("g_hat horizon does not match the observation")
    if support_size(g) == 0:
        return obs.y.copy()
    return obs.y - convolve(obs.x.astype(np.float64), g, obs.circular)
