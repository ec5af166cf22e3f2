"""Normal-approximation confidence intervals and asymptotic-normality diagnostics."""

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import ndtri

from .errors import DimensionError, DomainError
from .estimation import estimate_error, estimate_g_truncated, mom_estimate
from .model import EstimandWeights, _weights, default_K, make_estimand
from .signal import as_signal, circular_convolve
from .variance import _circular_vq, plugin_variance


def normal_quantile(p):
    """Standard normal inverse CDF (``scipy.special.ndtri``)."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {p}")
    return float(ndtri(p))


@dataclass(frozen=True)
class ConfidenceInterval:
    center: float
    half_width: float
    alpha: float

    @property
    def lower(self):
        return self.center - self.half_width

    @property
    def upper(self):
        return self.center + self.half_width

    def contains(self, value):
        return self.lower <= value <= self.upper


def confidence_interval(tau_hat, v, alpha=0.05):
    """``tau_hat +- z_{1 - alpha/2} sqrt(total)`` for a variance decomposition or a plain variance."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    total = v.total if hasattr(v, "total") else float(v)
    if total < 0 or not math.isfinite(total):
        raise DomainError(f"variance must be finite and nonnegative, got {total}")
    mult = normal_quantile(1.0 - alpha / 2.0)
    return ConfidenceInterval(float(tau_hat), mult * math.sqrt(total), alpha)


@dataclass(frozen=True)
class NormalityDiagnostics:
    """Measurable quantities behind the asymptotic-normality conditions.

    ``ratio`` is ``lhs / V_Q^2`` and ``fourth_moment_gap_bound`` is
    ``4/T + 16/T * ratio``. The fourth moment of the quadratic chaos counts
    each 4-cycle with multiplicity three, so the bound that actually holds
    is ``fourth_moment_gap_bound_corrected = 4/T + 48/T * ratio``; the first
    one can fail (for example when ``q`` is all ones). All three are ``None``
    (and ``undefined`` is set) when ``V_Q = 0``. ``assumption1_ok`` compares
    ``lhs`` with ``C * rhs_per_C``.
    """

    assumption1_lhs: float
    assumption1_rhs_per_C: float
    v_q: float
    ratio: float | None
    fourth_moment_gap_bound: float | None
    fourth_moment_gap_bound_corrected: float | None
    assumption1_ok: bool
    linear_condition_ok: bool
    undefined: bool
    epsilon: float
    C: float

    def to_dict(self):
        return asdict(self)


def normality_diagnostics(g, q, e, epsilon=0.5, C=1.0):
    """Evaluate the decay condition, the fourth-moment bound and the linear-term condition."""
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    g = as_signal(g, "g")
    q = _weights(q).q
    e = as_signal(e, "e")
    n = g.shape[0]
    if q.shape[0] != n or e.shape[0] != n:
        raise DimensionError("g, q and e must share a horizon")
    a = circular_convolve(np.abs(g), np.abs(q))
    aa = circular_convolve(a, a)
    lhs = float(aa @ aa)
    v_q = max(_circular_vq(g, q), 0.0)
    rhs = n ** (1.0 - epsilon) * v_q**2
    # relative floor so round-off in V_Q does not count as a positive variance
    scale = float(np.sum(np.abs(g))) ** 2 * float(np.sum(np.abs(q))) ** 2
    undefined = v_q <= 1e-12 * max(scale, 1e-300)
    if undefined:
        ratio = gap = gap3 = None
        ok = False
    else:
        ratio = lhs / v_q**2
        gap = 4.0 / n + 16.0 / n * ratio
        gap3 = 4.0 / n + 48.0 / n * ratio
        ok = lhs <= C * rhs
    lin_ok = abs(float(np.sum(g)) * float(np.sum(q))) > 2.0 * float(np.max(np.abs(e))) * float(np.sum(np.abs(q)))
    return NormalityDiagnostics(
        assumption1_lhs=lhs,
        assumption1_rhs_per_C=rhs,
        v_q=v_q,
        ratio=ratio,
        fourth_moment_gap_bound=gap,
        fourth_moment_gap_bound_corrected=gap3,
        assumption1_ok=bool(ok),
        linear_condition_ok=bool(lin_ok),
        undefined=bool(undefined),
        epsilon=epsilon,
        C=C,
    )


@dataclass(frozen=True)
class EstimateReport:
    """Point estimate, plug-in variance, interval and diagnostics for one observation."""

    estimand: str
    tau_hat: float
    v_q: float
    v_l: float
    v_q_raw: float
    total: float
    ci_lower: float
    ci_upper: float
    alpha: float
    diagnostics: dict
    K: int
    model_kind: str
    horizon: int
    lag: int | None = None
    seed: int | None = None
    schema_version: int = 1

    def to_dict(self):
        return asdict(self)


def estimate_report(obs, estimand="immediate", K=None, alpha=0.05, lag=None, epsilon=0.5, C=1.0, seed=None):
    """Estimate a named estimand from ``obs`` with a plug-in confidence interval.

    A two-path contrast (the flip effect) is estimated as the difference of
    the two estimates; since the estimator is linear in the weights, its
    variance is that of the difference weights. ``K`` defaults to the larger
    of the weights' support and ``min(ceil(2 log T), T // 2)``. Diagnostics
    are evaluated at the plug-in quantities ``g_hat_{<K}`` and ``e_hat``.
    """
    n = obs.horizon
    q, qp = make_estimand(estimand, n, lag)
    tau = mom_estimate(obs, q)
    diff = q.q.copy()
    if qp is not None:
        tau -= mom_estimate(obs, qp)
        diff = diff - qp.q
    weights = EstimandWeights.from_vector(diff)
    support = max(q.support, qp.support if qp is not None else 0)
    if K is None:
        K = max(support, min(default_K(n), n // 2))
    v = plugin_variance(obs, weights, K)
    ci = confidence_interval(tau, v, alpha)
    ghat = estimate_g_truncated(obs, K)
    diag = normality_diagnostics(ghat.values, weights, estimate_error(obs, ghat), epsilon, C)
    return EstimateReport(
        estimand=estimand,
        tau_hat=tau,
        v_q=v.v_quadratic,
        v_l=v.v_linear,
        v_q_raw=v.v_q_raw,
        total=v.total,
        ci_lower=ci.lower,
        ci_upper=ci.upper,
        alpha=alpha,
        diagnostics=diag.to_dict(),
        K=K,
        model_kind=obs.model_kind,
        horizon=n,
        lag=lag if estimand == "lag_K" else None,
        seed=seed,
    )
