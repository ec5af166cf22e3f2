"""Outcome models, estimands and counterfactual contrasts.

Impulse responses ``g``, exogenous errors ``e`` and outcomes ``y`` are plain
signals (see :func:`nof1.signal.as_signal`). Treatment paths are 0/1 arrays.
"""

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, PreconditionError
from .signal import as_signal, circular_convolve, linear_convolve

MODEL_KINDS = ("linear", "circular")
ESTIMAND_KINDS = ("ate", "lag_K", "immediate", "cumulative", "flip")


def check_model_kind(kind):
    if kind not in MODEL_KINDS:
        raise DomainError(f"model kind must be one of {MODEL_KINDS}, got {kind!r}")
    return kind


def as_path(x, name="x"):
    """Validate a binary treatment path and return it as a read-only uint8 array."""
    arr = np.asarray(x)
    if arr.ndim != 1 or arr.shape[0] < 1:
        raise DimensionError(f"{name} must be a non-empty 1-D sequence")
    if not np.all((arr == 0) | (arr == 1)):
        raise DomainError(f"{name} must contain only 0 and 1")
    out = arr.astype(np.uint8)
    out.setflags(write=False)
    return out


def centered(x):
    """``z = 2x - 1`` as int8 values in {-1, +1}."""
    return (2 * as_path(x).astype(np.int8) - 1).astype(np.int8)


def support_size(q):
    """Index of the last nonzero entry plus one (0 for the zero signal)."""
    nz = np.flatnonzero(np.asarray(q))
    return int(nz[-1]) + 1 if nz.size else 0


@dataclass(frozen=True, eq=False)
class EstimandWeights:
    """Estimand weights ``q`` supported on the first ``support`` entries."""

    q: np.ndarray
    support: int

    def __post_init__(self):
        q = as_signal(self.q, "q")
        object.__setattr__(self, "q", q)
        if not 0 <= self.support <= q.shape[0]:
            raise DomainError(f"support {self.support} outside [0, {q.shape[0]}]")
        if np.any(q[self.support :] != 0.0):
            raise PreconditionError(
                f"q has nonzero entries at or beyond declared support {self.support}"
            )

    @classmethod
    def from_vector(cls, q):
        q = as_signal(q, "q")
        return cls(q, max(support_size(q), 0))

    @property
    def horizon(self):
        return self.q.shape[0]


def _weights(q):
    return q if isinstance(q, EstimandWeights) else EstimandWeights.from_vector(q)


def basis(k, horizon):
    """Standard basis vector ``u_k`` as estimand weights."""
    if not 0 <= k < horizon:
        raise DomainError(f"basis index {k} outside [0, {horizon})")
    q = np.zeros(horizon)
    q[k] = 1.0
    return EstimandWeights(q, k + 1)


def leading_ones(k, horizon):
    """``1_{<K}``: ones on the first ``k`` lags."""
    if not 0 <= k <= horizon:
        raise DomainError(f"K={k} outside [0, {horizon}]")
    q = np.zeros(horizon)
    q[:k] = 1.0
    return EstimandWeights(q, k)


def make_estimand(kind, horizon, K=None):
    """Build the weights for a named estimand.

    Returns ``(q, None)`` for single estimands and ``(q, q_prime)`` for the
    flip effect, which is evaluated as ``tau(q) - tau(q_prime)``. The pair is
    ordered so that the contrast equals ``g_0 - g_1``.
    """
    if horizon < 1:
        raise DomainError("horizon must be >= 1")
    if kind == "ate":
        return leading_ones(horizon, horizon), None
    if kind == "lag_K":
        if K is None:
            raise DomainError("lag_K estimand needs K")
        if K > horizon:
            raise DomainError(f"K={K} exceeds horizon {horizon}")
        return leading_ones(K, horizon), None
    if kind == "immediate":
        return basis(0, horizon), None
    if kind == "cumulative":
        if horizon < 2:
            raise DomainError("cumulative effect needs horizon >= 2")
        return leading_ones(2, horizon), None
    if kind == "flip":
        if horizon < 2:
            raise DomainError("flip effect needs horizon >= 2")
        return basis(0, horizon), basis(1, horizon)
    raise DomainError(f"unknown estimand kind {kind!r}; expected one of {ESTIMAND_KINDS}")


def _same_horizon(*arrays):
    n = arrays[0].shape[0]
    for a in arrays[1:]:
        if a.shape[0] != n:
            raise DimensionError(f"horizon mismatch: {n} vs {a.shape[0]}")
    return n


def simulate_linear(x, g, e):
    """Outcome ``y = x * g + e`` under linear (causal, truncated) convolution."""
    x = as_path(x)
    g = as_signal(g, "g")
    e = as_signal(e, "e")
    _same_horizon(x, g, e)
    return linear_convolve(x.astype(np.float64), g) + e


def simulate_circular(x, g, e):
    """Outcome ``y = x (circ) g + e`` under circular convolution."""
    x = as_path(x)
    g = as_signal(g, "g")
    e = as_signal(e, "e")
    _same_horizon(x, g, e)
    return circular_convolve(x.astype(np.float64), g) + e


def simulate(x, g, e, model_kind):
    check_model_kind(model_kind)
    return simulate_circular(x, g, e) if model_kind == "circular" else simulate_linear(x, g, e)


def horizon_weights(horizon):
    """Diagonal of ``D_T``: ``(T - t) / T``."""
    return (horizon - np.arange(horizon)) / horizon


def estimand_linear(q, g):
    """``<D_T q, g>`` with ``D_T = diag((T - t) / T)``."""
    q = _weights(q).q
    g = as_signal(g, "g")
    n = _same_horizon(q, g)
    return float(np.dot(horizon_weights(n) * q, g))


def estimand_circular(q, g):
    """``<q, g>``."""
    q = _weights(q).q
    g = as_signal(g, "g")
    _same_horizon(q, g)
    return float(np.dot(q, g))


def estimand(q, g, model_kind):
    check_model_kind(model_kind)
    return estimand_circular(q, g) if model_kind == "circular" else estimand_linear(q, g)


def counterfactual_contrast(qa, qb, g, circular=False):
    """``tau(qa) - tau(qb)`` under the circular or linear estimand."""
    kind = "circular" if circular else "linear"
    return estimand(qa, g, kind) - estimand(qb, g, kind)


# Parametric signals: "1.00*0.65^t - 1.60*0.50^t + 0.75*0.48^t", "0.5*sin(0.3*t)", "2"
_NUM = r"[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?"
_TERM = re.compile(
    rf"^(?:(?P<coef>{_NUM})\*)?"
    rf"(?:(?P<rate>{_NUM})\^t"
    rf"|(?P<fn>sin|cos)\((?:(?P<freq>{_NUM})\*)?t(?:\+(?P<phase>{_NUM}))?\))$"
)
_CONST = re.compile(rf"^(?P<coef>{_NUM})$")


def _split_terms(text):
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch in "+-" and depth == 0 and i > start and text[i - 1] not in "eE*^":
            parts.append(text[start:i])
            start = i
    parts.append(text[start:])
    return parts


def parse_parametric(expr):
    """Parse a sum of ``c*rho^t``, ``c*sin(w*t)``, ``c*cos(w*t)`` and constant terms.

    Returns a list of ``(kind, coefficient, parameter, phase)`` tuples.
    """
    text = expr.replace(" ", "")
    if not text:
        raise DomainError("empty parametric expression")
    parts = _split_terms(text)
    terms = []
    for part in parts:
        sign = -1.0 if part.startswith("-") else 1.0
        body = part.lstrip("+-")
        const = _CONST.match(body)
        if const:
            terms.append(("const", sign * float(const["coef"]), 0.0, 0.0))
            continue
        m = _TERM.match(body)
        if not m:
            raise DomainError(f"cannot parse term {part!r} in {expr!r}")
        coef = float(m["coef"]) if m["coef"] else 1.0
        if m["rate"]:
            terms.append(("exp", sign * coef, float(m["rate"]), 0.0))
        elif m["fn"]:
            freq = float(m["freq"]) if m["freq"] else 1.0
            phase = float(m["phase"]) if m["phase"] else 0.0
            terms.append((m["fn"], sign * coef, freq, phase))
    return terms


def evaluate_parametric(expr, horizon):
    """Evaluate a parametric expression (see :func:`parse_parametric`) on ``t = 0..T-1``."""
    terms = parse_parametric(expr) if isinstance(expr, str) else expr
    t = np.arange(horizon, dtype=np.float64)
    out = np.zeros(horizon)
    for kind, coef, par, phase in terms:
        if kind == "exp":
            out += coef * par**t
        elif kind == "sin":
            out += coef * np.sin(par * t + phase)
        elif kind == "cos":
            out += coef * np.cos(par * t + phase)
        else:
            out += coef
    return as_signal(out)


def decay_rate(expr):
    """Largest exponential rate in a parametric expression, or None."""
    terms = parse_parametric(expr) if isinstance(expr, str) else expr
    rates = [abs(p) for kind, _, p, _ in terms if kind == "exp"]
    if not rates or any(kind != "exp" for kind, *_ in terms):
        return None
    return max(rates)


def default_K(horizon):
    """``ceil(2 log T)``, clipped to ``[1, T]``."""
    return int(min(max(math.ceil(2.0 * math.log(max(horizon, 1))), 1), horizon))
