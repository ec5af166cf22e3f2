"""Treatment-path generation for the rapid and standard N-of-1 designs.

Randomness
----------
All draws come from NumPy's ``Philox`` (Philox4x64-10, counter based) keyed by
``SeedSequence(entropy=seed, spawn_key=key)``. Coin flips use the raw 64-bit
output of the bit generator directly: for ``p = 1/2`` the arm is the top bit,
otherwise the top 53 bits are compared against ``p``. Both SeedSequence and
Philox have stable bit streams across NumPy releases, and no Generator method
is involved, so a given ``(seed, key)`` yields the same path on any platform.
This scheme is version 1 (``RNG_SCHEME``); it must not change silently.
"""

import csv
import io
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError, RefusalError

RNG_SCHEME = "philox4x64-seedsequence-raw-v1"
DESIGN_KINDS = ("rapid_bernoulli", "standard_imd", "standard_cum")
ENUMERATION_CAP = 20


def bit_generator(seed, *key):
    """Philox bit generator for ``seed`` and an integer spawn key."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Philox(ss)


def coin_flips(bitgen, n, p=0.5):
    """``n`` independent Bernoulli(p) draws as a uint8 array."""
    raw = bitgen.random_raw(n)
    raw = np.asarray(raw, dtype=np.uint64).reshape(n)
    if p == 0.5:
        return (raw >> np.uint64(63)).astype(np.uint8)
    u = (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53
    return (u < p).astype(np.uint8)


@dataclass(frozen=True)
class DesignSpec:
    """Which randomisation scheme generates a path.

    ``washout`` is the gap in days between the measurement of one decision and
    the next decision (standard designs only); ``period`` is the number of
    consecutive dosing days in a ``standard_cum`` block.
    """

    kind: str
    horizon: int
    washout: int = 0
    period: int = 1
    p: float = 0.5

    def __post_init__(self):
        if self.kind not in DESIGN_KINDS:
            raise ConfigurationError(f"unknown design {self.kind!r}", "design.kind")
        if self.horizon < 1:
            raise ConfigurationError("horizon must be >= 1", "design.horizon")
        if self.washout < 0:
            raise ConfigurationError("washout must be >= 0", "design.washout")
        if self.period < 1:
            raise ConfigurationError("period must be >= 1", "design.period")
        if not 0.0 < self.p < 1.0:
            raise ConfigurationError("p must lie in (0, 1)", "design.p")

    def schedule(self):
        """Per-decision ``(first_dose_day, measurement_day)`` pairs."""
        n = self.horizon
        if self.kind == "rapid_bernoulli":
            return [(t, t) for t in range(n)]
        length = 1 if self.kind == "standard_imd" else self.period
        out = []
        d = 0
        while d + length <= n:
            out.append((d, d + length - 1))
            d += length + self.washout
        if not out:
            raise ConfigurationError(
                f"{self.kind} with period={length}, washout={self.washout} has no decision in T={n}",
                "design",
            )
        return out

    def n_decisions(self):
        return len(self.schedule())


@dataclass(frozen=True, eq=False)
class DesignRealization:
    """One realised design.

    ``path[t]`` is 1 when arm A (treatment) is applied on day t. Days with
    ``dosed[t]`` false receive no new dose in the standard designs; ``path`` is
    0 there. ``log`` holds ``(decision_index, day, arm)`` per decision.
    """

    spec: DesignSpec
    path: np.ndarray
    measured: np.ndarray
    dosed: np.ndarray
    decision_of_day: np.ndarray
    log: tuple = field(default_factory=tuple)

    @property
    def arms(self):
        """Decision arms as +-1 (A = +1)."""
        return np.array([2 * a - 1 for _, _, a in self.log], dtype=np.int8)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "x_t", "measured", "decision_index", "dosed"])
        for t in range(self.spec.horizon):
            d = int(self.decision_of_day[t])
            w.writerow([t, int(self.path[t]), int(self.measured[t]), "" if d < 0 else d, int(self.dosed[t])])
        return buf.getvalue()


def realize(spec, seed, key=()):
    """Draw a realisation of ``spec``; a pure function of ``(spec, seed, key)``."""
    schedule = spec.schedule()
    arms = coin_flips(bit_generator(seed, *key), len(schedule), spec.p)
    n = spec.horizon
    path = np.zeros(n, dtype=np.uint8)
    measured = np.zeros(n, dtype=bool)
    dosed = np.zeros(n, dtype=bool)
    decision_of_day = np.full(n, -1, dtype=np.int64)
    log = []
    for i, ((start, meas), arm) in enumerate(zip(schedule, arms)):
        path[start : meas + 1] = arm
        dosed[start : meas + 1] = True
        measured[meas] = True
        end = schedule[i + 1][0] if i + 1 < len(schedule) else n
        decision_of_day[start:end] = i
        log.append((i, start, int(arm)))
    for a in (path, measured, dosed, decision_of_day):
        a.setflags(write=False)
    return DesignRealization(spec, path, measured, dosed, decision_of_day, tuple(log))


def rapid_paths(horizon, seed, replicates, stream=(), start=0, p=0.5):
    """Rapid-design paths for replicates ``start .. start+replicates-1`` as a uint8 matrix.

    Row ``i`` equals ``realize(DesignSpec("rapid_bernoulli", T), seed, (*stream, start+i)).path``.
    """
    stream = tuple(stream)
    out = np.empty((replicates, horizon), dtype=np.uint8)
    for i in range(replicates):
        out[i] = coin_flips(bit_generator(seed, *stream, start + i), horizon, p)
    return out


def enumerate_paths(horizon):
    """Yield all ``2^T`` binary paths in lexicographic order."""
    if horizon < 1:
        raise DomainError("horizon must be >= 1")
    if horizon > ENUMERATION_CAP:
        raise RefusalError(f"refusing to enumerate 2^{horizon} paths (cap T <= {ENUMERATION_CAP})")
    for bits in itertools.product((0, 1), repeat=horizon):
        yield np.array(bits, dtype=np.uint8)


def path_matrix(horizon):
    """All paths as a ``(2^T, T)`` uint8 matrix in lexicographic order."""
    if horizon > ENUMERATION_CAP:
        raise RefusalError(f"refusing to enumerate 2^{horizon} paths (cap T <= {ENUMERATION_CAP})")
    idx = np.arange(1 << horizon, dtype=np.int64)
    shifts = np.arange(horizon - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def expected_decisions(spec):
    """Closed-form decision count, used to cross-check :meth:`DesignSpec.schedule`."""
    if spec.kind == "rapid_bernoulli":
        return spec.horizon
    if spec.kind == "standard_imd":
        return math.ceil(spec.horizon / (1 + spec.washout))
    if spec.horizon < spec.period:
        return 0
    return (spec.horizon - spec.period) // (spec.period + spec.washout) + 1
