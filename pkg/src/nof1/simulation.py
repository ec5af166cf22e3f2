"""Monte Carlo harness: design comparison, coverage and consistency experiments.

Determinism: replicate ``i`` of an experiment draws its path from the key
``(stream, T, i)`` (see :mod:`nof1.design`), replicates are processed in
fixed-size chunks whose boundaries do not depend on the thread count, and every
reduction runs over the fully assembled, index-ordered result arrays. Any
``threads`` value therefore gives bit-identical summaries.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from ._backend import kernels
from .design import DesignSpec, bit_generator, coin_flips, rapid_paths, realize
from .errors import ConfigurationError, DomainError
from .estimation import estimate_g_batch, ht_estimate, mom_estimate_batch
from .inference import normal_quantile
from .model import (
    EstimandWeights,
    check_model_kind,
    default_K,
    estimand,
    evaluate_parametric,
    leading_ones,
    make_estimand,
    support_size,
)
from .signal import as_signal, convolve
from .variance import plugin_variance_batch, second_moment_formula, variance, variance_circular

SCHEMA_VERSION = 1
CHUNK = 500
DIRECT_ROW_SUPPORT = 64
VARIANCE_SOURCES = ("second_moment", "circular", "model")

# Independent random streams per experiment
STREAMS = {
    "rapid_bernoulli": 0,
    "standard_imd": 1,
    "standard_cum": 2,
    "circular": 10,
    "linear": 11,
    "consistency": 20,
}


@dataclass(frozen=True)
class DesignEntry:
    kind: str
    washout: int = 0
    period: int = 1

    def spec(self, horizon):
        return DesignSpec(self.kind, horizon, self.washout, self.period)


@dataclass(frozen=True)
class SimulationConfig:
    """Description of a Monte Carlo experiment.

    ``impulse_response`` and ``error`` are parametric expressions (see
    :func:`nof1.model.parse_parametric`), explicit tuples, or ``"zero"`` for
    the error. When ``arms`` is set, ``impulse_response`` is the base response
    ``g_base`` and the treatment contrast is ``g = (A - B) g_base``; the
    baseline response to arm B enters as the error, either as the outcome
    path ``1 * (B g_base)`` (``baseline="path"``) or as ``B g_base`` itself
    (``baseline="impulse"``). ``K=None`` means ``ceil(2 log T)``.
    """

    model_kind: str = "circular"
    impulse_response: object = "0.5^t"
    error: object = "zero"
    horizons: tuple = (35,)
    replicates: int = 1000
    seed: int = 0
    K: int | None = None
    alpha: float = 0.05
    estimands: tuple = ("immediate",)
    designs: tuple = (DesignEntry("rapid_bernoulli"),)
    arms: tuple | None = None
    baseline: str = "path"
    models: tuple = ()
    band: float = 2.0
    variance_source: str = "second_moment"
    plugin: bool = False
    bins: int = 50
    threads: int | None = None

    def __post_init__(self):
        check_model_kind(self.model_kind)
        for m in self.models:
            check_model_kind(m)
        if self.replicates < 1:
            raise ConfigurationError("replicates must be >= 1", "simulation.replicates")
        if not self.horizons or any(int(t) < 1 for t in self.horizons):
            raise ConfigurationError("horizons must be positive", "model.horizon")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError("alpha must lie in (0, 1)", "estimand.alpha")
        if self.baseline not in ("path", "impulse"):
            raise ConfigurationError("baseline must be 'path' or 'impulse'", "arms.baseline")
        if self.variance_source not in VARIANCE_SOURCES:
            raise ConfigurationError(f"variance_source must be one of {VARIANCE_SOURCES}", "simulation.variance_source")
        if self.K is not None and self.K < 1:
            raise ConfigurationError("K must be >= 1", "estimand.K")
        if self.bins < 1:
            raise ConfigurationError("bins must be >= 1", "simulation.bins")

    def K_for(self, horizon):
        K = default_K(horizon) if self.K is None else self.K
        if K > horizon:
            raise ConfigurationError(f"K={K} exceeds horizon {horizon}", "estimand.K")
        return K

    def model_list(self):
        return tuple(self.models) if self.models else (self.model_kind,)


def resolve_threads(threads=None):
    if threads is None:
        env = os.environ.get("NOF1_THREADS")
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise ConfigurationError(f"NOF1_THREADS must be an integer, got {env!r}", "NOF1_THREADS") from None
        else:
            threads = 1
    if threads < 1:
        raise ConfigurationError("threads must be >= 1", "threads")
    return threads


def _map_chunks(fn, total, threads):
    """Apply ``fn(start, stop)`` over fixed chunks; results in chunk order."""
    bounds = [(lo, min(total, lo + CHUNK)) for lo in range(0, total, CHUNK)]
    threads = resolve_threads(threads)
    if threads == 1 or len(bounds) == 1:
        return [fn(lo, hi) for lo, hi in bounds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda b: fn(*b), bounds))


def _signal(spec, horizon, name):
    if isinstance(spec, str):
        if spec.strip().lower() == "zero":
            return as_signal(np.zeros(horizon), name)
        return evaluate_parametric(spec, horizon)
    arr = np.asarray(spec, dtype=np.float64)
    if arr.shape[0] < horizon:
        arr = np.concatenate([arr, np.zeros(horizon - arr.shape[0])])
    return as_signal(arr[:horizon], name)


@dataclass(frozen=True, eq=False)
class ResolvedModel:
    g: np.ndarray
    e: np.ndarray
    g_a: np.ndarray | None = None
    g_b: np.ndarray | None = None


def resolve_model(cfg, horizon, model_kind=None):
    """Concrete ``g`` and ``e`` (and arm responses) for a horizon."""
    kind = model_kind or cfg.model_kind
    base = _signal(cfg.impulse_response, horizon, "impulse_response")
    e = _signal(cfg.error, horizon, "error")
    if cfg.arms is None:
        return ResolvedModel(base, e)
    A, B = (float(v) for v in cfg.arms)
    g_a, g_b = A * base, B * base
    if cfg.baseline == "path":
        e = e + convolve(np.ones(horizon), g_b, kind == "circular")
    else:
        e = e + g_b
    return ResolvedModel(as_signal(g_a - g_b), as_signal(e), as_signal(g_a), as_signal(g_b))


def outcomes_batch(x, g, e, circular):
    """Row-wise ``y = x * g + e`` for a ``(R, T)`` 0/1 matrix."""
    x = np.ascontiguousarray(x, dtype=np.uint8)
    g = np.ascontiguousarray(g, dtype=np.float64)
    n = x.shape[1]
    kg = support_size(g)
    if kg <= DIRECT_ROW_SUPPORT:
        conv = kernels.conv_circular_rows if circular else kernels.conv_linear_rows
        y = conv(x, g, kg)
    else:
        m = n if circular else 2 * n
        y = np.fft.irfft(np.fft.rfft(x.astype(np.float64), m, axis=1) * np.fft.rfft(g, m), m, axis=1)[:, :n]
    return np.ascontiguousarray(y + e[None, :])


def _estimand_pair(kind, horizon, K):
    q, qp = make_estimand(kind, horizon, K)
    return q, qp


def _moments(values):
    r = values.shape[0]
    ave = float(np.mean(values))
    std = float(np.std(values, ddof=1)) if r > 1 else 0.0
    snr = ave / std if std > 0 else None
    se_ave = std / math.sqrt(r) if r > 1 else 0.0
    se_snr = math.sqrt((1.0 + 0.5 * snr * snr) / r) if snr is not None else None
    return {"ave": ave, "std": std, "snr": snr, "se_ave": se_ave, "se_snr": se_snr}


def _histogram(values, bins):
    counts, edges = np.histogram(values, bins=bins)
    return {"bin_edges": [float(v) for v in edges], "counts": [int(c) for c in counts]}


@dataclass
class SimulationSummary:
    """Aggregate results; ``to_dict`` gives the JSON report body."""

    kind: str
    config: dict
    rows: list = field(default_factory=list)
    histograms: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        out = {"schema_version": SCHEMA_VERSION, "kind": self.kind, "config": self.config, "rows": self.rows}
        out.update(self.extra)
        if self.histograms:
            out["histograms"] = self.histograms
        return out


def config_dict(cfg):
    d = {}
    for k, v in cfg.__dict__.items():
        if k == "threads":
            continue
        if k == "designs":
            v = [dict(kind=x.kind, washout=x.washout, period=x.period) for x in v]
        elif isinstance(v, tuple):
            v = list(v)
        d[k] = v
    return d


def run_monte_carlo(cfg, horizon=None, model_kind=None, threads=None):
    """Rapid-design Monte Carlo of every configured estimand at one horizon.

    Rows report ``ave``/``std``/``snr`` with Monte Carlo standard errors and
    the coverage of the ``1 - alpha`` interval built from the exact variance;
    with ``cfg.plugin`` the plug-in interval's coverage is reported as well.
    """
    n = int(horizon or cfg.horizons[0])
    kind = model_kind or cfg.model_kind
    circular = kind == "circular"
    model = resolve_model(cfg, n, kind)
    K = cfg.K_for(n)
    ests = []
    for name in cfg.estimands:
        q, qp = _estimand_pair(name, n, K)
        diff = q.q - (qp.q if qp is not None else 0.0)
        truth = estimand(q, model.g, kind) - (estimand(qp, model.g, kind) if qp is not None else 0.0)
        var = variance(model.g, EstimandWeights.from_vector(diff), model.e, kind)
        ests.append((name, q, qp, diff, truth, var))
    plug_k = None
    if cfg.plugin:
        plug_k = max([K] + [support_size(diff) for _, _, _, diff, _, _ in ests])
        if 2 * plug_k > n:
            raise ConfigurationError(f"plug-in needs 2K <= T (K={plug_k}, T={n})", "estimand.K")
    stream = (STREAMS["rapid_bernoulli"], n)
    zq = normal_quantile(1.0 - cfg.alpha / 2.0)

    def chunk(lo, hi):
        x = rapid_paths(n, cfg.seed, hi - lo, stream, lo)
        y = outcomes_batch(x, model.g, model.e, circular)
        cols = []
        for _, q, qp, diff, _, _ in ests:
            t = mom_estimate_batch(x, y, q, circular)
            if qp is not None:
                t = t - mom_estimate_batch(x, y, qp, circular)
            cols.append(t)
        resp = y.mean(axis=1)
        plug = []
        if plug_k is not None:
            for _, _, _, diff, _, _ in ests:
                vq, vl = plugin_variance_batch(x, y, diff, plug_k, circular)
                plug.append((np.maximum(vq, 0.0) + vl) / n)
        return np.array(cols), resp, np.array(plug) if plug else None

    parts = _map_chunks(chunk, cfg.replicates, threads)
    taus = np.concatenate([p[0] for p in parts], axis=1)
    resp = np.concatenate([p[1] for p in parts])
    plug = np.concatenate([p[2] for p in parts], axis=1) if plug_k is not None else None
    summary = SimulationSummary("monte_carlo", config_dict(cfg))
    for i, (name, _, _, _, truth, var) in enumerate(ests):
        t = taus[i]
        row = {"design": "rapid_bernoulli", "estimand": name, "model_kind": kind, "horizon": n, "truth": truth}
        row.update(_moments(t))
        row["exact_std"] = math.sqrt(var.total)
        row["coverage"] = float(np.mean(np.abs(t - truth) <= zq * math.sqrt(var.total)))
        if plug is not None:
            row["coverage_plugin"] = float(np.mean(np.abs(t - truth) <= zq * np.sqrt(plug[i])))
        summary.rows.append(row)
        summary.histograms[name] = _histogram(t, cfg.bins)
    summary.extra["average_response"] = float(np.mean(resp))
    summary.extra["average_response_se"] = float(np.std(resp, ddof=1) / math.sqrt(resp.shape[0])) if resp.shape[0] > 1 else 0.0
    return summary


# Design comparison ---------------------------------------------------------

_DESIGN_TARGET = {"standard_imd": "immediate", "standard_cum": "cumulative"}


def _standard_design_chunk(cfg, entry, n, model, lo, hi):
    spec = entry.spec(n)
    taus = np.empty(hi - lo)
    resp = np.empty(hi - lo)
    resp_all = np.empty(hi - lo)
    extra = _signal(cfg.error, n, "error")
    for i in range(lo, hi):
        real = realize(spec, cfg.seed, (STREAMS[entry.kind], n, i))
        on = real.dosed.astype(np.float64)
        arm_a = real.path.astype(np.float64)
        y = convolve(arm_a, model.g_a, False) + convolve(on - arm_a, model.g_b, False)
        y = y + extra
        meas = y[real.measured]
        taus[i - lo] = ht_estimate(meas, real.arms)
        resp[i - lo] = float(np.mean(meas))
        resp_all[i - lo] = float(np.mean(y))
    return taus, resp, resp_all


def compare_designs(cfg, horizon=None, threads=None):
    """Table of ``ave``/``snr`` per design and estimand with average responses.

    Standard designs use the Horvitz-Thompson estimator on their measured
    days and only target one estimand; other cells are ``None`` (N/A). The
    rapid design uses the linear-model method-of-moments estimator. The
    average response is the mean outcome over measured days, with the
    all-days mean reported alongside.
    """
    if cfg.arms is None:
        raise ConfigurationError("compare-designs needs arms A and B", "arms")
    n = int(horizon or cfg.horizons[0])
    model = resolve_model(cfg, n, "linear")
    summary = SimulationSummary("compare_designs", config_dict(cfg))
    for entry in cfg.designs:
        entry.spec(n).schedule()  # configuration errors before any replicate runs
    for entry in cfg.designs:
        row = {"design": entry.kind}
        if entry.kind == "rapid_bernoulli":
            rc = replace(cfg, model_kind="linear", plugin=False)
            mc = run_monte_carlo(rc, n, "linear", threads)
            for r in mc.rows:
                row[r["estimand"]] = {k: r[k] for k in ("ave", "snr", "se_ave", "se_snr", "std", "truth")}
            row["average_response"] = mc.extra["average_response"]
            row["average_response_se"] = mc.extra["average_response_se"]
            row["average_response_all_days"] = mc.extra["average_response"]
            for name, h in mc.histograms.items():
                summary.histograms[f"{entry.kind}:{name}"] = h
        else:
            parts = _map_chunks(lambda lo, hi: _standard_design_chunk(cfg, entry, n, model, lo, hi), cfg.replicates, threads)
            taus = np.concatenate([p[0] for p in parts])
            resp = np.concatenate([p[1] for p in parts])
            resp_all = np.concatenate([p[2] for p in parts])
            target = _DESIGN_TARGET[entry.kind]
            for name in cfg.estimands:
                if name == target:
                    row[name] = _moments(taus)
                    row[name]["truth"] = None
                else:
                    row[name] = None
            row["average_response"] = float(np.mean(resp))
            row["average_response_se"] = float(np.std(resp, ddof=1) / math.sqrt(resp.shape[0])) if resp.shape[0] > 1 else 0.0
            row["average_response_all_days"] = float(np.mean(resp_all))
            summary.histograms[f"{entry.kind}:{target}"] = _histogram(taus, cfg.bins)
        summary.rows.append(row)
    return summary


def compare_table_rows(summary, estimands):
    """Flatten a design comparison into CSV rows (``N/A`` for untargeted cells)."""
    header = ["design"]
    for name in estimands:
        header += [f"{name}_ave", f"{name}_snr"]
    header += ["average_response"]
    rows = [header]
    for row in summary.rows:
        line = [row["design"]]
        for name in estimands:
            cell = row.get(name)
            if cell is None:
                line += ["N/A", "N/A"]
            else:
                line += [f"{cell['ave']:.3f}", "N/A" if cell["snr"] is None else f"{cell['snr']:.3f}"]
        line.append(f"{row['average_response']:.3f}")
        rows.append(line)
    return rows


# Coverage and normality ----------------------------------------------------


def _ks_normal(values, mean, std):
    if std <= 0:
        return 1.0
    return float(stats.kstest((values - mean) / std, "norm").statistic)


def coverage_experiment(cfg, threads=None, keep_values=False):
    """Histograms and band coverage of ``tau_hat(1_{<K})`` for each model and horizon.

    The band is ``truth +- band * sigma``. ``variance_source`` picks
    ``sigma^2``: ``"second_moment"`` evaluates the closed form
    ``(V_Q + V_L) / T`` with the data model's convolution, ``"circular"``
    always uses circular convolution, ``"model"`` is the data model's exact
    variance. Coverage under all three is reported. KS distances are given
    for the estimator standardised by ``sigma`` and against a fitted normal.
    """
    summary = SimulationSummary("coverage", config_dict(cfg))
    values = {}
    for kind in cfg.model_list():
        circular = kind == "circular"
        for n in cfg.horizons:
            n = int(n)
            model = resolve_model(cfg, n, kind)
            K = cfg.K_for(n)
            q = leading_ones(K, n)
            truth = estimand(q, model.g, kind)
            var_c = variance_circular(model.g, q, model.e)
            var_m = variance(model.g, q, model.e, kind)
            var_s = second_moment_formula(model.g, q, model.e, kind)
            var = {"circular": var_c, "model": var_m, "second_moment": var_s}[cfg.variance_source]
            sd = math.sqrt(var.total)
            plug_ok = cfg.plugin and 2 * K <= n
            stream = (STREAMS[kind], n)

            def chunk(lo, hi, n=n, model=model, q=q, K=K, stream=stream):
                x = rapid_paths(n, cfg.seed, hi - lo, stream, lo)
                y = outcomes_batch(x, model.g, model.e, circular)
                t = mom_estimate_batch(x, y, q, circular)
                if plug_ok:
                    vq, vl = plugin_variance_batch(x, y, q, K, circular)
                    return t, vq, vl
                return t, None, None

            parts = _map_chunks(chunk, cfg.replicates, threads)
            t = np.concatenate([p[0] for p in parts])
            row = {"model_kind": kind, "horizon": n, "K": K, "truth": truth, "v_q": var.v_quadratic, "v_l": var.v_linear}
            row.update(_moments(t))
            row["sigma"] = sd
            row["sigma_circular"] = math.sqrt(var_c.total)
            row["sigma_exact"] = math.sqrt(var_m.total)
            row["coverage_circular"] = float(np.mean(np.abs(t - truth) <= cfg.band * row["sigma_circular"]))
            row["coverage_exact"] = float(np.mean(np.abs(t - truth) <= cfg.band * row["sigma_exact"]))
            inside = np.abs(t - truth) <= cfg.band * sd
            row["coverage"] = float(np.mean(inside))
            row["coverage_se"] = float(math.sqrt(row["coverage"] * (1 - row["coverage"]) / t.shape[0]))
            row["ks_standardized"] = _ks_normal(t, truth, sd)
            row["ks_fitted"] = _ks_normal(t, row["ave"], row["std"])
            if plug_ok:
                vq = np.concatenate([p[1] for p in parts])
                vl = np.concatenate([p[2] for p in parts])
                tot = (np.maximum(vq, 0.0) + vl) / n
                zq = normal_quantile(1.0 - cfg.alpha / 2.0)
                row["coverage_plugin"] = float(np.mean(np.abs(t - truth) <= zq * np.sqrt(tot)))
                own = var_c if circular else var_m
                row["plugin_vq_median_abs_error"] = float(np.median(np.abs(vq - own.v_quadratic)))
                row["plugin_vl_median_abs_error"] = float(np.median(np.abs(vl - own.v_linear)))
                row["plugin_vq_negative_fraction"] = float(np.mean(vq < 0))
            summary.rows.append(row)
            summary.histograms[f"{kind}:{n}"] = _histogram(t, cfg.bins)
            if keep_values:
                values[(kind, n)] = t
    if keep_values:
        summary.extra["_values"] = values
    return summary


# Consistency ---------------------------------------------------------------


def loglog_slope(horizons, values):
    """Least-squares slope of ``log(values)`` against ``log(horizons)``."""
    x = np.log(np.asarray(horizons, dtype=np.float64))
    y = np.log(np.asarray(values, dtype=np.float64))
    if x.shape[0] < 2:
        raise DomainError("need at least two horizons for a slope")
    return float(np.polyfit(x, y, 1)[0])


def consistency_sweep(cfg, threads=None):
    """Quantiles of ``sup_{k<K} |g_hat_k - E g_hat_k|`` per horizon and the log-log slope of the median."""
    summary = SimulationSummary("consistency", config_dict(cfg))
    kind = cfg.model_kind
    circular = kind == "circular"
    medians = []
    for n in cfg.horizons:
        n = int(n)
        model = resolve_model(cfg, n, kind)
        K = cfg.K_for(n)
        target = np.array([estimand(_basis_weights(k, n), model.g, kind) for k in range(K)])
        stream = (STREAMS["consistency"], n)

        def chunk(lo, hi, n=n, model=model, K=K, target=target, stream=stream):
            x = rapid_paths(n, cfg.seed, hi - lo, stream, lo)
            y = outcomes_batch(x, model.g, model.e, circular)
            gh = estimate_g_batch(x, y, K, circular)
            return np.max(np.abs(gh - target[None, :]), axis=1)

        err = np.concatenate(_map_chunks(chunk, cfg.replicates, threads))
        med = float(np.median(err))
        medians.append(med)
        summary.rows.append(
            {
                "model_kind": kind,
                "horizon": n,
                "K": K,
                "median": med,
                "q10": float(np.quantile(err, 0.1)),
                "q90": float(np.quantile(err, 0.9)),
                "max": float(np.max(err)),
                "rate_log_t_over_sqrt_t": math.log(n) / math.sqrt(n),
            }
        )
    if len(medians) >= 2:
        summary.extra["loglog_slope"] = loglog_slope([int(t) for t in cfg.horizons], medians)
    return summary


def _basis_weights(k, n):
    q = np.zeros(n)
    q[k] = 1.0
    return EstimandWeights(q, k + 1)


def single_replicate(cfg, horizon, replicate, model_kind=None):
    """The ``(x, y)`` pair of one rapid-design replicate, as drawn by :func:`run_monte_carlo`."""
    n = int(horizon)
    kind = model_kind or cfg.model_kind
    model = resolve_model(cfg, n, kind)
    x = coin_flips(bit_generator(cfg.seed, STREAMS["rapid_bernoulli"], n, replicate), n)
    y = outcomes_batch(x.reshape(1, n), model.g, model.e, kind == "circular")[0]
    return x, y
