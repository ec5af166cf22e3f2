"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Seeds are fixed up front; every check runs at its stated tolerance and
runtime limit. Run alone with ``pytest -v tests/test_acceptance.py``.
"""

import itertools
import math
import time
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from nof1.chaos_oracle import (
    chaos_moments_formula,
    enumerate_chaos_moments,
    enumerate_estimator_distribution,
    enumerate_quadratic_form,
    exact_estimand,
    exact_formula_variance,
    quadratic_form_moments,
)
from nof1.cli import main
from nof1.config import load_config
from nof1.inference import normality_diagnostics
from nof1.model import estimand, evaluate_parametric, leading_ones
from nof1.simulation import SimulationConfig, compare_designs, coverage_experiment
from nof1.variance import build_h_l, snr_analysis, variance

FIG_G = "1.00*0.65^t - 1.60*0.50^t + 0.75*0.48^t"

# published Table 1 values: (design, estimand) -> (ave, snr); design -> average response
TABLE1 = {
    ("standard_imd", "immediate"): (0.969, 0.833),
    ("standard_cum", "cumulative"): (1.525, 0.751),
    ("rapid_bernoulli", "immediate"): (1.017, 1.032),
    ("rapid_bernoulli", "cumulative"): (1.516, 0.770),
    ("rapid_bernoulli", "flip"): (0.517, 2.390),
}
TABLE1_RESPONSE = {"standard_imd": 1.536, "standard_cum": 2.268, "rapid_bernoulli": 2.918}


@pytest.fixture
def verdict(capsys):
    def report(number, ok, elapsed, limit, detail):
        ok = bool(ok) and elapsed < limit
        with capsys.disabled():
            print(f"\n[criterion {number:2d}] {'PASS' if ok else 'FAIL'} ({elapsed:.1f}s < {limit:g}s): {detail}")
        assert ok, detail

    return report


def _random_instance(rng, integer):
    n = int(rng.integers(1, 13))
    kind = ("linear", "circular")[int(rng.integers(0, 2))]
    if integer:
        g, q, e = rng.integers(-2, 3, (3, n))
    else:
        g, q, e = rng.standard_normal((3, n))
    return n, kind, g, q, e


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300) if b != 0 else abs(a)


def test_criterion_01_exact_unbiasedness(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    bad = []
    worst = 0.0
    for i in range(100):
        n, kind, g, q, e = _random_instance(rng, integer=True)
        d = enumerate_estimator_distribution(g, q, e, kind)
        if d.mean != exact_estimand(q, g, kind):
            bad.append(("rational", i))
    for i in range(100):
        n, kind, g, q, e = _random_instance(rng, integer=False)
        d = enumerate_estimator_distribution(g, q, e, kind)
        truth = estimand(q, g, kind)
        scale = float(np.sum(np.abs(q) * np.abs(g))) or 1.0
        err = abs(d.mean - truth) / max(abs(truth), scale)
        worst = max(worst, err)
        if err > 1e-10:
            bad.append(("float", i))
    verdict(1, not bad, time.perf_counter() - t0, 60, f"100 rational instances exact, 100 float instances worst rel err {worst:.1e}, failures {bad}")


def test_criterion_02_exact_variance(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    bad = []
    worst = 0.0
    for i in range(100):
        n, kind, g, q, e = _random_instance(rng, integer=True)
        d = enumerate_estimator_distribution(g, q, e, kind)
        if d.variance != exact_formula_variance(g, q, e, kind):
            bad.append(("rational", i))
    for i in range(100):
        n, kind, g, q, e = _random_instance(rng, integer=False)
        d = enumerate_estimator_distribution(g, q, e, kind)
        v = variance(g, q, e, kind).total
        err = _rel(v, d.variance)
        worst = max(worst, err)
        if err > 1e-10:
            bad.append(("float", i))
    verdict(2, not bad, time.perf_counter() - t0, 120, f"linear and circular formulas match enumeration; float worst rel err {worst:.1e}, failures {bad}")


def test_criterion_03_chaos_moments(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    bad = []
    for i in range(100):
        n = int(rng.integers(2, 11))
        W = np.triu(rng.integers(-3, 4, (n, n)), 1)
        W = W + W.T
        m = chaos_moments_formula(W)
        if (m.second, m.fourth) != enumerate_chaos_moments(W):
            bad.append(("chaos", i))
        M = rng.integers(-3, 4, (n, n))
        if quadratic_form_moments(M) != enumerate_quadratic_form(M):
            bad.append(("quadratic form", i))
    verdict(3, not bad, time.perf_counter() - t0, 60, f"100 random matrices, T <= 10, exact rational match; failures {bad}")


def test_criterion_04_table1(verdict):
    t0 = time.perf_counter()
    cfg = load_config("table1.cfg")
    assert cfg.replicates == 5000
    s = compare_designs(cfg)
    rows = {r["design"]: r for r in s.rows}
    problems, parts = [], []
    for (design, est), (ave, snr) in TABLE1.items():
        cell = rows[design][est]
        ok_ave = abs(cell["ave"] - ave) <= 3 * cell["se_ave"]
        ok_snr = abs(cell["snr"] - snr) <= 0.10 * snr
        parts.append(f"{design}/{est} ave {cell['ave']:.3f}({ave}) snr {cell['snr']:.3f}({snr})")
        if not (ok_ave and ok_snr):
            problems.append(f"{design}/{est}")
    for design, resp in TABLE1_RESPONSE.items():
        got = rows[design]["average_response"]
        parts.append(f"{design} resp {got:.3f}({resp})")
        if abs(got - resp) > 0.05:
            problems.append(f"{design}/response")
    verdict(4, not problems, time.perf_counter() - t0, 120, "; ".join(parts) + (f"; out of tolerance: {problems}" if problems else ""))


@pytest.fixture(scope="module")
def fig_coverage_200():
    cfg = replace(load_config("fig23.cfg"), horizons=(200,), models=("linear",), replicates=20000)
    t0 = time.perf_counter()
    s = coverage_experiment(cfg)
    return s.rows[0], time.perf_counter() - t0


def test_criterion_05_linear_coverage(verdict, fig_coverage_200):
    row, elapsed = fig_coverage_200
    cov = row["coverage"]
    ok = abs(cov - 0.9549) <= 0.007
    detail = (
        f"T=200 R=20000 coverage {100 * cov:.2f}% (target 95.49 +- 0.7); sigma {row['sigma']:.4f} "
        f"from the second-moment formula with the model's convolution; strictly circular sigma "
        f"{row['sigma_circular']:.4f} gives {100 * row['coverage_circular']:.2f}%, exact sigma "
        f"{row['sigma_exact']:.4f} gives {100 * row['coverage_exact']:.2f}%"
    )
    verdict(5, ok, elapsed, 300, detail)


@pytest.fixture(scope="module")
def fig_values_5000():
    cfg = replace(load_config("fig23.cfg"), horizons=(5000,), models=("circular", "linear"), replicates=20000)
    t0 = time.perf_counter()
    s = coverage_experiment(cfg, keep_values=True)
    return s, time.perf_counter() - t0


def test_criterion_06_normality(verdict, fig_values_5000):
    s, elapsed = fig_values_5000
    t0 = time.perf_counter()
    row = next(r for r in s.rows if r["model_kind"] == "circular")
    ks = row["ks_standardized"]
    # exact fourth-moment ratio of the quadratic term for the same response at small T
    worst = worst48 = 0.0
    fourth_ok = True
    for n in range(3, 13):
        g = evaluate_parametric(FIG_G, n)
        for K in range(1, n + 1):
            q = leading_ones(K, n)
            H = build_h_l(g, q, np.zeros(n), "circular").H
            W = H + H.T
            np.fill_diagonal(W, 0.0)
            m = chaos_moments_formula(W)
            diag = normality_diagnostics(g, q, np.zeros(n))
            if diag.undefined:
                continue
            gap = abs(m.fourth / m.second**2 - 3)
            worst = max(worst, gap / diag.fourth_moment_gap_bound)
            worst48 = max(worst48, gap / diag.fourth_moment_gap_bound_corrected)
            fourth_ok &= gap <= diag.fourth_moment_gap_bound
    ok = ks < 0.02 and fourth_ok
    detail = f"circular T=5000 R=20000 KS(standardized, N(0,1)) = {ks:.4f} (< 0.02); fourth-moment gap / (4/T + 16/T ratio) worst {worst:.3f} over T=3..12 (against 4/T + 48/T ratio: {worst48:.3f})"
    verdict(6, ok, elapsed + time.perf_counter() - t0, 600, detail)


def _corner_gap(n, K, g_full):
    g = np.zeros(n)
    g[:K] = g_full[:K]
    q = leading_ones(K, n).q
    D = build_h_l(g, q, np.zeros(n), "circular").H - build_h_l(g, q, np.zeros(n), "linear").H
    np.fill_diagonal(D, 0.0)
    idx = np.flatnonzero(np.any(np.abs(D) > 0, axis=0) | np.any(np.abs(D) > 0, axis=1))
    sub = D[np.ix_(idx, idx)]
    assert np.count_nonzero(D) == np.count_nonzero(sub)
    z = np.array(list(itertools.product((-1.0, 1.0), repeat=len(idx))))
    return float(np.max(np.abs(np.einsum("ri,ij,rj->r", z, sub, z)))) / n, len(idx)


def test_criterion_07_circular_linear_equivalence(verdict, fig_values_5000):
    s, elapsed = fig_values_5000
    t0 = time.perf_counter()
    K = 4
    horizons = (64, 256, 1024)
    g_full = evaluate_parametric(FIG_G, K)
    gaps, sizes = zip(*(_corner_gap(n, K, g_full) for n in horizons))
    xs = np.array([K**3 / n for n in horizons])
    c_fit = float(np.dot(xs, gaps) / np.dot(xs, xs))
    cs = [gap / x for gap, x in zip(gaps, xs)]
    stable = max(cs) / min(cs) - 1 < 0.01
    bounded = all(gap <= c_fit * x * (1 + 1e-9) for gap, x in zip(gaps, xs))
    vals = s.extra["_values"]
    ks = float(stats.ks_2samp(vals[("circular", 5000)], vals[("linear", 5000)]).statistic)
    ok = stable and bounded and ks < 0.02
    detail = (
        f"sup gap {', '.join(f'{v:.3e}' for v in gaps)} at T={horizons} (support {sizes}); "
        f"c = {', '.join(f'{c:.4f}' for c in cs)} (fit {c_fit:.4f}); two-sample KS at T=5000 = {ks:.4f} (< 0.02)"
    )
    verdict(7, ok, elapsed + time.perf_counter() - t0, 300, detail)


def test_criterion_08_plugin_validity(verdict):
    t0 = time.perf_counter()
    cfg = SimulationConfig(
        model_kind="circular",
        impulse_response="0.5^t",
        horizons=(200, 1000, 5000),
        replicates=20000,
        seed=20240808,
        plugin=True,
    )
    s = coverage_experiment(cfg)
    vq = [r["plugin_vq_median_abs_error"] for r in s.rows]
    vl = [r["plugin_vl_median_abs_error"] for r in s.rows]
    cov = s.rows[-1]["coverage_plugin"]
    dec = all(a > b for a, b in zip(vq, vq[1:])) and all(a > b for a, b in zip(vl, vl[1:]))
    ok = dec and abs(cov - 0.95) <= 0.01
    detail = (
        f"K={[r['K'] for r in s.rows]}; median |V_Q hat - V_Q| {', '.join(f'{v:.3f}' for v in vq)}; "
        f"median |V_L hat - V_L| {', '.join(f'{v:.3f}' for v in vl)}; plug-in coverage at T=5000 {100 * cov:.2f}%"
    )
    verdict(8, ok, time.perf_counter() - t0, 600, detail)


def test_criterion_09_snr(verdict):
    t0 = time.perf_counter()
    r = snr_analysis(2.0, 1.0, 0.5 ** np.arange(35), 35, 5, beta=0.5)
    ok = (
        r.v <= 0.34
        and r.v_bound <= 0.34
        and r.w <= 4
        and r.w_bound <= 4
        and r.prefactor_lower_bound_2dp == 0.48
        and r.rapid_prefactor >= 0.48
        and r.conservative_prefactor_2dp == 0.44
        and math.isclose(r.conservative_snr, r.ratio * math.sqrt(35) / math.sqrt(5))
    )
    detail = (
        f"v={r.v:.4f} (bound {r.v_bound:.4f}), w={r.w:.4f} (bound {r.w_bound:.0f}), rapid prefactor {r.rapid_prefactor:.4f} "
        f">= lower bound {r.prefactor_lower_bound:.5f} -> {r.prefactor_lower_bound_2dp:.2f}, conservative {r.conservative_prefactor:.4f} -> {r.conservative_prefactor_2dp:.2f}"
    )
    verdict(9, ok, time.perf_counter() - t0, 1, detail)


def test_criterion_10_determinism(verdict, tmp_path, capsys):
    t0 = time.perf_counter()
    runs = {
        "simulate": ["--config", "table1.cfg", "--replicates", "2100"],
        "coverage": ["--config", "fig23.cfg", "--replicates", "1100", "--horizon", "200,1000"],
        "compare-designs": ["--config", "table1.cfg", "--replicates", "1100"],
    }
    same = []
    for cmd, args in runs.items():
        blobs = []
        for threads in ("1", "2", "4"):
            out = tmp_path / f"{cmd}-{threads}"
            assert main([cmd, *args, "--threads", threads, "--format", "json", "--output-dir", str(out)]) == 0
            blobs.append(next(out.glob("*.json")).read_bytes())
        same.append(len(set(blobs)) == 1)
    capsys.readouterr()
    verdict(10, all(same), time.perf_counter() - t0, 60, f"byte-identical summary JSON across --threads 1/2/4 for {', '.join(runs)}: {same}")
