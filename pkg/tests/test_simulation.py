from dataclasses import replace

import numpy as np
import pytest

from nof1.design import DesignSpec, rapid_paths, realize
from nof1.errors import ConfigurationError
from nof1.estimation import Observation, ht_estimate, mom_estimate
from nof1.model import basis, estimand, leading_ones, simulate
from nof1.report import to_json
from nof1.simulation import (
    CHUNK,
    STREAMS,
    DesignEntry,
    SimulationConfig,
    compare_designs,
    compare_table_rows,
    consistency_sweep,
    coverage_experiment,
    loglog_slope,
    outcomes_batch,
    resolve_model,
    resolve_threads,
    run_monte_carlo,
    single_replicate,
)

pytestmark = pytest.mark.usefixtures("backend")

TABLE = SimulationConfig(
    model_kind="linear",
    impulse_response="0.5^t",
    horizons=(35,),
    replicates=300,
    seed=3,
    estimands=("immediate", "cumulative", "flip"),
    arms=(2.0, 1.0),
    designs=(DesignEntry("standard_imd", 5), DesignEntry("standard_cum", 5, 2), DesignEntry("rapid_bernoulli")),
)


def test_single_replicate_summary():
    cfg = replace(TABLE, replicates=1)
    s = run_monte_carlo(cfg)
    x, y = single_replicate(cfg, 35, 0)
    obs = Observation(x, y, "linear")
    assert s.rows[0]["ave"] == mom_estimate(obs, basis(0, 35))
    assert s.rows[0]["snr"] is None and s.rows[0]["std"] == 0.0
    assert s.extra["average_response"] == pytest.approx(float(np.mean(y)))


def test_replicates_are_independent_of_chunking():
    cfg = replace(TABLE, replicates=CHUNK + 37)
    s = run_monte_carlo(cfg, threads=3)
    vals = [mom_estimate(Observation(*single_replicate(cfg, 35, i), "linear"), basis(0, 35)) for i in range(cfg.replicates)]
    assert s.rows[0]["ave"] == pytest.approx(float(np.mean(vals)), rel=1e-12)


def test_thread_count_does_not_change_output():
    cfg = replace(TABLE, replicates=2 * CHUNK + 10, plugin=True)
    a = to_json(run_monte_carlo(cfg, threads=1).to_dict())
    b = to_json(run_monte_carlo(cfg, threads=4).to_dict())
    assert a == b


def test_threads_from_environment(monkeypatch):
    monkeypatch.setenv("NOF1_THREADS", "3")
    assert resolve_threads() == 3
    assert resolve_threads(2) == 2
    monkeypatch.setenv("NOF1_THREADS", "x")
    with pytest.raises(ConfigurationError):
        resolve_threads()
    with pytest.raises(ConfigurationError):
        resolve_threads(0)


@pytest.mark.parametrize("circular", [False, True])
@pytest.mark.parametrize("support", [5, 100])
def test_outcomes_batch_matches_simulate(circular, support):
    n = 150
    rng = np.random.default_rng(support)
    x = (rng.random((3, n)) < 0.5).astype(np.uint8)
    g = np.zeros(n)
    g[:support] = rng.standard_normal(support)
    e = rng.standard_normal(n)
    kind = "circular" if circular else "linear"
    y = outcomes_batch(x, g, e, circular)
    for i in range(3):
        np.testing.assert_allclose(y[i], simulate(x[i], g, e, kind), atol=1e-9)


def test_arms_model_resolution():
    m = resolve_model(TABLE, 35, "linear")
    base = 0.5 ** np.arange(35)
    np.testing.assert_allclose(m.g, base)
    np.testing.assert_allclose(m.e, np.cumsum(base))
    m2 = resolve_model(replace(TABLE, baseline="impulse"), 35, "linear")
    np.testing.assert_allclose(m2.e, base)


def test_standard_design_estimate_by_hand():
    cfg = replace(TABLE, replicates=4, designs=(DesignEntry("standard_imd", 5),), estimands=("immediate", "flip"))
    s = compare_designs(cfg)
    base = 0.5 ** np.arange(35)
    taus, resp = [], []
    for i in range(4):
        r = realize(DesignSpec("standard_imd", 35, 5), cfg.seed, (STREAMS["standard_imd"], 35, i))
        on = r.dosed.astype(float)
        a = r.path.astype(float)
        y = np.convolve(a, 2 * base)[:35] + np.convolve(on - a, base)[:35]
        taus.append(ht_estimate(y[r.measured], r.arms))
        resp.append(y[r.measured].mean())
    row = s.rows[0]
    assert row["immediate"]["ave"] == pytest.approx(np.mean(taus), rel=1e-12)
    assert row["flip"] is None
    assert row["average_response"] == pytest.approx(np.mean(resp), rel=1e-12)


def test_compare_table_layout():
    s = compare_designs(TABLE)
    table = compare_table_rows(s, TABLE.estimands)
    assert table[0] == ["design", "immediate_ave", "immediate_snr", "cumulative_ave", "cumulative_snr", "flip_ave", "flip_snr", "average_response"]
    assert [r[0] for r in table[1:]] == ["standard_imd", "standard_cum", "rapid_bernoulli"]
    assert table[1][3:7] == ["N/A"] * 4
    assert table[2][1:3] == ["N/A"] * 2 and table[2][5:7] == ["N/A"] * 2
    assert "N/A" not in table[3]


def test_compare_needs_arms_and_feasible_designs():
    with pytest.raises(ConfigurationError):
        compare_designs(replace(TABLE, arms=None))
    with pytest.raises(ConfigurationError):
        compare_designs(replace(TABLE, horizons=(1,), designs=(DesignEntry("standard_cum", 0, 2),)))


def test_monte_carlo_truth_and_coverage():
    cfg = SimulationConfig(model_kind="circular", impulse_response="0.6^t", error="0.5*sin(0.3*t)", horizons=(80,), replicates=2000, seed=1, estimands=("ate", "cumulative"))
    s = run_monte_carlo(cfg)
    for row in s.rows:
        assert abs(row["ave"] - row["truth"]) < 4 * row["se_ave"]
        assert abs(row["std"] - row["exact_std"]) < 0.06 * row["exact_std"]
        assert 0.93 < row["coverage"] < 0.97


def test_coverage_rows():
    cfg = SimulationConfig(model_kind="linear", impulse_response="0.5^t", horizons=(60, 120), replicates=600, seed=2, K=4, models=("circular", "linear"), plugin=True)
    s = coverage_experiment(cfg, keep_values=True)
    assert [(r["model_kind"], r["horizon"]) for r in s.rows] == [("circular", 60), ("circular", 120), ("linear", 60), ("linear", 120)]
    for r in s.rows:
        assert 0 <= r["coverage"] <= 1 and 0 <= r["coverage_plugin"] <= 1
        g = 0.5 ** np.arange(r["horizon"])
        assert r["truth"] == pytest.approx(estimand(leading_ones(4, r["horizon"]), g, r["model_kind"]))
    assert s.extra["_values"][("linear", 60)].shape == (600,)
    assert "_values" not in to_json(s.to_dict())


def test_consistency_sweep_rate():
    cfg = SimulationConfig(model_kind="circular", impulse_response="0.5^t", horizons=(200, 1000, 5000), replicates=300, seed=4)
    s = consistency_sweep(cfg)
    assert -0.65 < s.extra["loglog_slope"] < -0.35
    assert [r["K"] for r in s.rows] == [11, 14, 18]


def test_consistency_with_bounded_error():
    cfg = SimulationConfig(model_kind="circular", impulse_response="0.5^t", error="2*sin(0.7*t)", horizons=(200, 1000, 5000), replicates=300, seed=5)
    assert -0.65 < consistency_sweep(cfg).extra["loglog_slope"] < -0.35


def test_consistency_with_one_lag_is_immediate_effect_error():
    cfg = SimulationConfig(model_kind="circular", horizons=(50, 100), replicates=50, seed=6, K=1)
    s = consistency_sweep(cfg)
    g = 0.5 ** np.arange(50)
    x = rapid_paths(50, cfg.seed, 50, (STREAMS["consistency"], 50))
    errs = [abs(mom_estimate(Observation(xi, simulate(xi, g, np.zeros(50), "circular"), "circular"), basis(0, 50)) - 1.0) for xi in x]
    assert s.rows[0]["median"] == pytest.approx(float(np.median(errs)), rel=1e-12)


def test_loglog_slope():
    assert loglog_slope([1, 10, 100], [1, 0.1, 0.01]) == pytest.approx(-1.0)


def test_snr_grows_like_root_t():
    cfg = SimulationConfig(model_kind="linear", horizons=(35,), replicates=2000, seed=7, arms=(2.0, 1.0))
    snrs = [run_monte_carlo(cfg, T).rows[0]["snr"] for T in (35, 140, 560)]
    assert 0.4 < loglog_slope([35, 140, 560], snrs) < 0.6


def test_config_validation():
    for kw in ({"replicates": 0}, {"alpha": 1.5}, {"K": 0}, {"baseline": "x"}, {"variance_source": "x"}, {"horizons": ()}):
        with pytest.raises(ConfigurationError):
            SimulationConfig(**kw)
    with pytest.raises(ConfigurationError):
        SimulationConfig(K=50).K_for(10)
