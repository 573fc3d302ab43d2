"""Acceptance checks. Run with ``pytest tests/test_acceptance.py -s`` to see
the measured numbers; a one-line verdict per criterion is printed at the end
of every run."""

import json
import math
import time

import numpy as np
import pytest

from compound_rov.calibrate import calibrate_gbm, calibrate_mean_reverting
from compound_rov.cashflow import PayoffMatrix
from compound_rov.cli import main
from compound_rov.config import ScenarioConfig
from compound_rov.lsmc import BasisSpec, solve_compound, solve_single_option
from compound_rov.processes import (
    GbmParams,
    MeanRevParams,
    RiskNeutralParams,
    simulate_gbm,
    simulate_mean_reverting,
    simulate_risk_neutral_gbm,
)
from compound_rov.scenario import compare_standalone_vs_compound, run_sensitivity, run_valuation

from oracles import binomial_american_put, enumerate_compound

BENCH_SEED = 42


@pytest.fixture(scope="module")
def benchmark():
    return run_valuation(ScenarioConfig(seed=BENCH_SEED))


# 1 -------------------------------------------------------------------------

@pytest.mark.acceptance(1, "American put vs 2000-step binomial tree, |diff| <= 0.05, < 30 s")
def test_american_put_matches_binomial():
    K, s0, r, sigma, T, dates = 40.0, 36.0, 0.06, 0.2, 1.0, 50
    dt = T / dates
    reference = binomial_american_put(s0, K, r, sigma, T, steps=2000)

    start = time.perf_counter()
    paths = simulate_risk_neutral_gbm(RiskNeutralParams(r, sigma), s0, dates, 100_000, seed=2024, dt=dt)
    prices = paths.values[:, 1:]
    payoffs = PayoffMatrix(np.maximum(K - prices, 0.0), "put", tuple(range(1, dates + 1)), dt)
    sol = solve_single_option(payoffs, prices / K, basis=BasisSpec(max_degree=2), r=r)
    elapsed = time.perf_counter() - start

    print(f"\nLSMC {sol.value:.4f}  binomial {reference:.4f}  ({elapsed:.1f} s)")
    assert abs(sol.value - reference) <= 0.05
    assert elapsed < 30


# 2 -------------------------------------------------------------------------

def _tiny_instance(rng):
    n_paths = int(rng.integers(1, 5))
    n_inv = int(rng.integers(1, 4))
    n_exp = int(rng.integers(1, 4))
    invest = rng.normal(0.0, 10.0, (n_paths, n_inv))
    expand = rng.normal(0.0, 10.0, (n_paths, n_exp))
    inv_years = tuple(range(1, n_inv + 1))
    exp_years = tuple(range(n_inv + 1, n_inv + n_exp + 1))
    states_inv = rng.uniform(0.5, 2.0, (n_paths, n_inv))
    states_exp = rng.uniform(0.5, 2.0, (n_paths, n_exp))
    return (
        PayoffMatrix(invest, "invest", inv_years),
        PayoffMatrix(expand, "expand", exp_years),
        states_inv,
        states_exp,
    )


@pytest.mark.acceptance(2, "exact-mode compound value equals policy enumeration on tiny instances")
@pytest.mark.parametrize("instance", range(40))
def test_compound_matches_enumeration(instance):
    rng = np.random.default_rng(1000 + instance)
    invest, expand, s_inv, s_exp = _tiny_instance(rng)
    r = 0.06
    sol = solve_compound(invest, expand, s_inv, r=r, exact=True, expand_scenario=s_exp)
    expected = enumerate_compound(invest.values, expand.values, invest.times, expand.times, r)
    assert sol.deferral.value == pytest.approx(expected, rel=1e-9, abs=1e-12)


# 3 -------------------------------------------------------------------------

@pytest.mark.acceptance(3, "discounted risk-neutral GBM mean and mean-reverting level within 3 SE, < 10 s")
def test_martingale_and_stationarity():
    n = 100_000

    start = time.perf_counter()
    pv = simulate_risk_neutral_gbm(RiskNeutralParams(0.06, 0.09), 200.0, 10, n, seed=7)
    for t in range(1, 11):
        x = math.exp(-0.06 * t) * pv.values[:, t]
        se = x.std(ddof=1) / math.sqrt(n)
        assert abs(x.mean() - 200.0) <= 3 * se, t
    assert time.perf_counter() - start < 10

    start = time.perf_counter()
    fuel = simulate_mean_reverting(MeanRevParams(0.05, 2.6, 0.047), 2.6, 10, n, seed=7)
    for t in range(1, 11):
        x = fuel.values[:, t]
        se = x.std(ddof=1) / math.sqrt(n)
        assert abs(x.mean() - 2.6) <= 3 * se, t
    assert time.perf_counter() - start < 10


# 4 -------------------------------------------------------------------------

@pytest.mark.acceptance(4, "compound deferral value > standalone > 0, standard NPV < 0, recommend defer")
def test_compound_dominates_standalone():
    paired = compare_standalone_vs_compound(ScenarioConfig(seed=BENCH_SEED))
    report = run_valuation(ScenarioConfig(seed=BENCH_SEED))
    print(
        f"\nstandalone {paired.standalone_value:,.0f}  compound {paired.compound_value:,.0f}"
        f"  standard NPV {report.standard_npv:,.0f}  flexible NPV {report.flexible_npv:,.0f}"
    )
    assert paired.standalone_value > 0
    assert paired.compound_value > paired.standalone_value
    assert report.standard_npv < 0
    assert report.flexible_npv > 0
    assert report.recommendation == "defer"


# 5 -------------------------------------------------------------------------

@pytest.mark.acceptance(5, "deferral exercise mode is the last year of the first window on 5 seeds")
def test_modal_exercise_year(benchmark):
    last = ScenarioConfig().windows.invest_years[-1]
    assert benchmark.invest_frequency.mode == last
    for seed in (1, 2, 3, 4):
        rep = run_valuation(ScenarioConfig(seed=seed))
        assert rep.invest_frequency.mode == last, seed


# 6 -------------------------------------------------------------------------

@pytest.mark.acceptance(6, "sensitivity directions for mu_d, beta_f and sigma_d")
def test_sensitivity_directions():
    base, mu, beta, sigma = run_sensitivity(
        ScenarioConfig(seed=BENCH_SEED), {"mu_d": [0.03], "beta_f": [0.15], "sigma_d": [0.20]}
    )
    last = base.invest_frequency.years[-1]
    f = lambda rep: rep.invest_frequency.fraction(last)
    print(
        f"\noption value {base.option_value:,.0f} -> {mu.option_value:,.0f} (mu_d)"
        f"\nyear-{last} share {f(base):.3f} -> {f(beta):.3f} (beta_f), {f(sigma):.3f} (sigma_d)"
    )
    assert mu.option_value > base.option_value
    assert f(beta) > f(base)
    assert f(sigma) < f(base)


# 7 -------------------------------------------------------------------------

@pytest.mark.acceptance(7, "calibration recovers 50 random parameter draws within 3 SE, < 60 s")
def test_calibration_round_trip():
    rng = np.random.default_rng(42)
    start = time.perf_counter()
    worst = 0.0
    for i in range(50):
        mu, sigma = rng.uniform(0.01, 0.05), rng.uniform(0.05, 0.30)
        beta, s_bar, sigma_f = rng.uniform(0.05, 0.15), rng.uniform(2.0, 3.2), rng.uniform(0.03, 0.2)

        gbm = simulate_gbm(GbmParams(mu, sigma), 1.0, 4999, 1, seed=42_000 + i).values[0]
        fit = calibrate_gbm(gbm, 1.0)
        for name, truth in (("mu", mu), ("sigma", sigma)):
            z = abs(fit.estimates[name] - truth) / fit.standard_errors[name]
            worst = max(worst, z)
            assert z <= 3, (i, name, z)

        mr = simulate_mean_reverting(MeanRevParams(beta, s_bar, sigma_f), s_bar, 4999, 1, seed=43_000 + i).values[0]
        fit = calibrate_mean_reverting(mr, 1.0)
        for name, truth in (("beta", beta), ("s_bar", s_bar), ("sigma", sigma_f)):
            z = abs(fit.estimates[name] - truth) / fit.standard_errors[name]
            worst = max(worst, z)
            assert z <= 3, (i, name, z)
    elapsed = time.perf_counter() - start
    print(f"\nlargest |z| {worst:.2f}  ({elapsed:.1f} s)")
    assert elapsed < 60


# 8 -------------------------------------------------------------------------

@pytest.mark.acceptance(8, "flexible NPV identity and byte-identical repeated runs")
def test_report_identity_and_determinism(benchmark, tmp_path):
    assert benchmark.flexible_npv == benchmark.standard_npv + benchmark.option_value

    outputs = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["value", "--out", str(out), "--seed", "42", "--standalone"]) == 0
        outputs.append({p.name: p.read_bytes() for p in out.iterdir() if p.name != "manifest.json"})
    assert outputs[0].keys() == {"report.json", "stopping_times.csv", "standalone_vs_compound.json"}
    assert outputs[0] == outputs[1]
    doc = json.loads(outputs[0]["report.json"])
    assert doc["flexible_npv"] == doc["standard_npv"] + doc["option_value"]


# 9 -------------------------------------------------------------------------

@pytest.mark.acceptance(9, "benchmark run of 10 000 paths with degree-2 cross-term basis in < 60 s")
def test_benchmark_runtime():
    config = ScenarioConfig(seed=BENCH_SEED)
    assert config.n_paths == 10_000
    assert config.windows.horizon == 10
    assert config.basis.max_degree == 2 and config.basis.include_cross_terms
    start = time.perf_counter()
    run_valuation(config)
    elapsed = time.perf_counter() - start
    print(f"\nbenchmark run {elapsed:.2f} s")
    assert elapsed < 60
