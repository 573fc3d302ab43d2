import json

import numpy as np
import pytest

from compound_rov.config import ConfigError, ScenarioConfig, config_from_dict, load_config, resolve_parameter
from compound_rov.lsmc import solve_compound, solve_single_option
from compound_rov.scenario import (
    compare_standalone_vs_compound,
    recommend,
    run_sensitivity,
    run_valuation,
    sensitivity_series,
    simulate_scenario,
    write_series,
    write_table,
)
from compound_rov.cashflow import build_payoff_matrices, capacity_plan

from oracles import enumerate_compound, enumerate_single

SMALL = 2000


def deterministic(**overrides):
    base = {"sigma_d": 0.0, "sigma_f": 0.0, "sigma_pv": 0.0, "n_paths": 200}
    base.update(overrides)
    return ScenarioConfig().with_overrides(base)


@pytest.fixture(scope="module")
def bench():
    return run_valuation(ScenarioConfig())


# config ----------------------------------------------------------------------

def test_defaults_match_benchmark():
    cfg = ScenarioConfig()
    p = cfg.processes
    assert (p.demand.mu, p.demand.sigma) == (0.015, 0.098)
    assert (p.fuel.beta, p.fuel.s_bar, p.fuel.sigma) == (0.05, 2.6, 0.047)
    assert (p.pv_cost.r, p.pv_cost.sigma) == (0.06, 0.09)
    assert (cfg.n_paths, cfg.seed) == (10_000, 42)
    assert cfg.windows.invest_years == (1, 2, 3, 4, 5)


def test_round_trip_through_dict():
    cfg = ScenarioConfig().with_overrides({"mu_d": 0.03, "lsmc.expansion_value_mode": "regressed"})
    again = config_from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again.to_dict() == cfg.to_dict()
    assert again.digest() == cfg.digest()
    assert again.digest() != ScenarioConfig().digest()


def test_partial_document_fills_defaults(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"run": {"seed": 7}}))
    cfg = load_config(path)
    assert cfg.seed == 7 and cfg.n_paths == 10_000


def test_every_problem_is_reported():
    doc = {"run": {"n_paths": 0, "seed": -1}, "costs": {"r": -0.1}, "lsmc": {"expansion_value_mode": "x"}}
    with pytest.raises(ConfigError) as info:
        config_from_dict(doc)
    text = "\n".join(info.value.problems)
    for needle in ("n_paths", "seed", "r must be", "expansion_value_mode"):
        assert needle in text


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError):
        config_from_dict({"costs": {"c_xyz": 1.0}})


def test_sizing_year_outside_horizon_rejected():
    with pytest.raises(ConfigError):
        config_from_dict({"run": {"sizing_year": 11}})


def test_few_paths_warn():
    with pytest.warns(UserWarning):
        ScenarioConfig().with_overrides({"n_paths": 10})


def test_unknown_parameter_name():
    with pytest.raises(ConfigError, match="mu_x"):
        resolve_parameter("mu_x")
    assert resolve_parameter("beta_f") == ("processes", "fuel", "beta")
    assert resolve_parameter("costs.c_om") == ("costs", "c_om")


# recommendation -----------------------------------------------------------------

@pytest.mark.parametrize(
    "npv, option, expected",
    [(-10.0, 5.0, "defer"), (10.0, 5.0, "defer"), (10.0, 0.0, "invest now"), (-10.0, 0.0, "abandon")],
)
def test_recommendation_rule(npv, option, expected):
    assert recommend(npv, option) == expected


# valuation -------------------------------------------------------------------------

def test_benchmark_report(bench):
    assert bench.standard_npv < 0
    assert bench.option_value > 0
    assert bench.flexible_npv > bench.standard_npv
    assert bench.recommendation == "defer"
    assert bench.flexible_npv - bench.standard_npv - bench.option_value == 0.0
    assert bench.invest_frequency.mode == 5


def test_report_serialisation(bench, tmp_path):
    doc = json.loads(bench.to_json())
    assert doc["invest_frequency"]["years"] == [1, 2, 3, 4, 5]
    assert doc["standard_npv"] == bench.standard_npv
    write_table([bench], tmp_path / "t.csv")
    header, row = (tmp_path / "t.csv").read_text().splitlines()
    assert header.split(",")[:3] == ["scenario", "description", "year1 (%)"]
    assert header.split(",")[-3:] == ["standard NPV (k$)", "ROV (k$)", "flexible NPV (k$)"]
    cells = row.split(",")
    assert cells[-3] == f"{bench.standard_npv / 1000:.1f}"
    assert cells[2] == f"{100 * bench.invest_frequency.fractions[0]:.1f}"


def test_worthless_config_is_abandoned():
    rep = run_valuation(deterministic(c_om=10_000_000.0))
    assert rep.option_value == 0.0
    assert rep.recommendation == "abandon"
    assert rep.invest_frequency.never == 1.0


def test_deterministic_front_loaded_payoffs_exercise_in_year_one():
    cfg = deterministic(c_om=0.0, mu_d=0.0)
    scenario = simulate_scenario(cfg)
    invest, _ = build_payoff_matrices(scenario, cfg.costs, cfg.windows)
    row = invest.values[0]
    discounted = row * np.exp(-0.06 * invest.times)
    assert row[0] > 0 and np.argmax(discounted) == 0
    rep = run_valuation(cfg)
    assert rep.invest_frequency.fraction(1) == 1.0


def test_valuation_is_reproducible():
    cfg = ScenarioConfig(n_paths=SMALL, seed=3)
    a, b = run_valuation(cfg), run_valuation(cfg)
    assert a.to_json() == b.to_json()
    assert np.array_equal(a.solution.deferral.stopping_index, b.solution.deferral.stopping_index)


# sensitivity -------------------------------------------------------------------------

def test_empty_sweep_returns_base_only():
    reports = run_sensitivity(ScenarioConfig(n_paths=SMALL), {})
    assert len(reports) == 1 and reports[0].parameter is None


def test_sweep_rejects_unknown_parameter():
    with pytest.raises(ConfigError):
        run_sensitivity(ScenarioConfig(n_paths=SMALL), {"nope": [1]})


def test_option_value_increases_with_demand_growth():
    reports = run_sensitivity(ScenarioConfig(), {"mu_d": [0.01, 0.03, 0.05]})
    values = [r.option_value for r in reports[1:]]
    assert values[0] < values[1] < values[2]


def test_year5_share_nondecreasing_in_reversion_speed():
    reports = run_sensitivity(ScenarioConfig(), {"beta_f": [0.05, 0.10, 0.15]})
    shares = [r.invest_frequency.fraction(5) for r in reports[1:]]
    assert shares[0] <= shares[1] <= shares[2]


def test_sweeps_are_seed_paired_and_reproducible(tmp_path):
    sweep = {"sigma_pv": [0.05, 0.2]}
    a = run_sensitivity(ScenarioConfig(n_paths=SMALL), sweep)
    b = run_sensitivity(ScenarioConfig(n_paths=SMALL), sweep)
    assert [r.to_json() for r in a] == [r.to_json() for r in b]
    rows = sensitivity_series(a)
    assert [row["value"] for row in rows] == [0.05, 0.2]
    write_series(rows, tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().startswith("parameter,value,invest_mode")


# standalone vs compound ------------------------------------------------------------------

def test_compound_beats_standalone_on_benchmark():
    paired = compare_standalone_vs_compound(ScenarioConfig())
    assert paired.compound_value > paired.standalone_value > 0


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_compound_never_below_standalone(seed):
    paired = compare_standalone_vs_compound(ScenarioConfig(n_paths=SMALL, seed=seed))
    assert paired.compound_value >= paired.standalone_value


def test_equal_when_expansion_cannot_pay():
    # flat demand sized at the final year leaves nothing to expand
    cfg = ScenarioConfig(n_paths=SMALL).with_overrides({"sigma_d": 0.0, "run.sizing_year": 10})
    scenario = simulate_scenario(cfg)
    invest, expand = build_payoff_matrices(scenario, cfg.costs, cfg.windows, capacity_plan(scenario, cfg.windows, 10))
    assert np.all(expand.values <= 0)
    assert np.any(invest.values > 0)
    paired = compare_standalone_vs_compound(cfg)
    assert paired.compound_value == paired.standalone_value
    assert paired.compound_value > 0


def test_tiny_instance_matches_enumeration():
    with pytest.warns(UserWarning, match="below 100"):
        cfg = ScenarioConfig().with_overrides({"n_paths": 4, "c_om": 30_000.0})
    scenario = simulate_scenario(cfg)
    invest, expand = build_payoff_matrices(scenario, cfg.costs, cfg.windows)
    assert np.any(invest.values > 0) and np.any(expand.values > 0)
    single = solve_single_option(invest, scenario, exact=True)
    comp = solve_compound(invest, expand, scenario, cfg.windows, exact=True)
    assert single.value == pytest.approx(enumerate_single(invest.values, invest.times, 0.06), rel=1e-9)
    assert comp.deferral.value == pytest.approx(
        enumerate_compound(invest.values, expand.values, invest.times, expand.times, 0.06), rel=1e-9
    )
