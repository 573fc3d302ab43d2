"""End-to-end valuations, scenario summary tables and parameter sweeps."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from .cashflow import PayoffMatrix, build_payoff_matrices, capacity_plan
from .config import ScenarioConfig, resolve_parameter
from .lsmc import (
    CompoundSolution,
    FrequencyDistribution,
    OptionSolution,
    exercise_frequency,
    solve_compound,
    solve_single_option,
)
from .processes import (
    ScenarioSet,
    build_scenario_set,
    correlated_normals,
    simulate_gbm,
    simulate_mean_reverting,
    simulate_risk_neutral_gbm,
)

__all__ = [
    "FrequencyDistribution",
    "PairedReport",
    "ScenarioReport",
    "compare_standalone_vs_compound",
    "run_sensitivity",
    "run_valuation",
    "simulate_scenario",
]


def simulate_scenario(config: ScenarioConfig) -> ScenarioSet:
    p = config.processes
    n_steps = config.windows.horizon
    z_d, z_f, z_pv = correlated_normals(config.seed, config.n_paths, n_steps, p.correlation)
    demand = simulate_gbm(p.demand, p.demand_s0, n_steps, config.n_paths, config.seed, z=z_d)
    fuel = simulate_mean_reverting(p.fuel, p.fuel_s0, n_steps, config.n_paths, config.seed, z=z_f, floor=p.fuel_floor)
    pv = simulate_risk_neutral_gbm(p.pv_cost, p.pv_s0, n_steps, config.n_paths, config.seed, z=z_pv)
    return build_scenario_set(demand, fuel, pv)


def recommend(standard_npv: float, option_value: float) -> str:
    flexible = standard_npv + option_value
    if option_value > 0 and flexible > standard_npv:
        return "defer"
    if standard_npv > 0:
        return "invest now"
    return "abandon"


@dataclass(eq=False)
class ScenarioReport:
    name: str
    description: str
    standard_npv: float
    option_value: float
    flexible_npv: float
    expansion_option_value: float
    invest_frequency: FrequencyDistribution
    expand_frequency: FrequencyDistribution
    recommendation: str
    solution: CompoundSolution | None = field(default=None, repr=False)
    parameter: str | None = None
    parameter_value: float | None = None

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "description": self.description,
            "standard_npv": self.standard_npv,
            "option_value": self.option_value,
            "flexible_npv": self.flexible_npv,
            "expansion_option_value": self.expansion_option_value,
            "invest_frequency": self.invest_frequency.to_dict(),
            "expand_frequency": self.expand_frequency.to_dict(),
            "recommendation": self.recommendation,
        }
        if self.parameter is not None:
            out["parameter"] = self.parameter
            out["parameter_value"] = self.parameter_value
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def table_row(self) -> list:
        """Summary-table row: exercise shares in %, then values in k$, all to 1 dp."""
        f = self.invest_frequency
        return (
            [self.name, self.description]
            + [f"{100 * x:.1f}" for x in f.fractions]
            + [f"{self.standard_npv / 1000:.1f}", f"{self.option_value / 1000:.1f}", f"{self.flexible_npv / 1000:.1f}"]
        )

    def table_header(self) -> list:
        return (
            ["scenario", "description"]
            + [f"year{y} (%)" for y in self.invest_frequency.years]
            + ["standard NPV (k$)", "ROV (k$)", "flexible NPV (k$)"]
        )


def write_table(reports, path: str | Path) -> None:
    reports = list(reports)
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(reports[0].table_header())
        for rep in reports:
            writer.writerow(rep.table_row())


def _value(config: ScenarioConfig):
    scenario = simulate_scenario(config)
    plan = capacity_plan(scenario, config.windows, config.sizing_year)
    invest, expand = build_payoff_matrices(scenario, config.costs, config.windows, plan)
    return scenario, invest, expand


def _report(config, invest: PayoffMatrix, solution: CompoundSolution) -> ScenarioReport:
    standard_npv = float(invest.column(config.windows.invest_years[0]).mean())
    option_value = solution.deferral.value
    return ScenarioReport(
        name=config.name,
        description=config.description,
        standard_npv=standard_npv,
        option_value=option_value,
        flexible_npv=standard_npv + option_value,
        expansion_option_value=solution.expansion.value,
        invest_frequency=exercise_frequency(solution.deferral),
        expand_frequency=exercise_frequency(solution.expansion),
        recommendation=recommend(standard_npv, option_value),
        solution=solution,
    )


def run_valuation(config: ScenarioConfig) -> ScenarioReport:
    """Simulate, build payoffs, solve the compound option and summarise."""
    scenario, invest, expand = _value(config)
    solution = solve_compound(
        invest,
        expand,
        scenario,
        config.windows,
        config.basis,
        config.costs.r,
        expansion_value_mode=config.expansion_value_mode,
    )
    return _report(config, invest, solution)


def run_sensitivity(base: ScenarioConfig, sweeps: dict | None = None) -> list[ScenarioReport]:
    """Base report followed by one report per swept value, all on the base seed."""
    sweeps = sweeps or {}
    for name in sweeps:
        resolve_parameter(name)
    reports = [run_valuation(base)]
    for name, values in sweeps.items():
        for v in values:
            cfg = base.with_overrides({name: v})
            label = f"{name} = {v:g}" if isinstance(v, (int, float)) else f"{name} = {v}"
            cfg = ScenarioConfig(**{**cfg.__dict__, "name": f"{name}={v}", "description": label})
            rep = run_valuation(cfg)
            rep.parameter, rep.parameter_value = name, v
            reports.append(rep)
    return reports


def sensitivity_series(reports) -> list[dict]:
    """Plot-ready points: modal year, its frequency and option values per swept value."""
    rows = []
    for rep in reports:
        if rep.parameter is None:
            continue
        inv, exp = rep.invest_frequency, rep.expand_frequency
        rows.append(
            {
                "parameter": rep.parameter,
                "value": rep.parameter_value,
                "invest_mode": inv.mode,
                "invest_mode_frequency": inv.fraction(inv.mode) if inv.mode is not None else 0.0,
                "option_value": rep.option_value,
                "expand_mode": exp.mode,
                "expand_mode_frequency": exp.fraction(exp.mode) if exp.mode is not None else 0.0,
                "expansion_option_value": rep.expansion_option_value,
            }
        )
    return rows


def write_series(rows, path: str | Path) -> None:
    cols = [
        "parameter",
        "value",
        "invest_mode",
        "invest_mode_frequency",
        "option_value",
        "expand_mode",
        "expand_mode_frequency",
        "expansion_option_value",
    ]
    with Path(path).open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("none" if row[k] is None else row[k]) for k in cols})


@dataclass(eq=False)
class PairedReport:
    standalone_value: float
    compound_value: float
    standalone_frequency: FrequencyDistribution
    compound_frequency: FrequencyDistribution
    standalone: OptionSolution = field(repr=False)
    compound: CompoundSolution = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "standalone": {"value": self.standalone_value, "frequency": self.standalone_frequency.to_dict()},
            "compound": {"value": self.compound_value, "frequency": self.compound_frequency.to_dict()},
            "expansion_option_value": self.compound.expansion.value,
        }


def compare_standalone_vs_compound(config: ScenarioConfig) -> PairedReport:
    """Deferral value with and without the expansion option, on the same paths."""
    scenario, invest, expand = _value(config)
    standalone = solve_single_option(invest, scenario, config.windows.invest_years, config.basis, config.costs.r)
    compound = solve_compound(
        invest,
        expand,
        scenario,
        config.windows,
        config.basis,
        config.costs.r,
        expansion_value_mode=config.expansion_value_mode,
    )
    return PairedReport(
        standalone_value=standalone.value,
        compound_value=compound.deferral.value,
        standalone_frequency=exercise_frequency(standalone),
        compound_frequency=exercise_frequency(compound.deferral),
        standalone=standalone,
        compound=compound,
    )
