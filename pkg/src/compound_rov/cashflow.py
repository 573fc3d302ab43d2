"""Deterministic cash flows and per-path payoff matrices.

Payoff sign convention: positive means the PV-battery route saves money over
the diesel-generator route. For an exercise in year ``t`` of a study period
ending in year ``T``::

    payoff = (c_dg - dnsp_share * c_pv) * capacity - om_charge + c_g

``om_charge`` is the O&M cost over the ``T - t`` years after exercise and
``c_g`` the diesel fuel bill avoided over the same years, both discounted back
to year ``t`` with ``(1 + r) ** -k``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

import numpy as np

from .processes import DomainError, ScenarioSet

if TYPE_CHECKING:
    from .lsmc import DecisionWindows


@dataclass(frozen=True)
class CostModel:
    """Deterministic economics of the PV-battery vs diesel comparison.

    ``fuel_burn`` (litres per kWh generated) and ``peak_hours`` (hours per year
    that over-limit capacity must be served) are not given by the source data
    and are modelling assumptions.
    """

    c_dg: float = 600.0
    c_om: float = 100_000.0
    r: float = 0.06
    dnsp_share: float = 0.7
    battery_ratio: float = 2.0
    fuel_burn: float = 0.3
    peak_hours: float = 40.0

    def __post_init__(self):
        problems = []
        if not self.c_dg > 0:
            problems.append(f"c_dg must be > 0 (got {self.c_dg})")
        if not self.c_om >= 0:
            problems.append(f"c_om must be >= 0 (got {self.c_om})")
        if not self.r > 0:
            problems.append(f"r must be > 0 (got {self.r})")
        if not 0 < self.dnsp_share <= 1:
            problems.append(f"dnsp_share must be in (0, 1] (got {self.dnsp_share})")
        if not self.battery_ratio >= 0:
            problems.append(f"battery_ratio must be >= 0 (got {self.battery_ratio})")
        if not self.fuel_burn > 0:
            problems.append(f"fuel_burn must be > 0 (got {self.fuel_burn})")
        if not self.peak_hours > 0:
            problems.append(f"peak_hours must be > 0 (got {self.peak_hours})")
        if problems:
            raise DomainError("; ".join(problems))

    def battery_energy(self, capacity_kw):
        """Battery size in kWh that accompanies ``capacity_kw`` of PV."""
        return self.battery_ratio * np.asarray(capacity_kw, dtype=float)

    def annuity(self, n_years: int) -> float:
        return npv([(k, 1.0) for k in range(1, n_years + 1)], self.r)

    def om_charge(self, year: int, horizon: int) -> float:
        """O&M over the years after ``year`` up to ``horizon``, valued at ``year``."""
        return self.c_om * self.annuity(max(horizon - year, 0))


@dataclass(frozen=True, eq=False)
class PayoffMatrix:
    """Exercise payoffs, one column per decision date in ``window``.

    ``window`` holds integer decision indices; the decision time of column ``j``
    is ``window[j] * dt`` years.
    """

    values: np.ndarray
    option_id: str
    window: tuple[int, ...]
    dt: float = 1.0

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[1] != len(self.window):
            raise DomainError(
                f"payoff values {self.values.shape} do not match a window of {len(self.window)} dates"
            )
        if any(b - a != 1 for a, b in zip(self.window, self.window[1:])):
            raise DomainError(f"window must be contiguous, got {self.window}")

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.asarray(self.window, dtype=float) * self.dt

    def column(self, year: int) -> np.ndarray:
        return self.values[:, self.window.index(year)]

    def to_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["path", "year", "payoff"])
            for p, row in enumerate(self.values):
                for year, v in zip(self.window, row):
                    writer.writerow([p, year, format(v, ".17g")])


@dataclass(frozen=True, eq=False)
class CapacityPlan:
    """First-stage capacity per path and second-stage increments per (path, year)."""

    installed_capacity: np.ndarray
    expansion_capacity: np.ndarray

    def __post_init__(self):
        if np.any(self.installed_capacity < 0) or np.any(self.expansion_capacity < 0):
            raise DomainError("capacities must be non-negative")


def npv(cashflows: Iterable[tuple[int, float]], r: float) -> float:
    """Sum of ``amount / (1 + r) ** year`` over ``(year, amount)`` pairs."""
    if not r > -1:
        raise DomainError(f"discount rate must exceed -1, got {r}")
    total = 0.0
    for year, amount in cashflows:
        if year < 1 or int(year) != year:
            raise DomainError(f"cash-flow years must be integers >= 1, got {year}")
        total += amount / (1.0 + r) ** year
    return total


def uncovered_energy_cost(fuel_price, uncovered_energy, fuel_burn):
    """Diesel bill for generating ``uncovered_energy`` kWh at ``fuel_price`` $/L."""
    fuel_price = np.asarray(fuel_price, dtype=float)
    uncovered_energy = np.asarray(uncovered_energy, dtype=float)
    if np.any(fuel_price < 0) or np.any(uncovered_energy < 0) or fuel_burn < 0:
        raise DomainError("fuel price, energy and burn rate must be non-negative")
    out = fuel_price * fuel_burn * uncovered_energy
    return float(out) if out.ndim == 0 else out


def avoided_generation_cost(fuel_price, capacity, year: int, horizon: int, cost: CostModel):
    """Fuel cost avoided over the years after ``year``, valued at ``year``."""
    annual = uncovered_energy_cost(fuel_price, np.asarray(capacity, dtype=float) * cost.peak_hours, cost.fuel_burn)
    return annual * cost.annuity(max(horizon - year, 0))


def payoff_formula(capacity, pv_cost, c_g, om_charge, cost: CostModel):
    """``(c_dg - dnsp_share * c_pv) * capacity - om_charge + c_g``, vectorised."""
    capacity = np.asarray(capacity, dtype=float)
    pv_cost = np.asarray(pv_cost, dtype=float)
    return (cost.c_dg - cost.dnsp_share * pv_cost) * capacity - om_charge + c_g


def _payoff_at(capacity, pv_cost, fuel_price, year, horizon, cost):
    c_g = avoided_generation_cost(fuel_price, capacity, year, horizon, cost)
    return payoff_formula(capacity, pv_cost, c_g, cost.om_charge(year, horizon), cost)


def _step(scenario: ScenarioSet, year: int) -> int:
    step = int(round(year / scenario.dt))
    if step > scenario.n_steps:
        raise DomainError(f"year {year} is beyond the simulated horizon ({scenario.n_steps} steps)")
    return step


def _default_windows():
    from .lsmc import DecisionWindows

    return DecisionWindows()


def investment_payoff(
    scenario: ScenarioSet, cost: CostModel, year: int, path: int, windows: DecisionWindows | None = None
) -> float:
    """First-stage payoff of switching to PV-battery in ``year`` on ``path``."""
    windows = windows or _default_windows()
    if year not in windows.invest_years:
        raise DomainError(f"year {year} is outside the investment window {windows.invest_years}")
    s = _step(scenario, year)
    return float(
        _payoff_at(
            scenario.demand.values[path, s],
            scenario.pv_cost.values[path, s],
            scenario.fuel.values[path, s],
            year,
            windows.horizon,
            cost,
        )
    )


def expansion_payoff(
    scenario: ScenarioSet,
    cost: CostModel,
    plan: CapacityPlan,
    year: int,
    path: int,
    windows: DecisionWindows | None = None,
) -> float:
    """Second-stage payoff on the demand not covered by first-stage capacity."""
    windows = windows or _default_windows()
    if year not in windows.expand_years:
        raise DomainError(f"year {year} is outside the expansion window {windows.expand_years}")
    s = _step(scenario, year)
    increment = max(0.0, scenario.demand.values[path, s] - plan.installed_capacity[path])
    return float(
        _payoff_at(
            increment,
            scenario.pv_cost.values[path, s],
            scenario.fuel.values[path, s],
            year,
            windows.horizon,
            cost,
        )
    )


def capacity_plan(scenario: ScenarioSet, windows: DecisionWindows, sizing_year: int | None = None) -> CapacityPlan:
    """Size the first stage at the cross-path mean demand of ``sizing_year``.

    ``sizing_year`` defaults to the last year of the investment window.
    """
    if sizing_year is None:
        sizing_year = windows.invest_years[-1]
    installed_level = float(scenario.demand.values[:, _step(scenario, sizing_year)].mean())
    installed = np.full(scenario.n_paths, installed_level)
    steps = [_step(scenario, y) for y in windows.expand_years]
    increments = np.maximum(scenario.demand.values[:, steps] - installed[:, None], 0.0)
    return CapacityPlan(installed_capacity=installed, expansion_capacity=increments)


def build_payoff_matrices(
    scenario: ScenarioSet,
    cost: CostModel,
    windows: DecisionWindows | None = None,
    plan: CapacityPlan | None = None,
) -> tuple[PayoffMatrix, PayoffMatrix]:
    windows = windows or _default_windows()
    if windows.horizon * 1.0 > scenario.n_steps * scenario.dt + 1e-12:
        raise DomainError(
            f"scenario covers {scenario.n_steps * scenario.dt:g} years, windows need {windows.horizon}"
        )
    T = windows.horizon

    inv_steps = [_step(scenario, y) for y in windows.invest_years]
    invest = np.column_stack(
        [
            _payoff_at(
                scenario.demand.values[:, s],
                scenario.pv_cost.values[:, s],
                scenario.fuel.values[:, s],
                y,
                T,
                cost,
            )
            for y, s in zip(windows.invest_years, inv_steps)
        ]
    )

    plan = plan or capacity_plan(scenario, windows)
    exp_steps = [_step(scenario, y) for y in windows.expand_years]
    expand = np.column_stack(
        [
            _payoff_at(
                plan.expansion_capacity[:, j],
                scenario.pv_cost.values[:, s],
                scenario.fuel.values[:, s],
                y,
                T,
                cost,
            )
            for j, (y, s) in enumerate(zip(windows.expand_years, exp_steps))
        ]
    )
    return (
        PayoffMatrix(invest, "invest", tuple(windows.invest_years), scenario.dt),
        PayoffMatrix(expand, "expand", tuple(windows.expand_years), scenario.dt),
    )

