"""Least-squares Monte Carlo for single and two-stage compound American options.

Discounting inside this module is continuous, ``exp(-r * t)`` with ``t`` in
years, whereas :func:`compound_rov.cashflow.npv` discounts annually.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cashflow import PayoffMatrix
from .processes import DomainError, ScenarioSet

NEVER = -1


@dataclass(frozen=True)
class DecisionWindows:
    invest_years: tuple[int, ...] = (1, 2, 3, 4, 5)
    expand_years: tuple[int, ...] = (6, 7, 8, 9, 10)
    dt: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "invest_years", tuple(int(y) for y in self.invest_years))
        object.__setattr__(self, "expand_years", tuple(int(y) for y in self.expand_years))
        for name, years in (("invest_years", self.invest_years), ("expand_years", self.expand_years)):
            if not years:
                raise DomainError(f"{name} must be non-empty")
            if any(b - a != 1 for a, b in zip(years, years[1:])):
                raise DomainError(f"{name} must be contiguous, got {years}")
            if years[0] < 1:
                raise DomainError(f"{name} must start at year >= 1")
        if self.expand_years[0] <= self.invest_years[-1]:
            raise DomainError(
                f"expansion window {self.expand_years} must start after investment window {self.invest_years}"
            )

    @classmethod
    def from_ranges(cls, invest: tuple[int, int], expand: tuple[int, int]) -> "DecisionWindows":
        return cls(tuple(range(invest[0], invest[1] + 1)), tuple(range(expand[0], expand[1] + 1)))

    @property
    def horizon(self) -> int:
        return self.expand_years[-1]


@dataclass(frozen=True)
class BasisSpec:
    """Polynomial regression basis.

    Terms are ordered: intercept, then ``x_i, x_i**2, ..., x_i**max_degree``
    for each variable in turn, then pairwise products ``x_i * x_j`` (i < j).
    """

    max_degree: int = 2
    include_cross_terms: bool = True
    include_intercept: bool = True

    def __post_init__(self):
        if self.max_degree < 0 or (self.max_degree == 0 and not self.include_intercept):
            raise DomainError(f"invalid basis: degree {self.max_degree}")

    def exponents(self, n_vars: int) -> list[tuple[int, ...]]:
        terms = []
        if self.include_intercept:
            terms.append((0,) * n_vars)
        for i in range(n_vars):
            for d in range(1, self.max_degree + 1):
                e = [0] * n_vars
                e[i] = d
                terms.append(tuple(e))
        if self.include_cross_terms and self.max_degree >= 2:
            for i, j in itertools.combinations(range(n_vars), 2):
                e = [0] * n_vars
                e[i] = e[j] = 1
                terms.append(tuple(e))
        return terms

    def size(self, n_vars: int) -> int:
        return len(self.exponents(n_vars))

    def fallbacks(self):
        """This basis followed by successively smaller ones: cross terms first, then degree."""
        spec = self
        yield spec
        if spec.include_cross_terms and spec.max_degree >= 2:
            spec = BasisSpec(spec.max_degree, False, spec.include_intercept)
            yield spec
        for d in range(spec.max_degree - 1, -1, -1):
            if d == 0 and not spec.include_intercept:
                break
            yield BasisSpec(d, False, spec.include_intercept)


def design_matrix(states: np.ndarray, exponents: list[tuple[int, ...]]) -> np.ndarray:
    states = _as_state_matrix(states)
    cols = [np.prod(states ** np.asarray(e), axis=1) for e in exponents]
    return np.column_stack(cols) if cols else np.empty((states.shape[0], 0))


@dataclass(frozen=True, eq=False)
class RegressionFit:
    coefficients: np.ndarray
    exponents: list
    residual_norm: float
    n_itm: int
    rank_deficient: bool = False
    basis: BasisSpec | None = None

    def predict(self, states) -> np.ndarray:
        states = _as_state_matrix(states)
        if self.coefficients.size == 0:
            return np.zeros(states.shape[0])
        return design_matrix(states, self.exponents) @ self.coefficients


def _as_state_matrix(states) -> np.ndarray:
    states = np.asarray(states, dtype=float)
    if states.ndim == 1:
        states = states[:, None]
    return states


def _lstsq(design: np.ndarray, y: np.ndarray):
    # column scaling keeps raw-power columns comparable without changing the fit
    scale = np.abs(design).max(axis=0)
    scale[scale == 0] = 1.0
    sol, _, rank, _ = np.linalg.lstsq(design / scale, y, rcond=None)
    return sol / scale, rank


def regress_continuation(
    state_at_t,
    discounted_future,
    itm_mask,
    basis: BasisSpec = BasisSpec(),
) -> RegressionFit:
    """Least-squares fit of ``discounted_future`` on the basis over in-the-money paths.

    When fewer in-the-money paths than basis terms are available the basis is
    shrunk (see :meth:`BasisSpec.fallbacks`); with fewer than two such paths
    the continuation is zero.
    """
    states = _as_state_matrix(state_at_t)
    y = np.asarray(discounted_future, dtype=float)
    itm = np.asarray(itm_mask, dtype=bool)
    n_itm = int(itm.sum())
    n_vars = states.shape[1]
    if n_itm < 2:
        return RegressionFit(np.zeros(0), [], 0.0, n_itm, basis=None)
    for spec in basis.fallbacks():
        exps = spec.exponents(n_vars)
        if len(exps) <= n_itm:
            break
    else:  # pragma: no cover - intercept-only always fits two paths
        return RegressionFit(np.zeros(0), [], 0.0, n_itm, basis=None)
    design = design_matrix(states[itm], exps)
    coef, rank = _lstsq(design, y[itm])
    resid = y[itm] - design @ coef
    return RegressionFit(
        coefficients=coef,
        exponents=exps,
        residual_norm=float(np.linalg.norm(resid)),
        n_itm=n_itm,
        rank_deficient=bool(rank < len(exps)),
        basis=spec,
    )


@dataclass(frozen=True, eq=False)
class OptionSolution:
    """Result of one backward induction.

    ``stopping_index`` indexes into ``window`` (``NEVER`` for unexercised
    paths); ``stopping_year`` gives the corresponding decision year.
    ``continuation`` holds the continuation estimate used on in-the-money
    paths (NaN elsewhere and at the last date).
    """

    value: float
    window: tuple[int, ...]
    dt: float
    r: float
    stopping_index: np.ndarray
    exercise_value: np.ndarray
    realized_cashflow: np.ndarray
    continuation: np.ndarray
    continuation_fits: dict = field(default_factory=dict)

    @property
    def exercised(self) -> np.ndarray:
        return self.stopping_index != NEVER

    @property
    def stopping_year(self) -> np.ndarray:
        years = np.asarray(self.window)
        return np.where(self.exercised, years[np.maximum(self.stopping_index, 0)], NEVER)

    @property
    def stopping_time(self) -> np.ndarray:
        """Exercise time in years, NaN where never exercised."""
        return np.where(self.exercised, self.stopping_year * self.dt, np.nan)

    @property
    def discounted_cashflow(self) -> np.ndarray:
        """Per-path realised exercise cash flow discounted to time zero."""
        t = np.where(self.exercised, self.stopping_year * self.dt, 0.0)
        return np.where(self.exercised, self.realized_cashflow * np.exp(-self.r * t), 0.0)

    def to_dict(self, include_paths: bool = False) -> dict:
        freq = exercise_frequency(self)
        out = {"value": self.value, "frequency": freq.to_dict()}
        if include_paths:
            out["stopping_year"] = [int(y) if y != NEVER else None for y in self.stopping_year]
        return out


@dataclass(frozen=True, eq=False)
class CompoundSolution:
    deferral: OptionSolution
    expansion: OptionSolution
    per_path_expansion_value: np.ndarray
    expansion_value_mode: str = "pathwise"

    def to_dict(self, include_paths: bool = False) -> dict:
        return {
            "deferral": self.deferral.to_dict(include_paths),
            "expansion": self.expansion.to_dict(include_paths),
            "expansion_value_mode": self.expansion_value_mode,
        }

    def stopping_times_csv(self, path: str | Path) -> None:
        write_stopping_times(self.deferral, self.expansion, path)


@dataclass(frozen=True)
class FrequencyDistribution:
    years: tuple[int, ...]
    fractions: tuple[float, ...]
    never: float
    mode: int | None

    def fraction(self, year: int) -> float:
        return self.fractions[self.years.index(year)]

    def to_dict(self) -> dict:
        return {
            "years": list(self.years),
            "fractions": list(self.fractions),
            "never": self.never,
            "mode": self.mode if self.mode is not None else "none",
        }


def exercise_frequency(solution: OptionSolution) -> FrequencyDistribution:
    n = solution.stopping_index.size
    counts = np.bincount(solution.stopping_index[solution.exercised], minlength=len(solution.window))
    fractions = tuple(float(c) / n for c in counts)
    never = float((~solution.exercised).sum()) / n
    mode = solution.window[int(np.argmax(counts))] if counts.sum() > 0 else None
    return FrequencyDistribution(tuple(solution.window), fractions, never, mode)


def write_stopping_times(deferral: OptionSolution, expansion: OptionSolution, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["path", "tau_invest", "tau_expand"])
        for p, (a, b) in enumerate(zip(deferral.stopping_year, expansion.stopping_year)):
            writer.writerow([p, a if a != NEVER else "never", b if b != NEVER else "never"])


def _backward_induction(decision, realized, states, times, r, basis, exact):
    n_paths, n_dates = decision.shape
    stop = np.full(n_paths, NEVER, dtype=int)
    cashflow = np.zeros(n_paths)
    continuation = np.full((n_paths, n_dates), np.nan)
    fits = {}

    last = n_dates - 1
    ex = decision[:, last] > 0
    stop[ex] = last
    cashflow[ex] = realized[ex, last]

    for j in range(last - 1, -1, -1):
        itm = decision[:, j] > 0
        alive = stop != NEVER
        elapsed = np.where(alive, times[np.maximum(stop, 0)] - times[j], 0.0)
        target = np.where(alive, cashflow * np.exp(-r * elapsed), 0.0)
        if not itm.any():
            fits[j] = RegressionFit(np.zeros(0), [], 0.0, 0)
            continue
        if exact:
            cont = target[itm]
        else:
            fit = regress_continuation(states[:, j, :], target, itm, basis)
            fits[j] = fit
            cont = fit.predict(states[itm, j, :])
        continuation[itm, j] = cont
        ex = np.zeros(n_paths, dtype=bool)
        ex[itm] = decision[itm, j] >= cont
        stop[ex] = j
        cashflow[ex] = realized[ex, j]

    alive = stop != NEVER
    t_stop = np.where(alive, times[np.maximum(stop, 0)], 0.0)
    value = float(np.mean(np.where(alive, cashflow * np.exp(-r * t_stop), 0.0)))
    return stop, cashflow, continuation, fits, value


def _state_tensor(scenario, payoffs: PayoffMatrix, window) -> np.ndarray:
    cols = [payoffs.window.index(y) for y in window]
    if isinstance(scenario, ScenarioSet):
        steps = [int(round(y * payoffs.dt / scenario.dt)) for y in window]
        if max(steps) > scenario.n_steps:
            raise DomainError("scenario does not cover the payoff window")
        return scenario.states(steps)
    states = np.asarray(scenario, dtype=float)
    if states.ndim == 2:
        states = states[:, :, None]
    if states.shape[:2] != payoffs.values.shape:
        raise DomainError(f"state array {states.shape} does not match payoffs {payoffs.values.shape}")
    return states[:, cols, :]


def _resolve_window(payoffs: PayoffMatrix, window):
    if window is None:
        return tuple(payoffs.window)
    window = tuple(int(y) for y in window)
    if not window:
        raise DomainError("empty exercise window")
    missing = [y for y in window if y not in payoffs.window]
    if missing:
        raise DomainError(f"payoff matrix does not cover years {missing}")
    return window


def solve_single_option(
    payoffs: PayoffMatrix,
    scenario,
    window=None,
    basis: BasisSpec = BasisSpec(),
    r: float = 0.06,
    *,
    exact: bool = False,
) -> OptionSolution:
    """Value an American option on ``payoffs`` by backward induction.

    ``scenario`` is either a :class:`ScenarioSet` or an array of regression
    states shaped ``(n_paths, n_dates[, n_vars])`` aligned with the payoff
    columns. ``exact=True`` replaces the regression by each path's realised
    future cash flow; it exists for checking against policy enumeration on
    tiny instances and is not a valuation method.
    """
    window = _resolve_window(payoffs, window)
    if not window:
        raise DomainError("empty exercise window")
    cols = [payoffs.window.index(y) for y in window]
    values = payoffs.values[:, cols]
    states = _state_tensor(scenario, payoffs, window)
    times = np.asarray(window, dtype=float) * payoffs.dt
    stop, cashflow, continuation, fits, value = _backward_induction(
        values, values, states, times, r, basis, exact
    )
    return OptionSolution(
        value=value,
        window=window,
        dt=payoffs.dt,
        r=r,
        stopping_index=stop,
        exercise_value=values,
        realized_cashflow=cashflow,
        continuation=continuation,
        continuation_fits={window[j]: f for j, f in fits.items()},
    )


def solve_compound(
    invest_payoffs: PayoffMatrix,
    expand_payoffs: PayoffMatrix,
    scenario,
    windows: DecisionWindows | None = None,
    basis: BasisSpec = BasisSpec(),
    r: float = 0.06,
    *,
    exact: bool = False,
    expansion_value_mode: str = "pathwise",
    expand_scenario=None,
) -> CompoundSolution:
    """Value the deferral option with the expansion option it unlocks.

    The expansion option is solved first. Its realised payoff on each path,
    discounted to a deferral date, is added to the investment payoff both in
    the exercise test and in the cash flow credited on exercise. With
    ``expansion_value_mode="regressed"`` the exercise test instead uses a
    regression of that value on the deferral-date state.

    ``scenario`` supplies regression states for both windows; when it is a raw
    state array for the investment window, pass ``expand_scenario`` as well.
    """
    if expansion_value_mode not in ("pathwise", "regressed"):
        raise DomainError(f"unknown expansion_value_mode {expansion_value_mode!r}")
    if windows is None:
        invest_window, expand_window = tuple(invest_payoffs.window), tuple(expand_payoffs.window)
    else:
        invest_window, expand_window = windows.invest_years, windows.expand_years
    if set(invest_window) & set(expand_window) or min(expand_window) <= max(invest_window):
        raise DomainError(f"windows overlap or are out of order: {invest_window} / {expand_window}")
    if invest_payoffs.n_paths != expand_payoffs.n_paths:
        raise DomainError("invest and expand payoff matrices differ in path count")

    expansion = solve_single_option(
        expand_payoffs,
        scenario if expand_scenario is None else expand_scenario,
        expand_window,
        basis,
        r,
        exact=exact,
    )
    expansion_pv = expansion.discounted_cashflow

    invest_window = _resolve_window(invest_payoffs, invest_window)
    cols = [invest_payoffs.window.index(y) for y in invest_window]
    pi = invest_payoffs.values[:, cols]
    times = np.asarray(invest_window, dtype=float) * invest_payoffs.dt
    carried = expansion_pv[:, None] * np.exp(r * times)[None, :]
    states = _state_tensor(scenario, invest_payoffs, invest_window)

    if expansion_value_mode == "pathwise":
        decision = pi + carried
    else:
        estimate = np.empty_like(carried)
        everyone = np.ones(pi.shape[0], dtype=bool)
        for j in range(len(invest_window)):
            fit = regress_continuation(states[:, j, :], carried[:, j], everyone, basis)
            estimate[:, j] = np.maximum(fit.predict(states[:, j, :]), 0.0)
        decision = pi + estimate
    realized = pi + carried

    stop, cashflow, continuation, fits, value = _backward_induction(
        decision, realized, states, times, r, basis, exact
    )
    deferral = OptionSolution(
        value=value,
        window=invest_window,
        dt=invest_payoffs.dt,
        r=r,
        stopping_index=stop,
        exercise_value=decision,
        realized_cashflow=cashflow,
        continuation=continuation,
        continuation_fits={invest_window[j]: f for j, f in fits.items()},
    )
    return CompoundSolution(deferral, expansion, expansion_pv, expansion_value_mode)
