"""Load-data ingestion and closed-form parameter estimation.

GBM parameters come from the exact log-normal transition likelihood;
mean-reversion parameters from an AR(1) least-squares fit.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from .processes import DomainError, GbmParams, MeanRevParams

# 1% Dickey-Fuller critical value (regression with intercept)
UNIT_ROOT_CRITICAL = -3.43

KW_PER_UNIT = {"kW": 1.0, "MW": 1000.0, "MVA": 1000.0, "kVA": 1.0}


class IngestionError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class InsufficientDataError(DomainError):
    pass


class NonRevertingSeriesError(DomainError):
    """The series shows no significant pull towards a mean level."""


@dataclass(frozen=True)
class LoadRecord:
    timestamp: datetime
    power: float
    units: str = "kW"


@dataclass(frozen=True, eq=False)
class OverLimitSeries:
    """Over-limit energy per bucket (kWh)."""

    labels: list
    energy_kwh: np.ndarray
    days: np.ndarray
    bucket: str
    interval_hours: float
    excluded_days: int = 0
    interpolated_points: int = 0

    def capacity_kw(self, peak_hours_per_day: float = 4.0) -> np.ndarray:
        """Convert bucket energy to an over-limit capacity requirement."""
        if not peak_hours_per_day > 0:
            raise DomainError("peak_hours_per_day must be positive")
        return self.energy_kwh / (peak_hours_per_day * self.days)


@dataclass(frozen=True)
class CalibrationResult:
    model: str
    estimates: dict
    standard_errors: dict
    n_observations: int
    warnings: list = field(default_factory=list)

    @property
    def params(self):
        e = self.estimates
        if self.model == "gbm":
            return GbmParams(e["mu"], e["sigma"])
        if e.get("beta") is None:
            return None
        return MeanRevParams(e["beta"], e["s_bar"], e["sigma"])

    def to_dict(self) -> dict:
        out = {"model": self.model}
        out.update(self.estimates)
        out.update({f"stderr_{k}": v for k, v in self.standard_errors.items()})
        out["n_obs"] = self.n_observations
        if self.warnings:
            out["warnings"] = list(self.warnings)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def read_load_csv(path: str | Path) -> list[LoadRecord]:
    """Read ``timestamp,power`` rows; a ``# units: <unit>`` line declares the unit."""
    units = None
    records = []
    header_seen = False
    with Path(path).open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            first = row[0].strip()
            if first.startswith("#"):
                text = ",".join(row).lstrip("#").strip()
                if text.lower().startswith("units:"):
                    declared = text.split(":", 1)[1].strip()
                    if declared not in KW_PER_UNIT:
                        raise IngestionError(f"unknown unit {declared!r}", lineno)
                    if units is not None and declared != units:
                        raise IngestionError(f"mixed units {units!r} and {declared!r}", lineno)
                    units = declared
                continue
            if not header_seen:
                if [c.strip() for c in row[:2]] != ["timestamp", "power"]:
                    raise IngestionError("expected header 'timestamp,power'", lineno)
                header_seen = True
                continue
            if len(row) != 2:
                raise IngestionError(f"expected 2 fields, found {len(row)}", lineno)
            try:
                ts = datetime.fromisoformat(row[0].strip())
                power = float(row[1])
            except ValueError as exc:
                raise IngestionError(str(exc), lineno) from exc
            if not (power >= 0 and math.isfinite(power)):
                raise IngestionError(f"power must be a non-negative number, got {row[1]!r}", lineno)
            if records and ts <= records[-1].timestamp:
                raise IngestionError("timestamps must be strictly increasing", lineno)
            records.append(LoadRecord(ts, power, units or "kW"))
    if units is None:
        raise IngestionError("missing '# units:' header line")
    if not records:
        raise IngestionError("no data rows")
    return records


def read_price_csv(path: str | Path) -> pd.Series:
    """Read ``timestamp,price`` rows into a time-indexed series."""
    stamps, prices = [], []
    with Path(path).open(newline="") as fh:
        rows = csv.reader(fh)
        header_seen = False
        for lineno, row in enumerate(rows, start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if not header_seen:
                if [c.strip() for c in row[:2]] != ["timestamp", "price"]:
                    raise IngestionError("expected header 'timestamp,price'", lineno)
                header_seen = True
                continue
            if len(row) != 2:
                raise IngestionError(f"expected 2 fields, found {len(row)}", lineno)
            try:
                stamps.append(datetime.fromisoformat(row[0].strip()))
                prices.append(float(row[1]))
            except ValueError as exc:
                raise IngestionError(str(exc), lineno) from exc
            if len(stamps) > 1 and stamps[-1] <= stamps[-2]:
                raise IngestionError("timestamps must be strictly increasing", lineno)
    if not prices:
        raise IngestionError("no data rows")
    return pd.Series(prices, index=pd.DatetimeIndex(stamps))


def years_between(index: pd.DatetimeIndex) -> float:
    """Median spacing of a time index, in years."""
    if len(index) < 2:
        raise InsufficientDataError("need at least two timestamps")
    return float(np.median(np.diff(index.asi8))) / 1e9 / (365.25 * 86400)


def aggregate_over_limit(
    records: Sequence[LoadRecord],
    thermal_limit: float,
    bucket: str = "monthly",
    *,
    limit_units: str | None = None,
    max_gap_hours: float = 2.0,
) -> OverLimitSeries:
    """Energy above ``thermal_limit`` per day or month, in kWh.

    Each sample counts for one nominal interval (the median spacing). Gaps
    shorter than ``max_gap_hours`` are linearly interpolated; days touched by
    longer gaps are left out and counted in ``excluded_days``.
    """
    if not records:
        raise IngestionError("no load records")
    if bucket not in ("daily", "monthly"):
        raise DomainError(f"bucket must be 'daily' or 'monthly', got {bucket!r}")
    if not thermal_limit > 0:
        raise DomainError(f"thermal limit must be positive, got {thermal_limit}")
    units = {rec.units for rec in records}
    if len(units) > 1:
        raise IngestionError(f"mixed units in records: {sorted(units)}")
    (unit,) = units
    if unit not in KW_PER_UNIT:
        raise IngestionError(f"unknown unit {unit!r}")
    if limit_units is not None and limit_units != unit:
        raise IngestionError(f"thermal limit given in {limit_units} but load data are in {unit}")

    index = pd.DatetimeIndex([rec.timestamp for rec in records])
    if not index.is_monotonic_increasing or index.has_duplicates:
        raise IngestionError("timestamps must be strictly increasing")
    power = pd.Series([rec.power for rec in records], index=index, dtype=float)

    if len(index) > 1:
        diffs = np.diff(index.asi8)
        nominal = int(np.median(diffs))
        if np.any(diffs % nominal):
            raise IngestionError("samples are not on a regular grid")
    else:
        nominal = 15 * 60 * 10**9
    step = pd.Timedelta(nominal, unit="ns")
    interval_hours = step.total_seconds() / 3600.0

    grid = pd.date_range(index[0], index[-1], freq=step)
    full = power.reindex(grid)
    missing = full.isna().to_numpy()
    excluded = set()
    interpolated = 0
    if missing.any():
        # runs of consecutive missing samples
        edges = np.flatnonzero(np.diff(np.concatenate([[0], missing.astype(int), [0]])))
        for start, stop in zip(edges[::2], edges[1::2]):
            gap_hours = (stop - start + 1) * interval_hours
            if gap_hours < max_gap_hours:
                interpolated += stop - start
            else:
                excluded.update(grid[start:stop].normalize())
        full = full.interpolate(method="time")

    over = np.maximum(full.to_numpy() - thermal_limit, 0.0) * interval_hours * KW_PER_UNIT[unit]
    frame = pd.DataFrame({"energy": over}, index=grid)
    frame["day"] = grid.normalize()
    if excluded:
        frame = frame[~frame["day"].isin(excluded)]

    daily = frame.groupby("day")["energy"].sum()
    if bucket == "daily":
        labels = [d.strftime("%Y-%m-%d") for d in daily.index]
        energy = daily.to_numpy()
        days = np.ones(len(daily))
    else:
        months = daily.index.to_period("M")
        grouped = daily.groupby(months)
        labels = [str(p) for p in grouped.sum().index]
        energy = grouped.sum().to_numpy()
        days = grouped.size().to_numpy().astype(float)
    return OverLimitSeries(
        labels=labels,
        energy_kwh=np.asarray(energy, dtype=float),
        days=days,
        bucket=bucket,
        interval_hours=interval_hours,
        excluded_days=len(excluded),
        interpolated_points=interpolated,
    )


def calibrate_gbm(series, dt: float) -> CalibrationResult:
    """Closed-form maximum-likelihood GBM fit from equally spaced observations."""
    s = np.asarray(series, dtype=float)
    if s.size < 3:
        raise InsufficientDataError(f"need at least 3 observations, got {s.size}")
    if np.any(~np.isfinite(s)) or np.any(s <= 0):
        raise DomainError("GBM calibration needs strictly positive observations")
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    lr = np.diff(np.log(s))
    n = lr.size
    sigma = float(np.std(lr, ddof=1) / math.sqrt(dt))
    mu = float(lr.mean() / dt + 0.5 * sigma**2)
    se_sigma = sigma / math.sqrt(2.0 * (n - 1))
    se_mu = math.sqrt(sigma**2 / (n * dt) + (sigma * se_sigma) ** 2)
    return CalibrationResult(
        model="gbm",
        estimates={"mu": mu, "sigma": sigma},
        standard_errors={"mu": se_mu, "sigma": se_sigma},
        n_observations=int(s.size),
    )


def _unit_root_t(s: np.ndarray) -> float | None:
    """Dickey-Fuller t statistic of the AR(1) slope (intercept, no trend)."""
    x, y = s[:-1], s[1:]
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0:
        return None
    b = float(xc @ (y - y.mean())) / sxx
    resid = y - y.mean() - b * xc
    se = math.sqrt(float(resid @ resid) / (x.size - 2) / sxx)
    return (b - 1.0) / se if se > 0 else None


def calibrate_mean_reverting(series, dt: float) -> CalibrationResult:
    """AR(1) least-squares fit mapped onto the exact mean-reverting transition.

    Raises :class:`NonRevertingSeriesError` unless the fitted slope lies in
    (0, 1) and is significantly below one (Dickey-Fuller test at 1%).
    """
    s = np.asarray(series, dtype=float)
    if s.size < 4:
        raise InsufficientDataError(f"need at least 4 observations, got {s.size}")
    if np.any(~np.isfinite(s)):
        raise DomainError("series contains non-finite values")
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    x, y = s[:-1], s[1:]
    n = x.size
    xm = x.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx <= 1e-24 * max(1.0, xm**2) * n:
        level = float(s.mean())
        return CalibrationResult(
            model="mean_reverting",
            estimates={"beta": None, "s_bar": level, "sigma": 0.0},
            standard_errors={"beta": None, "s_bar": 0.0, "sigma": 0.0},
            n_observations=int(s.size),
            warnings=["series has no variation; reversion speed is unidentifiable"],
        )
    b = float(np.sum((x - xm) * (y - y.mean())) / sxx)
    a = float(y.mean() - b * xm)
    resid = y - (a + b * x)
    v = float(resid @ resid / (n - 2))
    var_b = v / sxx
    var_a = v * (1.0 / n + xm**2 / sxx)
    cov_ab = -xm * v / sxx
    se_b = math.sqrt(var_b)
    if not 0 < b < 1:
        raise NonRevertingSeriesError(f"AR(1) slope {b:.6g} is outside (0, 1)")
    if se_b > 0 and (b - 1.0) / se_b > UNIT_ROOT_CRITICAL:
        raise NonRevertingSeriesError(
            f"AR(1) slope {b:.6g} is not significantly below 1 (t = {(b - 1.0) / se_b:.2f})"
        )
    # a multiplicative random walk drifting towards zero can pass the test in
    # levels, so positive series must also reject a unit root in logs
    if np.all(s > 0):
        t_log = _unit_root_t(np.log(s))
        if t_log is not None and t_log > UNIT_ROOT_CRITICAL:
            raise NonRevertingSeriesError(f"log prices look like a random walk (t = {t_log:.2f})")

    beta = -math.log(b) / dt
    se_beta = se_b / (b * dt)
    s_bar = a / (1.0 - b)
    ga, gb = 1.0 / (1.0 - b), a / (1.0 - b) ** 2
    se_s_bar = math.sqrt(max(ga**2 * var_a + gb**2 * var_b + 2 * ga * gb * cov_ab, 0.0))

    # residual variance v = sigma^2 (1 - e^{-2 beta dt}) / (2 beta)
    q = 1.0 - math.exp(-2.0 * beta * dt)
    sigma = math.sqrt(v * 2.0 * beta / q)
    dlog_g = 1.0 / beta - 2.0 * dt * math.exp(-2.0 * beta * dt) / q
    rel_v = math.sqrt(2.0 / (n - 2))
    se_sigma = 0.5 * sigma * math.sqrt(rel_v**2 + (dlog_g * se_beta) ** 2)
    return CalibrationResult(
        model="mean_reverting",
        estimates={"beta": beta, "s_bar": s_bar, "sigma": sigma},
        standard_errors={"beta": se_beta, "s_bar": se_s_bar, "sigma": se_sigma},
        n_observations=int(s.size),
    )
