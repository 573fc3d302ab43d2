"""Discrete-time simulation of the three state variables.

Every path draws its shocks from its own counter-based Philox stream keyed by
``(seed, stream)`` with the path index in the counter, so a path's values do not
depend on how many other paths are generated or in which order.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import ndtri

# stream ids for the scenario variables
DEMAND_STREAM = 0
FUEL_STREAM = 1
PV_STREAM = 2


class DomainError(ValueError):
    """Raised when an input violates a documented precondition."""


@dataclass(frozen=True)
class GbmParams:
    mu: float
    sigma: float

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise DomainError(f"mu must be finite, got {self.mu}")
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise DomainError(f"sigma must be >= 0, got {self.sigma}")


@dataclass(frozen=True)
class MeanRevParams:
    beta: float
    s_bar: float
    sigma: float

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError(f"beta must be > 0, got {self.beta}")
        if not self.s_bar > 0:
            raise DomainError(f"s_bar must be > 0, got {self.s_bar}")
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise DomainError(f"sigma must be >= 0, got {self.sigma}")


@dataclass(frozen=True)
class RiskNeutralParams:
    r: float
    sigma: float

    def __post_init__(self):
        if not math.isfinite(self.r):
            raise DomainError(f"r must be finite, got {self.r}")
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise DomainError(f"sigma must be >= 0, got {self.sigma}")


@dataclass(frozen=True, eq=False)
class PathMatrix:
    """``values`` has shape ``(n_paths, n_steps + 1)``; column 0 is ``t0_value``."""

    values: np.ndarray
    dt: float
    t0_value: float
    seed: int | None
    stream: int = 0
    n_clamped: int = 0

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    @property
    def n_steps(self) -> int:
        return self.values.shape[1] - 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def to_csv(self, path: str | Path) -> None:
        write_paths_csv(self, path)


@dataclass(frozen=True, eq=False)
class ScenarioSet:
    demand: PathMatrix
    fuel: PathMatrix
    pv_cost: PathMatrix
    seeds: dict = field(default_factory=dict)

    @property
    def n_paths(self) -> int:
        return self.demand.n_paths

    @property
    def n_steps(self) -> int:
        return self.demand.n_steps

    @property
    def dt(self) -> float:
        return self.demand.dt

    def states(self, steps) -> np.ndarray:
        """Stack the three variables at the given step indices: ``(n_paths, len(steps), 3)``."""
        steps = np.asarray(steps, dtype=int)
        return np.stack(
            [self.demand.values[:, steps], self.fuel.values[:, steps], self.pv_cost.values[:, steps]],
            axis=-1,
        )


def _check_grid(s0, n_steps, n_paths, dt):
    if not (s0 > 0 and math.isfinite(s0)):
        raise DomainError(f"initial value must be positive, got {s0}")
    if n_steps < 1:
        raise DomainError(f"n_steps must be >= 1, got {n_steps}")
    if n_paths < 1:
        raise DomainError(f"n_paths must be >= 1, got {n_paths}")
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")


def standard_normals(seed: int, stream: int, n_paths: int, n_steps: int) -> np.ndarray:
    """Standard normal shocks of shape ``(n_paths, n_steps)``.

    Uniforms come from ``Philox(key=(seed, stream), counter=(0, 0, path, 0))``
    and are mapped through the inverse normal CDF, so entry ``[p, t]`` is a
    function of ``(seed, stream, p, t)`` only.
    """
    if seed < 0 or stream < 0:
        raise DomainError("seed and stream must be non-negative")
    key = [int(seed) % 2**64, int(stream) % 2**64]
    u = np.empty((n_paths, n_steps))
    for p in range(n_paths):
        bitgen = np.random.Philox(key=key, counter=[0, 0, p, 0])
        u[p] = np.random.Generator(bitgen).random(n_steps)
    # random() is in [0, 1); 0 would map to -inf
    np.maximum(u, np.finfo(float).tiny, out=u)
    return ndtri(u)


def _resolve_shocks(z, seed, stream, n_paths, n_steps):
    if z is None:
        return standard_normals(seed, stream, n_paths, n_steps)
    z = np.asarray(z, dtype=float)
    if z.shape != (n_paths, n_steps):
        raise DomainError(f"shock array has shape {z.shape}, expected {(n_paths, n_steps)}")
    return z


def _log_normal_paths(drift, sigma, s0, n_steps, n_paths, seed, stream, dt, z):
    _check_grid(s0, n_steps, n_paths, dt)
    z = _resolve_shocks(z, seed, stream, n_paths, n_steps)
    increments = (drift - 0.5 * sigma**2) * dt + sigma * math.sqrt(dt) * z
    values = np.empty((n_paths, n_steps + 1))
    values[:, 0] = s0
    values[:, 1:] = s0 * np.exp(np.cumsum(increments, axis=1))
    return PathMatrix(values=values, dt=dt, t0_value=float(s0), seed=seed, stream=stream)


def simulate_gbm(
    params: GbmParams,
    s0: float,
    n_steps: int,
    n_paths: int,
    seed: int,
    *,
    dt: float = 1.0,
    stream: int = DEMAND_STREAM,
    z: np.ndarray | None = None,
) -> PathMatrix:
    """Exact log-normal stepping of a GBM with drift ``mu`` and volatility ``sigma``."""
    return _log_normal_paths(params.mu, params.sigma, s0, n_steps, n_paths, seed, stream, dt, z)


def simulate_risk_neutral_gbm(
    params: RiskNeutralParams,
    s0: float,
    n_steps: int,
    n_paths: int,
    seed: int,
    *,
    dt: float = 1.0,
    stream: int = PV_STREAM,
    z: np.ndarray | None = None,
) -> PathMatrix:
    """GBM with the drift replaced by the risk-free rate."""
    return _log_normal_paths(params.r, params.sigma, s0, n_steps, n_paths, seed, stream, dt, z)


def simulate_mean_reverting(
    params: MeanRevParams,
    s0: float,
    n_steps: int,
    n_paths: int,
    seed: int,
    *,
    dt: float = 1.0,
    stream: int = FUEL_STREAM,
    z: np.ndarray | None = None,
    floor: float | None = None,
) -> PathMatrix:
    """Exact-discretisation mean reversion towards ``s_bar``.

    Values below ``floor`` (default ``1e-6 * s_bar``) are clamped; the number
    of clamped entries is recorded on the returned matrix.
    """
    _check_grid(s0, n_steps, n_paths, dt)
    z = _resolve_shocks(z, seed, stream, n_paths, n_steps)
    if floor is None:
        floor = 1e-6 * params.s_bar
    decay = math.exp(-params.beta * dt)
    scale = params.sigma * math.sqrt((1.0 - math.exp(-2.0 * params.beta * dt)) / (2.0 * params.beta))
    values = np.empty((n_paths, n_steps + 1))
    values[:, 0] = s0
    n_clamped = 0
    for t in range(n_steps):
        nxt = decay * (values[:, t] - params.s_bar) + params.s_bar + scale * z[:, t]
        low = nxt < floor
        n_clamped += int(low.sum())
        nxt[low] = floor
        values[:, t + 1] = nxt
    return PathMatrix(
        values=values, dt=dt, t0_value=float(s0), seed=seed, stream=stream, n_clamped=n_clamped
    )


def correlated_normals(seed: int, n_paths: int, n_steps: int, correlation=None) -> list[np.ndarray]:
    """Shocks for the demand, fuel and PV streams, mixed by ``correlation`` if given."""
    zs = [standard_normals(seed, s, n_paths, n_steps) for s in (DEMAND_STREAM, FUEL_STREAM, PV_STREAM)]
    if correlation is None:
        return zs
    corr = np.asarray(correlation, dtype=float)
    if corr.shape != (3, 3) or not np.allclose(corr, corr.T) or not np.allclose(np.diag(corr), 1.0):
        raise DomainError("correlation must be a symmetric 3x3 matrix with unit diagonal")
    if np.allclose(corr, np.eye(3)):
        return zs
    try:
        chol = np.linalg.cholesky(corr)
    except np.linalg.LinAlgError as exc:
        raise DomainError("correlation matrix is not positive definite") from exc
    stacked = np.stack(zs, axis=-1) @ chol.T
    return [stacked[..., i] for i in range(3)]


def build_scenario_set(demand: PathMatrix, fuel: PathMatrix, pv_cost: PathMatrix) -> ScenarioSet:
    shapes = {m.values.shape for m in (demand, fuel, pv_cost)}
    if len(shapes) != 1:
        raise DomainError(f"path matrices disagree on shape: {sorted(shapes)}")
    if not (demand.dt == fuel.dt == pv_cost.dt):
        raise DomainError(f"path matrices disagree on dt: {demand.dt}, {fuel.dt}, {pv_cost.dt}")
    seeds = {"demand": demand.seed, "fuel": fuel.seed, "pv_cost": pv_cost.seed}
    return ScenarioSet(demand=demand, fuel=fuel, pv_cost=pv_cost, seeds=seeds)


def write_paths_csv(matrix: PathMatrix, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["path"] + [f"t{i}" for i in range(matrix.n_steps + 1)])
        for i, row in enumerate(matrix.values):
            writer.writerow([i] + [format(v, ".17g") for v in row])


def read_paths_csv(path: str | Path, dt: float = 1.0) -> PathMatrix:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if not header or header[0] != "path":
        raise DomainError(f"{path}: expected header starting with 'path'")
    values = np.array([[float(v) for v in row[1:]] for row in body])
    return PathMatrix(values=values, dt=dt, t0_value=float(values[0, 0]), seed=None)
