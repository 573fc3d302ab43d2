"""Command-line front end.

Exit codes: 0 success, 2 configuration or input error, 3 model-fit error,
4 internal numeric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import re
import sys
import warnings
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .calibrate import (
    IngestionError,
    InsufficientDataError,
    NonRevertingSeriesError,
    aggregate_over_limit,
    calibrate_gbm,
    calibrate_mean_reverting,
    read_load_csv,
    read_price_csv,
    years_between,
)
from .config import ConfigError, ScenarioConfig, load_config
from .processes import DomainError
from .scenario import (
    compare_standalone_vs_compound,
    run_sensitivity,
    run_valuation,
    sensitivity_series,
    simulate_scenario,
    write_series,
    write_table,
)

log = logging.getLogger("compound_rov")

EXIT_OK, EXIT_INPUT, EXIT_FIT, EXIT_NUMERIC = 0, 2, 3, 4


class CliError(Exception):
    def __init__(self, message: str, code: int):
        self.code = code
        super().__init__(message)


@dataclass
class RunManifest:
    command: str
    config_digest: str
    seed: int | None
    version: str = __version__
    started: str = ""
    finished: str = ""
    outputs: list = field(default_factory=list)

    def write(self, out_dir: Path) -> Path:
        self.finished = _now()
        path = out_dir / "manifest.json"
        path.write_text(json.dumps(asdict(self), indent=2) + "\n")
        return path


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _dump(obj, path: Path) -> Path:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def _resolve_config(args) -> ScenarioConfig:
    config = load_config(args.config) if args.config else ScenarioConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "paths", None) is not None:
        overrides["n_paths"] = args.paths
    return config.with_overrides(overrides) if overrides else config


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


_LIMIT_RE = re.compile(r"^\s*([0-9.eE+-]+)\s*([A-Za-z]*)\s*$")


def _parse_limit(text: str, default_units: str | None):
    m = _LIMIT_RE.match(text)
    if not m:
        raise CliError(f"cannot parse thermal limit {text!r}", EXIT_INPUT)
    value = float(m.group(1))
    return value, (m.group(2) or default_units)


def cmd_calibrate(args) -> int:
    out = _out_dir(args.out)
    digest = hashlib.sha256()
    for p in (args.load, args.prices):
        digest.update(Path(p).read_bytes())
    digest.update(f"{args.thermal_limit}|{args.limit_units}|{args.bucket}|{args.peak_hours_per_day}".encode())
    manifest = RunManifest("calibrate", digest.hexdigest(), None, started=_now())

    records = read_load_csv(args.load)
    limit, limit_units = _parse_limit(args.thermal_limit, args.limit_units)
    series = aggregate_over_limit(records, limit, args.bucket, limit_units=limit_units)
    capacity = series.capacity_kw(args.peak_hours_per_day)
    positive = capacity > 0
    notes = []
    if series.excluded_days:
        notes.append(f"{series.excluded_days} day(s) excluded for gaps of 2 h or more")
    if not positive.all():
        notes.append(f"{int((~positive).sum())} bucket(s) without over-limit energy dropped")
    dt = 1.0 / 12.0 if args.bucket == "monthly" else 1.0 / 365.25
    demand = calibrate_gbm(capacity[positive], dt)
    demand_doc = demand.to_dict()
    if notes:
        demand_doc["warnings"] = demand_doc.get("warnings", []) + notes
    demand_doc["initial_capacity_kw"] = float(capacity[positive][-1])

    prices = read_price_csv(args.prices)
    fuel = calibrate_mean_reverting(prices.to_numpy(), years_between(prices.index))
    for w in fuel.warnings:
        print(f"warning: fuel: {w}", file=sys.stderr)
    for w in notes:
        print(f"warning: demand: {w}", file=sys.stderr)

    manifest.outputs = [
        str(_dump(demand_doc, out / "demand.json")),
        str(_dump(fuel.to_dict(), out / "fuel.json")),
    ]
    manifest.write(out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = _resolve_config(args)
    out = _out_dir(args.out)
    manifest = RunManifest("simulate", config.digest(), config.seed, started=_now())
    scenario = simulate_scenario(config)
    for name, matrix in (("demand", scenario.demand), ("fuel", scenario.fuel), ("pv_cost", scenario.pv_cost)):
        path = out / f"{name}.csv"
        matrix.to_csv(path)
        manifest.outputs.append(str(path))
    if scenario.fuel.n_clamped:
        print(f"warning: {scenario.fuel.n_clamped} fuel price(s) clamped at the floor", file=sys.stderr)
    manifest.write(out)
    return EXIT_OK


def cmd_value(args) -> int:
    config = _resolve_config(args)
    out = _out_dir(args.out)
    manifest = RunManifest("value", config.digest(), config.seed, started=_now())
    report = run_valuation(config)
    if args.format == "csv":
        path = out / "report.csv"
        write_table([report], path)
    else:
        path = _dump(report.to_dict(), out / "report.json")
    manifest.outputs.append(str(path))
    stops = out / "stopping_times.csv"
    report.solution.stopping_times_csv(stops)
    manifest.outputs.append(str(stops))
    if args.standalone:
        paired = compare_standalone_vs_compound(config)
        manifest.outputs.append(str(_dump(paired.to_dict(), out / "standalone_vs_compound.json")))
    manifest.write(out)
    print(
        f"{report.name}: standard NPV {report.standard_npv:,.0f}  option value {report.option_value:,.0f}"
        f"  flexible NPV {report.flexible_npv:,.0f}  -> {report.recommendation}"
    )
    return EXIT_OK


def cmd_sensitivity(args) -> int:
    config = _resolve_config(args)
    try:
        sweeps = json.loads(Path(args.sweep).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{args.sweep}: {exc}") from exc
    if not isinstance(sweeps, dict) or not all(isinstance(v, list) for v in sweeps.values()):
        raise ConfigError(f"{args.sweep}: expected an object mapping parameter names to lists of values")
    out = _out_dir(args.out)
    manifest = RunManifest("sensitivity", config.digest(), config.seed, started=_now())
    reports = run_sensitivity(config, sweeps)
    for i, rep in enumerate(reports):
        manifest.outputs.append(str(_dump(rep.to_dict(), out / f"report_{i:02d}.json")))
    summary = out / "summary.csv"
    write_table(reports, summary)
    series = out / "series.csv"
    write_series(sensitivity_series(reports), series)
    manifest.outputs += [str(summary), str(series)]
    manifest.write(out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="compound-rov", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="estimate demand and fuel-price processes from data")
    p.add_argument("--load", required=True, help="substation load CSV (timestamp,power)")
    p.add_argument("--thermal-limit", required=True, help="e.g. 35, 35MVA or 35000kW")
    p.add_argument("--limit-units", default=None, help="units of --thermal-limit when it has no suffix")
    p.add_argument("--prices", required=True, help="diesel price CSV (timestamp,price)")
    p.add_argument("--bucket", choices=("daily", "monthly"), default="monthly")
    p.add_argument("--peak-hours-per-day", type=float, default=4.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_calibrate)

    def run_flags(q):
        q.add_argument("--config", default=None, help="JSON config; defaults to the benchmark")
        q.add_argument("--out", required=True)
        q.add_argument("--seed", type=int, default=None)
        q.add_argument("--paths", type=int, default=None)

    p = sub.add_parser("simulate", help="write simulated state-variable paths")
    run_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("value", help="value the compound option")
    run_flags(p)
    p.add_argument("--standalone", action="store_true", help="also compare with the deferral option alone")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_value)

    p = sub.add_parser("sensitivity", help="sweep parameters on a common seed")
    run_flags(p)
    p.add_argument("--sweep", required=True, help="JSON object: parameter name -> list of values")
    p.set_defaults(func=cmd_sensitivity)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print("error: invalid configuration:", file=sys.stderr)
        for problem in exc.problems:
            print(f"  - {problem}", file=sys.stderr)
        return EXIT_INPUT
    except IngestionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NonRevertingSeriesError, InsufficientDataError) as exc:
        print(f"error: model fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FloatingPointError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"error: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except Exception as exc:  # keep the documented exit-code set closed
        log.debug("unexpected failure", exc_info=True)
        print(f"error: internal failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
