"""Modal exercise share and option values against demand drift and volatility.

Writes plot-ready CSV (one row per swept value); plotting is left to the reader.

    python scripts/parameter_sweeps.py --out results/sweeps.csv
"""

import argparse
from pathlib import Path

import numpy as np

from compound_rov.config import ScenarioConfig
from compound_rov.scenario import run_sensitivity, sensitivity_series, write_series

SWEEPS = {
    "mu_d": [round(x, 3) for x in np.linspace(0.01, 0.05, 5)],
    "sigma_d": [round(x, 3) for x in np.linspace(0.10, 0.30, 5)],
}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--paths", type=int, default=10_000)
    parser.add_argument("--out", type=Path, default=Path("results/sweeps.csv"))
    args = parser.parse_args()

    reports = run_sensitivity(ScenarioConfig(seed=args.seed, n_paths=args.paths), SWEEPS)
    rows = sensitivity_series(reports)
    for row in rows:
        print(
            f"{row['parameter']:8s} {row['value']:6.3f}  invest mode {row['invest_mode']} "
            f"({100 * row['invest_mode_frequency']:4.1f}%)  option {row['option_value'] / 1e3:7.1f} k$  "
            f"expand mode {row['expand_mode']} ({100 * row['expand_mode_frequency']:4.1f}%)  "
            f"expansion {row['expansion_option_value'] / 1e3:6.1f} k$"
        )
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_series(rows, args.out)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
