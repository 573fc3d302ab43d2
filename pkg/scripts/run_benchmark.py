"""Value the benchmark configuration and print the headline numbers.

    python scripts/run_benchmark.py --seed 42 --paths 10000
"""

import argparse
import time

from compound_rov.config import ScenarioConfig
from compound_rov.scenario import compare_standalone_vs_compound, run_valuation


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--paths", type=int, default=10_000)
    args = parser.parse_args()

    config = ScenarioConfig(seed=args.seed, n_paths=args.paths)
    start = time.perf_counter()
    report = run_valuation(config)
    elapsed = time.perf_counter() - start
    paired = compare_standalone_vs_compound(config)

    print(f"paths {config.n_paths}, seed {config.seed}, {elapsed:.2f} s")
    print(f"standard NPV       {report.standard_npv / 1e3:9.1f} k$")
    print(f"option value       {report.option_value / 1e3:9.1f} k$")
    print(f"flexible NPV       {report.flexible_npv / 1e3:9.1f} k$")
    print(f"expansion option   {report.expansion_option_value / 1e3:9.1f} k$")
    print(f"standalone defer   {paired.standalone_value / 1e3:9.1f} k$")
    print(f"recommendation     {report.recommendation}")
    for label, freq in (("invest", report.invest_frequency), ("expand", report.expand_frequency)):
        shares = "  ".join(f"y{y} {100 * f:4.1f}%" for y, f in zip(freq.years, freq.fractions))
        print(f"{label:7s} {shares}  never {100 * freq.never:4.1f}%  mode {freq.mode}")


if __name__ == "__main__":
    main()
