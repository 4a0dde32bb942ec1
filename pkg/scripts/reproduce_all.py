"""Run both experiments with default settings and write CSVs under ``results/``.

    python scripts/reproduce_all.py [--extended] [--out results]

``--extended`` adds L_d = 14..20 (up to L = 8000) to the random-function sweep;
that needs several GB of memory and a few minutes per size.
"""

import argparse
import csv
from pathlib import Path

from bfselect.experiments import main as bfselect


def summarise(results_csv: Path) -> None:
    with open(results_csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    print(f"{'L':>6} {'rho':>5} {'rel_kl':>8} {'rel_rmse':>9} {'rel_time':>9}")
    for r in rows:
        print(f"{r['L']:>6} {float(r['rho']):>5.2f} {float(r['rel_kl'] or 'nan'):>8.3f} "
              f"{float(r['rel_rmse'] or 'nan'):>9.3f} {float(r['rel_time'] or 'nan'):>9.3f}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results")
    parser.add_argument("--extended", action="store_true")
    args = parser.parse_args()
    out = Path(args.out)

    bfselect(["rbf-demo", "--out", str(out / "rbf-demo")])
    extra = ["--extended", "--memory-budget-gb", "6"] if args.extended else []
    bfselect(["random-fn", "--out", str(out / "random-fn"), *extra])
    summarise(out / "random-fn" / "results.csv")


if __name__ == "__main__":
    main()
