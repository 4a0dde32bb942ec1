"""Regenerate the frozen random-fn regression snapshot used by the acceptance tests.

Runs the default-seed random-function experiment at L_d = 12 (L = 1728) and
stores the deterministic relative accuracy metrics. Timing columns are not
stored since they depend on the machine.

    python scripts/freeze_snapshot.py [--out tests/data/random_fn_snapshot.json]
"""

import argparse
import json
import logging
from pathlib import Path

from bfselect.experiments import RandomFnConfig, evaluate_ld, make_random_fn_data

RHOS = (0.25, 0.3, 0.5)
LD = 12


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=Path(__file__).parents[1] / "tests/data/random_fn_snapshot.json")
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO)

    config = RandomFnConfig(ld_list=(LD,), rho_list=RHOS, repetitions=1)
    rows, _ = evaluate_ld(config, make_random_fn_data(config), LD)
    snapshot = {
        "seed": config.seed,
        "L": rows[0].L,
        "rows": {str(r.rho): {"rel_rmse": r.rel_rmse, "rel_nlpd": r.rel_nlpd, "rel_kl": r.rel_kl} for r in rows},
    }
    Path(args.out).write_text(json.dumps(snapshot, indent=2) + "\n")
    print(json.dumps(snapshot, indent=2))


if __name__ == "__main__":
    main()
