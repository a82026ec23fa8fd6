"""Policy ablation over seeds via the simulate subcommand, then a per-variant summary.

    python3 scripts/ablation.py configs/simulate_two_basin.json
"""

import csv
import json
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from progevo.cli import main as cli_main


def main(path: str) -> None:
    if cli_main(["simulate", path]) != 0:
        sys.exit(1)
    sim = json.loads(Path(path).read_text())
    by_variant = defaultdict(list)
    with open(sim["output"], newline="") as fh:
        for row in csv.DictReader(fh):
            by_variant[row["variant"]].append(float(row["final_best"]))
    print(f"\n{'variant':8} {'best':>8} {'p75':>8} {'mean':>8} {'worst':>8}")
    for variant, scores in by_variant.items():
        v = np.asarray(scores)
        print(f"{variant:8} {v.min():>8.4f} {np.percentile(v, 25):>8.4f} {v.mean():>8.4f} {v.max():>8.4f}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "configs/simulate_two_basin.json")
