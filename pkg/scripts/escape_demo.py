"""Single island on the two-basin landscape: no intervention vs. momentum backtracking.

    python3 scripts/escape_demo.py --seeds 10 --out runs/escape
"""

import argparse
from pathlib import Path

from progevo.config import RunConfig
from progevo.orchestrator import run
from progevo.persistence import read_events


def config(variant: str, seed: int, iterations: int, run_dir: Path) -> RunConfig:
    return RunConfig.from_dict({
        "task": {"landscape": "deceptive_two_basin", "initial_payload": "6.0"},
        "islands": 1, "iterations": iterations, "variant": variant, "seed": seed,
        "provider": {"kind": "scripted"}, "run_dir": str(run_dir),
    })


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--iterations", type=int, default=300)
    ap.add_argument("--out", default="runs/escape")
    args = ap.parse_args()

    print(f"{'variant':8} {'seed':>4} {'best':>10} {'backtracks':>10}")
    for variant in ("none", "mbb"):
        for seed in range(args.seeds):
            res = run(config(variant, seed, args.iterations, Path(args.out) / f"{variant}-{seed}"))
            n_bt = sum(e.kind == "backtrack_applied" for e in read_events(res.run_dir / "events.jsonl"))
            print(f"{variant:8} {seed:>4} {res.global_best:>10.4f} {n_bt:>10}")


if __name__ == "__main__":
    main()
