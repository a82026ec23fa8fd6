"""Two islands: island 1 relocates to the deep basin early, island 0 only refines.

Compares backtracking alone with backtracking plus crossover by how close
island 0 ends up to island 1's best.

    python3 scripts/collaboration_demo.py --seeds 10
"""

import argparse
from pathlib import Path

from progevo.config import RunConfig
from progevo.orchestrator import run

PROFILES = {
    "0": {"explore_on_reject": False},
    "1": {"explore_on_reject": False, "jump_step": 20, "jump_to": "-3.5"},
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--iterations", type=int, default=200)
    ap.add_argument("--out", default="runs/collaboration")
    args = ap.parse_args()

    print(f"{'variant':8} {'seed':>4} {'island0':>9} {'island1':>9}")
    for variant in ("mbb", "mbb_ce"):
        close = 0
        for seed in range(args.seeds):
            cfg = RunConfig.from_dict({
                "task": {"landscape": "deceptive_two_basin", "initial_payload": "6.0"},
                "islands": 2, "iterations": args.iterations, "variant": variant, "seed": seed,
                "provider": {"kind": "scripted", "profiles": PROFILES},
                "run_dir": str(Path(args.out) / f"{variant}-{seed}"),
            })
            res = run(cfg)
            b0, b1 = res.islands[0]["best"], res.islands[1]["best"]
            close += b0 <= 1.1 * b1
            print(f"{variant:8} {seed:>4} {b0:>9.4f} {b1:>9.4f}")
        print(f"{variant}: island 0 within 10% of island 1 in {close}/{args.seeds} seeds\n")


if __name__ == "__main__":
    main()
