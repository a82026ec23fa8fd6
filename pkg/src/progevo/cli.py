"""Command line entry point: run, resume, simulate, report."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from progevo.config import VARIANTS, RunConfig, resolve_paths
from progevo.errors import ConfigError, ProgevoError
from progevo.orchestrator import resume, run
from progevo.persistence import read_events, write_report


def _apply_overrides(cfg_dict: dict, args) -> dict:
    if getattr(args, "seed", None) is not None:
        cfg_dict["seed"] = args.seed
    if getattr(args, "run_dir", None) is not None:
        cfg_dict["run_dir"] = args.run_dir
    if getattr(args, "keep_artifacts", False):
        cfg_dict["keep_artifacts"] = True
    return cfg_dict


def load_config(path: str, args) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError("<file>", f"{path} not found") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON: {exc}") from exc
    return resolve_paths(RunConfig.from_dict(_apply_overrides(raw, args)), Path(path).resolve().parent)


def _print_result(res) -> None:
    print(f"global best: {res.global_best:.10g} after {res.iterations_done} iterations")
    for i, info in sorted(res.islands.items()):
        print(f"  island {i}: best={info['best']:.10g} A={info['A']:.4f}")
    print(f"run dir: {res.run_dir}")


def cmd_run(args) -> int:
    cfg = load_config(args.config, args)
    if getattr(args, "dry_run", False):
        print(f"config OK: {cfg.islands} island(s), {cfg.iterations} iterations, variant={cfg.variant}")
        return 0
    _print_result(run(cfg))
    return 0


def cmd_resume(args) -> int:
    _print_result(resume(args.run_dir_pos, override=args.force))
    return 0


def _count(events, kind: str) -> int:
    return sum(1 for e in events if e.kind == kind)


def simulate(sim: dict, args=None) -> list[dict]:
    """Re-run the same seeds under each policy variant; one row per (variant, seed)."""
    base = dict(sim["base"])
    if args is not None:
        base = _apply_overrides(base, args)
    variants = sim.get("variants", list(VARIANTS))
    seeds = sim.get("seeds", 10)
    seeds = list(range(seeds)) if isinstance(seeds, int) else list(seeds)
    bad = [v for v in variants if v not in VARIANTS]
    if bad:
        raise ConfigError("variants", f"unknown variant {bad[0]!r}")
    if base.get("task", {}).get("landscape") is None:
        raise ConfigError("base.task.landscape", "simulate requires a builtin landscape task")
    root = Path(base.get("run_dir", "runs/simulate"))
    rows = []
    for variant in variants:
        for seed in seeds:
            d = json.loads(json.dumps(base))
            d.update(variant=variant, seed=seed, run_dir=str(root / f"{variant}-seed{seed}"))
            res = run(RunConfig.from_dict(d))
            events = read_events(res.run_dir / "events.jsonl")
            rows.append({
                "variant": variant, "seed": seed, "final_best": repr(res.global_best),
                "backtracks": _count(events, "backtrack_applied"), "crossovers": _count(events, "crossover_applied"),
                **{f"island{i}_best": repr(info["best"]) for i, info in sorted(res.islands.items())},
            })
    return rows


def cmd_simulate(args) -> int:
    sim = json.loads(Path(args.config).read_text(encoding="utf-8"))
    if getattr(args, "dry_run", False):
        RunConfig.from_dict(_apply_overrides(dict(sim["base"]), args))
        print("simulation config OK")
        return 0
    rows = simulate(sim, args)
    out = Path(sim.get("output") or Path(sim["base"].get("run_dir", "runs/simulate")) / "simulate.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    fieldnames = list(dict.fromkeys(k for r in rows for k in r))
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    print(f"wrote {len(rows)} rows to {out}")
    return 0


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir_pos)
    if not (run_dir / "events.jsonl").exists():
        raise ConfigError("run_dir", f"no events.jsonl in {run_dir}")
    extra = [Path(p) / "events.jsonl" for p in args.aggregate]
    print(f"wrote {write_report(run_dir, extra)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # SUPPRESS so a flag given before the subcommand is not reset by the subparser
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--run-dir", default=argparse.SUPPRESS)
    common.add_argument("--dry-run", action="store_true", default=argparse.SUPPRESS, help="validate the config and exit")
    common.add_argument("--keep-artifacts", action="store_true", default=argparse.SUPPRESS, help="keep evaluation workspaces")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="progevo", description=__doc__, parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", parents=[common], help="start a run from a JSON config")
    p.add_argument("config")
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("resume", parents=[common], help="continue a run from its latest checkpoint")
    p.add_argument("run_dir_pos", metavar="run_dir")
    p.add_argument("--force", action="store_true", help="resume even if the config hash differs")
    p.set_defaults(func=cmd_resume)
    p = sub.add_parser("simulate", parents=[common], help="compare policy variants over seeds on a landscape")
    p.add_argument("config")
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("report", parents=[common], help="write report.csv from a run's event log")
    p.add_argument("run_dir_pos", metavar="run_dir")
    p.add_argument("--aggregate", nargs="*", default=[], help="other run dirs to include in the summary")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ProgevoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
