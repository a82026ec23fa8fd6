"""Append-only event log, whole-state JSON checkpoints, and CSV reports.

Run directory layout::

    <run_dir>/events.jsonl
    <run_dir>/checkpoints/ckpt-<step>.json
    <run_dir>/report.csv
    <run_dir>/report_summary.csv
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from progevo.errors import CheckpointMismatch

logger = logging.getLogger(__name__)

EVENT_KINDS = frozenset({
    "run_started", "idea_proposed", "idea_classified", "idea_selected", "duplicate_skipped",
    "evaluated", "momentum_updated", "snapshot_taken", "trigger_fired", "action_sampled",
    "backtrack_applied", "crossover_applied", "summarized", "idea_pruned", "provider_error",
    "run_finished",
})

REPORT_COLUMNS = ["iteration", "island", "s_best", "working_best", "m_t", "A_t", "markers"]
MARKER_KINDS = ("trigger_fired", "backtrack_applied", "crossover_applied", "duplicate_skipped")


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(dumps(cfg).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Event:
    seq: int
    wall_time: float
    island_id: int | None
    kind: str
    payload: dict

    def to_json(self) -> str:
        return dumps({"seq": self.seq, "wall_time": self.wall_time, "island_id": self.island_id,
                      "kind": self.kind, "payload": self.payload})


class EventLog:
    """Single-writer JSONL event log; every append is flushed before returning.

    ``clock=None`` uses a logical clock (``wall_time == seq``) so that
    scripted runs produce byte-identical logs.
    """

    def __init__(self, path: str | Path, clock: Callable[[], float] | None = time.time, fsync: bool = False):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.clock = clock
        self.fsync = fsync
        self.seq = last_seq(self.path)
        self._fh = open(self.path, "a", encoding="utf-8")

    def append(self, kind: str, island_id: int | None = None, payload: dict | None = None) -> int:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        seq = self.seq + 1
        wall = float(seq) if self.clock is None else self.clock()
        event = Event(seq, wall, island_id, kind, payload or {})
        self._fh.write(event.to_json() + "\n")
        self._fh.flush()
        if self.fsync:
            os.fsync(self._fh.fileno())
        self.seq = seq
        return seq

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_events(path: str | Path) -> list[Event]:
    """Parse a log; stops (with a warning) at the first truncated or invalid line."""
    path = Path(path)
    out: list[Event] = []
    if not path.exists():
        return out
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.endswith("\n"):
                logger.warning("%s: line %d truncated; report stops here", path, lineno)
                break
            try:
                d = json.loads(line)
                out.append(Event(d["seq"], d["wall_time"], d["island_id"], d["kind"], d["payload"]))
            except (ValueError, KeyError) as exc:
                logger.warning("%s: line %d invalid (%s); report stops here", path, lineno, exc)
                break
    return out


def last_seq(path: Path) -> int:
    events = read_events(path)
    return events[-1].seq if events else 0


def truncate_events(path: str | Path, seq: int) -> None:
    """Drop every event after ``seq`` (used when resuming from a checkpoint)."""
    path = Path(path)
    if not path.exists():
        return
    keep = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.endswith("\n"):
                break
            try:
                if json.loads(line)["seq"] > seq:
                    break
            except (ValueError, KeyError):
                break
            keep.append(line)
    tmp = path.with_suffix(".tmp")
    tmp.write_text("".join(keep), encoding="utf-8")
    os.replace(tmp, path)


def checkpoint_path(run_dir: str | Path, step: int) -> Path:
    return Path(run_dir) / "checkpoints" / f"ckpt-{step:06d}.json"


def write_checkpoint(run_dir: str | Path, step: int, state: dict) -> Path:
    path = checkpoint_path(run_dir, step)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(dumps(state) + "\n", encoding="utf-8")
    os.replace(tmp, path)
    return path


def restore_checkpoint(path: str | Path, expected_hash: str | None = None, override: bool = False) -> dict:
    state = json.loads(Path(path).read_text(encoding="utf-8"))
    if expected_hash is not None and state.get("config_hash") != expected_hash and not override:
        raise CheckpointMismatch(
            f"checkpoint {path} was written under config {state.get('config_hash', '?')[:12]}, "
            f"current config is {expected_hash[:12]}"
        )
    return state


def latest_checkpoint(run_dir: str | Path) -> Path | None:
    paths = sorted((Path(run_dir) / "checkpoints").glob("ckpt-*.json"))
    return paths[-1] if paths else None


@dataclass
class RunReport:
    rows: list[dict] = field(default_factory=list)
    finals: list[float] = field(default_factory=list)
    per_island_best: dict[int, float] = field(default_factory=dict)

    @property
    def best(self) -> float | None:
        return min(self.finals) if self.finals else None

    def summary(self) -> dict[str, float]:
        """Best, P75, mean and worst of final scores (minimize orientation).

        P75 is the score that 75% of runs match or beat from below, i.e. the
        75th percentile of quality.
        """
        if not self.finals:
            return {}
        v = np.asarray(self.finals, dtype=float)
        return {"best": float(v.min()), "p75": float(np.percentile(v, 25)),
                "mean": float(v.mean()), "worst": float(v.max()), "n": len(v)}

    def series_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in self.rows:
            w.writerow(row)
        return buf.getvalue()

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["statistic", "value", "n"])
        s = self.summary()
        for key in ("best", "p75", "mean", "worst"):
            if key in s:
                w.writerow([key, repr(s[key]), s["n"]])
        return buf.getvalue()


def extract_report(logs: str | Path | Sequence[str | Path]) -> RunReport:
    """Build trajectory rows from one event log, or aggregate finals over several."""
    if isinstance(logs, (str, Path)):
        logs = [logs]
    report = RunReport()
    for k, log in enumerate(logs):
        events = read_events(log)
        markers: dict[tuple[int, int], list[str]] = {}
        for e in events:
            if e.kind in MARKER_KINDS and e.island_id is not None:
                markers.setdefault((e.island_id, e.payload.get("step", -1)), []).append(e.kind)
        final = None
        for e in events:
            if e.kind == "momentum_updated":
                p = e.payload
                if len(logs) == 1:
                    report.rows.append({
                        "iteration": p["step"], "island": e.island_id, "s_best": repr(p["best_ever"]),
                        "working_best": repr(p["s_best"]), "m_t": repr(p["m"]), "A_t": repr(p["A"]),
                        "markers": ";".join(markers.get((e.island_id, p["step"]), [])),
                    })
                report.per_island_best[e.island_id] = p["best_ever"]
                final = p["best_ever"] if final is None else min(final, p["best_ever"])
            elif e.kind == "run_started":
                for isl, s0 in e.payload.get("s0", {}).items():
                    report.per_island_best.setdefault(int(isl), s0)
                    final = s0 if final is None else min(final, s0)
            elif e.kind == "run_finished" and e.payload.get("global_best") is not None:
                final = e.payload["global_best"]
        if final is not None:
            report.finals.append(final)
    return report


def write_report(run_dir: str | Path, extra_logs: Iterable[str | Path] = ()) -> Path:
    run_dir = Path(run_dir)
    logs = [run_dir / "events.jsonl", *extra_logs]
    report = extract_report(logs)
    if len(logs) > 1:
        report.rows = extract_report(logs[0]).rows
    out = run_dir / "report.csv"
    out.write_text(report.series_csv(), encoding="utf-8")
    (run_dir / "report_summary.csv").write_text(report.summary_csv(), encoding="utf-8")
    return out
