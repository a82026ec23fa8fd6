"""Candidate evaluation: sandboxed subprocess runs and in-process builtin landscapes."""

from __future__ import annotations

import math
import os
import re
import shutil
import signal
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Protocol, Sequence

import numpy as np

from progevo.errors import ConfigError
from progevo.progress import ScoreSpec

Status = Literal["scored", "crashed", "timed_out", "unparseable"]

DEFAULT_ENV_ALLOWLIST = ("PATH", "HOME", "LANG", "LC_ALL", "TMPDIR", "SYSTEMROOT")


@dataclass(frozen=True)
class EvalResult:
    status: Status
    score: float | None = None
    stdout_tail: str = ""
    duration: float = 0.0

    def __post_init__(self):
        scored = self.score is not None and math.isfinite(self.score)
        if (self.status == "scored") != scored:
            raise ValueError(f"status {self.status!r} inconsistent with score {self.score!r}")

    @property
    def ok(self) -> bool:
        return self.status == "scored"


class Evaluator(Protocol):
    score_spec: ScoreSpec

    def evaluate(self, candidate_payload: str) -> EvalResult: ...


@dataclass
class TaskSpec:
    workspace_template: Path
    candidate_filename: str
    eval_command: list[str]
    score_pattern: str
    score_spec: ScoreSpec = field(default_factory=ScoreSpec)
    timeout: float = 60.0
    max_output_bytes: int = 1 << 20
    env_allowlist: Sequence[str] = DEFAULT_ENV_ALLOWLIST
    run_root: Path | None = None
    keep_artifacts: bool = False

    def __post_init__(self):
        self.workspace_template = Path(self.workspace_template)
        if not self.eval_command:
            raise ConfigError("task.eval_command", "must be non-empty")
        try:
            groups = re.compile(self.score_pattern).groups
        except re.error as exc:
            raise ConfigError("task.score_pattern", f"invalid regex: {exc}") from exc
        if groups != 1:
            raise ConfigError("task.score_pattern", f"needs exactly one capture group, has {groups}")
        if not self.timeout > 0:
            raise ConfigError("task.timeout", "must be > 0")


def _kill_group(proc: subprocess.Popen) -> None:
    try:
        os.killpg(proc.pid, signal.SIGKILL)
    except (ProcessLookupError, PermissionError):
        proc.kill()


def evaluate(spec: TaskSpec, candidate_payload: str) -> EvalResult:
    """Run the task's command against a fresh copy of the workspace."""
    if not spec.workspace_template.is_dir():
        raise ConfigError("task.workspace_template", f"{spec.workspace_template} is not a directory")
    if spec.run_root is not None:
        Path(spec.run_root).mkdir(parents=True, exist_ok=True)
    root = Path(tempfile.mkdtemp(prefix="eval-", dir=spec.run_root))
    workspace = root / "ws"
    shutil.copytree(spec.workspace_template, workspace)
    target = workspace / spec.candidate_filename
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(candidate_payload, encoding="utf-8")
    env = {k: os.environ[k] for k in spec.env_allowlist if k in os.environ}
    out_path = root / "output.log"
    start = time.monotonic()
    timed_out = False
    try:
        with open(out_path, "wb") as out:
            proc = subprocess.Popen(
                spec.eval_command, cwd=workspace, stdout=out, stderr=subprocess.STDOUT,
                stdin=subprocess.DEVNULL, env=env, start_new_session=True,
            )
            try:
                code = proc.wait(timeout=spec.timeout)
            except subprocess.TimeoutExpired:
                timed_out = True
                _kill_group(proc)
                code = proc.wait()
        duration = time.monotonic() - start
        size = out_path.stat().st_size
        with open(out_path, "rb") as f:
            f.seek(max(0, size - spec.max_output_bytes))
            tail = f.read().decode("utf-8", errors="replace")
    except OSError as exc:
        return EvalResult("crashed", stdout_tail=str(exc), duration=time.monotonic() - start)
    finally:
        if not spec.keep_artifacts:
            shutil.rmtree(root, ignore_errors=True)
    if timed_out:
        return EvalResult("timed_out", stdout_tail=tail, duration=duration)
    if code != 0:
        return EvalResult("crashed", stdout_tail=tail, duration=duration)
    matches = re.findall(spec.score_pattern, tail)
    if not matches:
        return EvalResult("unparseable", stdout_tail=tail, duration=duration)
    try:
        score = float(matches[-1])
    except ValueError:
        return EvalResult("unparseable", stdout_tail=tail, duration=duration)
    if not math.isfinite(score):
        return EvalResult("unparseable", stdout_tail=tail, duration=duration)
    return EvalResult("scored", score=score, stdout_tail=tail, duration=duration)


class SubprocessEvaluator:
    def __init__(self, spec: TaskSpec):
        self.spec = spec
        self.score_spec = spec.score_spec

    def evaluate(self, candidate_payload: str) -> EvalResult:
        return evaluate(self.spec, candidate_payload)


def parse_vector(payload: str) -> np.ndarray:
    """Comma-separated reals; raises ValueError on anything else."""
    parts = [p.strip() for p in payload.strip().split(",")]
    if not parts or any(p == "" for p in parts):
        raise ValueError("empty component")
    x = np.array([float(p) for p in parts], dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite component")
    return x


def format_vector(x) -> str:
    return ",".join(f"{v:.10g}" for v in np.atleast_1d(x))


# two-basin constants: the wide shallow basin has the lower curvature
SHALLOW_CENTER = 3.0
SHALLOW_FLOOR = 1.0
SHALLOW_CURVATURE = 0.1
DEEP_CENTER = -3.0
DEEP_FLOOR = 0.05
DEEP_CURVATURE = 0.5


def _padded(center: float, dim: int) -> np.ndarray:
    c = np.zeros(dim)
    c[0] = center
    return c


def sphere(x: np.ndarray) -> float:
    return float(np.sum(x * x))


def deceptive_two_basin(x: np.ndarray) -> float:
    """Min of a wide shallow quadratic (floor 1.0 at x0=3) and a narrower
    deep one (floor 0.05 at x0=-3). Descent from the right of x0≈-0.81
    settles in the shallow basin."""
    dim = x.shape[0]
    shallow = SHALLOW_FLOOR + SHALLOW_CURVATURE * float(np.sum((x - _padded(SHALLOW_CENTER, dim)) ** 2))
    deep = DEEP_FLOOR + DEEP_CURVATURE * float(np.sum((x - _padded(DEEP_CENTER, dim)) ** 2))
    return min(shallow, deep)


def staircase(x: np.ndarray, width: float = 1.0, height: float = 1.0) -> float:
    """Piecewise-constant in the L1 norm: flat terraces, so local moves
    smaller than ``width`` never change the score."""
    return height * math.ceil(float(np.sum(np.abs(x))) / width)


LANDSCAPES = {"sphere": sphere, "deceptive_two_basin": deceptive_two_basin, "staircase": staircase}


class LandscapeEvaluator:
    """In-process evaluator over a numeric-vector payload; always minimize, r=0."""

    def __init__(self, name: str, **params):
        if name not in LANDSCAPES:
            raise ConfigError("task.landscape", f"unknown landscape {name!r}")
        self.name = name
        self.params = params
        self.fn = LANDSCAPES[name]
        self.score_spec = ScoreSpec("minimize", 0.0)

    def __call__(self, x) -> float:
        return self.fn(np.asarray(x, dtype=float), **self.params)

    def evaluate(self, candidate_payload: str) -> EvalResult:
        try:
            x = parse_vector(candidate_payload)
        except ValueError as exc:
            return EvalResult("unparseable", stdout_tail=f"{exc}: {candidate_payload[:200]}")
        return EvalResult("scored", score=self(x))


def builtin_landscapes(name: str, **params) -> LandscapeEvaluator:
    return LandscapeEvaluator(name, **params)
