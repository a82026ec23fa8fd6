"""Scale-invariant progress quantities: relative progress, momentum, absolute progress.

All formulas work in *minimize toward r* orientation. Maximize tasks are
negated once, at ingestion, by :func:`normalize_score`; nothing downstream
knows about the original direction.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Literal, NamedTuple

from progevo.errors import EvaluationInvalid

Direction = Literal["minimize", "maximize"]


@dataclass(frozen=True)
class ScoreSpec:
    """How raw task scores map onto the internal minimize frame.

    ``lower_bound_r`` is the target bound in task units: a lower bound for
    minimize tasks, an upper bound for maximize tasks.
    """

    direction: Direction = "minimize"
    lower_bound_r: float = 0.0
    gap_epsilon: float = 1e-12

    def __post_init__(self):
        if self.direction not in ("minimize", "maximize"):
            raise ValueError(f"direction must be minimize or maximize, got {self.direction!r}")
        if not self.gap_epsilon > 0:
            raise ValueError("gap_epsilon must be > 0")
        if not math.isfinite(self.lower_bound_r):
            raise ValueError("lower_bound_r must be finite")

    @property
    def r(self) -> float:
        """Target bound in normalized (minimize) units."""
        return self.lower_bound_r if self.direction == "minimize" else -self.lower_bound_r

    def to_task_units(self, score: float) -> float:
        return score if self.direction == "minimize" else -score


class NormalizedScore(NamedTuple):
    value: float
    clamped: bool


def normalize_score(raw: float, spec: ScoreSpec) -> NormalizedScore:
    """Map a raw task score into minimize orientation, clamping at the bound."""
    if raw is None or not math.isfinite(raw):
        raise EvaluationInvalid(f"non-finite score {raw!r}")
    value = float(raw) if spec.direction == "minimize" else -float(raw)
    if value < spec.r:
        return NormalizedScore(spec.r, True)
    return NormalizedScore(value, False)


def relative_progress(s_prev: float, s_new: float, spec: ScoreSpec) -> float:
    """Fraction of the previous gap ``s_prev - r`` closed by ``s_new``.

    Zero when there is no improvement or when the previous gap is already
    within ``gap_epsilon`` of the target.
    """
    r = spec.r
    s_new = max(s_new, r)
    gap = s_prev - r
    if s_new >= s_prev or gap <= spec.gap_epsilon:
        return 0.0
    return min(1.0, max(0.0, (s_prev - s_new) / gap))


@dataclass(frozen=True)
class ProgressTracker:
    s0: float
    s_prev: float
    s_best: float
    momentum_m: float = 1.0
    beta: float = 0.9
    step: int = 0

    def __post_init__(self):
        if not 0.0 <= self.beta < 1.0:
            raise ValueError(f"beta must be in [0, 1), got {self.beta}")

    @classmethod
    def start(cls, s0: float, beta: float = 0.9) -> "ProgressTracker":
        return cls(s0=s0, s_prev=s0, s_best=s0, momentum_m=1.0, beta=beta, step=0)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ProgressTracker":
        return cls(**d)


def update_momentum(tracker: ProgressTracker, r_t: float) -> ProgressTracker:
    """One EWMA step of the relative-improvement momentum."""
    if not 0.0 <= r_t <= 1.0:
        raise ValueError(f"relative progress must be in [0, 1], got {r_t}")
    m = tracker.beta * tracker.momentum_m + (1.0 - tracker.beta) * r_t
    return replace(tracker, momentum_m=m, step=tracker.step + 1)


def observe(tracker: ProgressTracker, s_curr: float | None, spec: ScoreSpec) -> tuple[ProgressTracker, float]:
    """Fold one evaluation into the tracker; returns the new tracker and R_t.

    ``s_curr=None`` stands for an iteration without a usable score (crash,
    timeout, duplicate); it counts as a barren step.
    """
    s_best = tracker.s_prev if s_curr is None else min(s_curr, tracker.s_prev)
    r_t = relative_progress(tracker.s_prev, s_best, spec)
    tracker = update_momentum(tracker, r_t)
    return replace(tracker, s_best=s_best, s_prev=s_best), r_t


def absolute_progress(tracker: ProgressTracker, spec: ScoreSpec) -> float:
    """Total fraction of the initial gap closed so far, in [0, 1]."""
    total = tracker.s0 - spec.r
    if total <= spec.gap_epsilon:
        return 1.0
    a = (tracker.s0 - tracker.s_best) / total
    return min(1.0, max(0.0, a))
