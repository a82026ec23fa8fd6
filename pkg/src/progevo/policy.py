"""Intervention policy: when to intervene, backtrack vs. crossover, and where to revert."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from progevo.errors import NoSnapshotError
from progevo.progress import ProgressTracker

ZERO_WEIGHT = 1e-12


@dataclass(frozen=True)
class PolicyConfig:
    epsilon_rel: float = 0.05
    freeze_steps: int = 10
    powerlaw_alpha: float = 1.5
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.epsilon_rel < 1.0:
            raise ValueError(f"epsilon_rel must be in (0, 1), got {self.epsilon_rel}")
        if self.freeze_steps < 0:
            raise ValueError("freeze_steps must be >= 0")
        if not self.powerlaw_alpha > 0:
            raise ValueError("powerlaw_alpha must be > 0")


class ActionKind(str, enum.Enum):
    BACKTRACK = "backtrack"
    CROSSOVER = "crossover"


@dataclass(frozen=True)
class InterventionAction:
    kind: ActionKind
    partner: int | None = None
    reverted_to_step: int | None = None

    def __post_init__(self):
        if self.kind is ActionKind.CROSSOVER and self.partner is None:
            raise ValueError("crossover needs a partner")


@dataclass(frozen=True)
class ActionWeights:
    w_backtrack: float
    w_crossover: Mapping[int, float] = field(default_factory=dict)
    similarity_S: float = 0.0
    best_partner: int | None = None

    def total(self) -> float:
        return self.w_backtrack + sum(self.w_crossover.values())

    def probabilities(self) -> dict[str, float]:
        """P(a) for every action; keys are ``"backtrack"`` and ``"crossover:<id>"``."""
        total = self.total()
        if total <= ZERO_WEIGHT:
            probs = {"backtrack": 1.0}
            probs.update({f"crossover:{j}": 0.0 for j in sorted(self.w_crossover)})
            return probs
        probs = {"backtrack": self.w_backtrack / total}
        for j in sorted(self.w_crossover):
            probs[f"crossover:{j}"] = self.w_crossover[j] / total
        return probs


def should_trigger(tracker: ProgressTracker, cfg: PolicyConfig) -> bool:
    return tracker.momentum_m < cfg.epsilon_rel and tracker.step >= cfg.freeze_steps


def compute_weights(a_i: float, partners: Mapping[int, float]) -> ActionWeights:
    """Backtrack and per-partner crossover weights from absolute progress values.

    With no partners the only action is backtracking (weight 1). Ties for the
    best partner go to the lowest island id; only that partner gets the
    synergy bonus.
    """
    if not partners:
        return ActionWeights(w_backtrack=1.0)
    best = min(partners, key=lambda j: (-partners[j], j))
    a_best = partners[best]
    s = max(0.0, 1.0 - abs(a_i - a_best))
    dominance = max(0.0, a_i - a_best)
    stagnation = s * (1.0 - a_i) * (1.0 - a_best)
    synergy = s * a_i * a_best
    w_c = {j: max(0.0, a_j - a_i) for j, a_j in partners.items()}
    w_c[best] += synergy
    return ActionWeights(
        w_backtrack=dominance + stagnation,
        w_crossover=w_c,
        similarity_S=s,
        best_partner=best,
    )


def sample_action(weights: ActionWeights, rng: np.random.Generator) -> InterventionAction:
    """Draw one action with probability proportional to its weight.

    Always consumes exactly one uniform draw so RNG streams stay aligned
    regardless of which branch is taken.
    """
    u = rng.random()
    total = weights.total()
    if total <= ZERO_WEIGHT:
        return InterventionAction(ActionKind.BACKTRACK)
    threshold = u * total
    acc = weights.w_backtrack
    if threshold < acc:
        return InterventionAction(ActionKind.BACKTRACK)
    last = None
    for j in sorted(weights.w_crossover):
        w = weights.w_crossover[j]
        if w <= 0.0:
            continue
        last = j
        acc += w
        if threshold < acc:
            return InterventionAction(ActionKind.CROSSOVER, partner=j)
    # u*total landed on the upper edge through rounding
    if last is None:
        return InterventionAction(ActionKind.BACKTRACK)
    return InterventionAction(ActionKind.CROSSOVER, partner=last)


def powerlaw_mass(n: int, alpha: float) -> np.ndarray:
    """Normalized mass over snapshot positions 0..n-1, earliest heaviest."""
    w = np.arange(1, n + 1, dtype=float) ** (-alpha)
    return w / w.sum()


def sample_backtrack_target(snapshot_steps: Sequence[int], alpha: float, rng: np.random.Generator) -> int:
    if len(snapshot_steps) == 0:
        raise NoSnapshotError("no snapshot available to revert to")
    steps = list(snapshot_steps)
    if any(b <= a for a, b in zip(steps, steps[1:])):
        raise ValueError("snapshot steps must be strictly increasing")
    k = rng.choice(len(steps), p=powerlaw_mass(len(steps), alpha))
    return int(steps[k])
