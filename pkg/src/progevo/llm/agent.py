"""A stateless scripted agent that answers every template for builtin landscapes.

It stands in for an LLM in simulations. Behaviour is a pure function of the
prompt text and ``(seed, island, step)``:

* by default it proposes a damped Newton step from the current best solution
  (pure local refinement, so it settles in whatever basin it starts in);
* when the idea repo lists hypotheses rejected as already attempted, an
  exploring profile proposes a random jump inside its box instead, while a
  non-exploring profile re-issues the refinement as a retry;
* a profile may schedule one fixed jump at a given step.

Rejections only appear after a backtrack replays a state whose next
refinement is already in the failure log, so exploration is gated on the
intervention machinery rather than on chance.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from progevo.evaluation import LandscapeEvaluator, format_vector, parse_vector

REFINE_IDEA = "Local descent from the current best solution"
EXPLORE_IDEA = "Jump to an unexplored region of the search space"
JUMP_IDEA = "Scripted relocation to a known region"

_FENCE = re.compile(r"```[^\n]*\n(.*?)```", re.S)
_IDEA_HEAD = re.compile(r"^## Idea (\d+) \[trials: (\d+), best: ([^\]]+)\]\nDescription: (.*)$", re.M)


@dataclass
class AgentProfile:
    explore_on_reject: bool = True
    explore_low: float = -10.0
    explore_high: float = 10.0
    descent_rate: float = 0.5
    jump_step: int | None = None
    jump_to: str | None = None

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "AgentProfile":
        return cls(**d)


def _repo_ideas(prompt: str) -> list[tuple[int, int, str]]:
    return [(int(m.group(1)), int(m.group(2)), m.group(4).strip()) for m in _IDEA_HEAD.finditer(prompt)]


def _rejected(prompt: str) -> list[str]:
    marker = "## Rejected as already attempted\n"
    if marker not in prompt:
        return []
    block = prompt.split(marker, 1)[1]
    out = []
    for line in block.splitlines():
        if not line.startswith("- "):
            break
        out.append(line[2:])
    return out


class ScriptedAgent:
    def __init__(self, landscape: LandscapeEvaluator, seed: int = 0,
                 profiles: Mapping[int, AgentProfile] | None = None, default: AgentProfile | None = None):
        self.landscape = landscape
        self.seed = seed
        self.profiles = dict(profiles or {})
        self.default = default or AgentProfile()

    def profile(self, island: int) -> AgentProfile:
        return self.profiles.get(island, self.default)

    def _mode(self, prompt: str, island: int, step: int) -> str:
        p = self.profile(island)
        if p.jump_step is not None and step == p.jump_step and p.jump_to is not None:
            return "jump"
        if _rejected(prompt) and p.explore_on_reject:
            return "explore"
        return "refine"

    def _descend(self, x: np.ndarray, rate: float) -> np.ndarray:
        h = 1e-4
        f0 = self.landscape(x)
        step = np.zeros_like(x)
        for k in range(x.size):
            e = np.zeros_like(x)
            e[k] = h
            fp, fm = self.landscape(x + e), self.landscape(x - e)
            g = (fp - fm) / (2 * h)
            curv = (fp - 2 * f0 + fm) / (h * h)
            step[k] = -rate * g / curv if curv > 1e-9 else -rate * g
        return x + step

    def complete(self, prompt: str, *, role=None, template=None, context=None) -> str:
        ctx = dict(context or {})
        island, step = int(ctx.get("island", 0)), int(ctx.get("step", 0))
        handler = getattr(self, f"_on_{template}", None)
        if handler is None:
            raise ValueError(f"scripted agent cannot answer template {template!r}")
        return handler(prompt, island, step)

    def _on_idea_generation(self, prompt, island, step) -> str:
        idea = {"refine": REFINE_IDEA, "explore": EXPLORE_IDEA, "jump": JUMP_IDEA}[self._mode(prompt, island, step)]
        return f"Idea 1\n\nIdea: {idea}\n\nReasoning: chosen by the scripted agent at step {step}.\n"

    def _on_idea_classification(self, prompt, island, step) -> str:
        m = re.search(r"Here is the idea to be classified:\n\n(.*?)\n\nYour job", prompt, re.S)
        idea = m.group(1).strip() if m else ""
        for idea_id, _, desc in _repo_ideas(prompt):
            if desc == idea:
                return f"Idea Exists: True\nIdea ID: {idea_id}\nUpdated description: {desc}\n"
        return f"Idea Exists: False\nIdea description: {idea}\n"

    def _on_idea_selection(self, prompt, island, step) -> str:
        mode = self._mode(prompt, island, step)
        p = self.profile(island)
        wanted = {"refine": REFINE_IDEA, "explore": EXPLORE_IDEA, "jump": JUMP_IDEA}[mode]
        ideas = _repo_ideas(prompt)
        match = [(i, n) for i, n, d in ideas if d == wanted]
        idea_id, trials = match[0] if match else (ideas[0][:2] if ideas else (0, 0))
        fences = _FENCE.findall(prompt)
        x = parse_vector(fences[0]) if fences else np.zeros(1)
        if mode == "jump":
            new = parse_vector(p.jump_to)
            desc = f"Scripted jump at step {step} to {format_vector(new)}"
        elif mode == "explore":
            rng = np.random.default_rng([self.seed, island, step])
            new = rng.uniform(p.explore_low, p.explore_high, size=x.size)
            desc = f"Exploratory jump at step {step} to {format_vector(new)}"
        else:
            new = self._descend(x, p.descent_rate)
            desc = f"Local descent trial {trials}: move from {format_vector(x)} to {format_vector(new)}"
            rejected = _rejected(prompt)
            if rejected:
                desc += f" (retry {len(rejected)} at step {step})"
        return f"Idea ID: {idea_id}\nExperiment description: {desc}\n```\n{format_vector(new)}\n```\n"

    def _on_history_summarization(self, prompt, island, step) -> str:
        m = re.search(r"Best result so far: (\S+)", prompt)
        best = m.group(1) if m else "n/a"
        return f"- Results: best trial so far scored {best}; local moves around it give diminishing returns.\n"

    def _on_idea_capping(self, prompt, island, step) -> str:
        m = re.search(r"cap the number of ideas under consideration at (\d+)", prompt)
        cap = int(m.group(1)) if m else 1
        ids = [i for i, _, _ in _repo_ideas(prompt)]
        drop = ids[: max(0, len(ids) - cap)]
        return f"Dropping Ideas: [{', '.join(map(str, drop))}]\n"

    def state(self) -> dict:
        return {}

    def load_state(self, state: dict) -> None:
        pass
