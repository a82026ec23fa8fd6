"""Hierarchical idea memory: idea pool, hypothesis history, caps and the failure log.

LLM-backed steps (classification, summarization, pruning) take a plain
``ask(bindings) -> str`` callable so this module stays free of provider
plumbing; the orchestrator closes over template rendering and the provider.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Literal

from progevo.errors import IntegrityError, is_fatal
from progevo.llm.parsing import parse_capping, parse_classification, parse_summary

Verdict = Literal["improved", "no_gain", "failed_execution"]
Ask = Callable[[dict], str]

CONTEXT_HEADER = "# Idea Repo\n"
CHARS_PER_TOKEN = 4


def fingerprint(text: str) -> str:
    """Stable 64-bit hash of lowercased, whitespace-collapsed text."""
    norm = re.sub(r"\s+", " ", text.strip().lower())
    return hashlib.blake2b(norm.encode("utf-8"), digest_size=8).hexdigest()


@dataclass
class HypothesisRecord:
    description: str
    score: float | None
    verdict: Verdict | None
    step: int
    is_summary: bool = False

    def line(self) -> str:
        if self.is_summary:
            return f"- [summary @ step {self.step}] {self.description}"
        score = "n/a" if self.score is None else f"{self.score:.6g}"
        return f"- [step {self.step}] {self.verdict} (score {score}): {self.description}"


@dataclass
class Idea:
    id: int
    description: str
    created_step: int
    hypotheses: list[HypothesisRecord] = field(default_factory=list)
    summary: str | None = None
    status: Literal["active", "pruned"] = "active"
    best_score: float | None = None
    trials: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "Idea":
        d = dict(d)
        d["hypotheses"] = [HypothesisRecord(**h) for h in d["hypotheses"]]
        return cls(**d)


@dataclass
class IdeaPool:
    K_idea: int = 10
    K_hyp: int = 5
    ideas: dict[int, Idea] = field(default_factory=dict)
    next_id: int = 0

    def __post_init__(self):
        if self.K_idea < 1 or self.K_hyp < 1:
            raise ValueError("K_idea and K_hyp must be >= 1")

    def active(self) -> list[Idea]:
        return [self.ideas[i] for i in sorted(self.ideas) if self.ideas[i].status == "active"]

    def active_ids(self) -> set[int]:
        return {i.id for i in self.active()}

    def add(self, description: str, step: int) -> Idea:
        idea = Idea(id=self.next_id, description=description.strip(), created_step=step)
        self.ideas[idea.id] = idea
        self.next_id += 1
        return idea

    def to_dict(self) -> dict:
        return {
            "K_idea": self.K_idea,
            "K_hyp": self.K_hyp,
            "next_id": self.next_id,
            "ideas": [asdict(self.ideas[i]) for i in sorted(self.ideas)],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IdeaPool":
        ideas = {x["id"]: Idea.from_dict(x) for x in d["ideas"]}
        return cls(K_idea=d["K_idea"], K_hyp=d["K_hyp"], ideas=ideas, next_id=d["next_id"])


@dataclass(frozen=True)
class LogEntry:
    fingerprint: str
    description: str
    step: int
    island: int | None
    kind: Literal["hypothesis", "pruned_idea"] = "hypothesis"


class FailureLog:
    """Append-only record of attempted hypotheses and pruned ideas."""

    def __init__(self, entries: Iterable[LogEntry] = ()):
        self._entries: list[LogEntry] = []
        self._seen: set[str] = set()
        for e in entries:
            self._append(e)

    def _append(self, entry: LogEntry) -> None:
        self._entries.append(entry)
        self._seen.add(entry.fingerprint)

    def append(self, description: str, step: int, island: int | None, kind="hypothesis") -> LogEntry:
        entry = LogEntry(fingerprint(description), description, step, island, kind)
        self._append(entry)
        return entry

    def __contains__(self, fp: str) -> bool:
        return fp in self._seen

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def entries(self) -> tuple[LogEntry, ...]:
        return tuple(self._entries)

    def to_list(self) -> list[dict]:
        return [asdict(e) for e in self._entries]

    @classmethod
    def from_list(cls, items: list[dict]) -> "FailureLog":
        return cls(LogEntry(**x) for x in items)


def is_duplicate(log: FailureLog, hypothesis_text: str) -> bool:
    return fingerprint(hypothesis_text) in log


def ingest_proposals(pool: IdeaPool, proposals: list[str], classify: Ask, step: int, render=None) -> list[dict]:
    """Merge or add each proposal according to the classifier's verdict.

    Returns one report dict per proposal. A classifier failure skips the
    proposal; it never aborts the iteration.
    """
    render = render or (lambda p: render_context(p, None))
    report = []
    for text in proposals:
        try:
            reply = classify({"idea_repo": render(pool), "idea": text})
            verdict = parse_classification(reply)
        except Exception as exc:
            if is_fatal(exc):
                raise
            report.append({"proposal": text, "outcome": "skipped", "error": str(exc)})
            continue
        if verdict.exists and verdict.idea_id in pool.active_ids():
            idea = pool.ideas[verdict.idea_id]
            if verdict.updated_description:
                idea.description = verdict.updated_description
            report.append({"proposal": text, "outcome": "merged", "idea_id": idea.id})
            continue
        entry = {"proposal": text, "outcome": "new"}
        if verdict.exists:
            entry["warning"] = f"classifier named unknown idea id {verdict.idea_id}"
        idea = pool.add(verdict.new_description or text, step)
        entry["idea_id"] = idea.id
        report.append(entry)
    return report


def record_result(pool: IdeaPool, idea_id: int, hyp: HypothesisRecord, log: FailureLog, island: int | None = None) -> Idea:
    idea = pool.ideas.get(idea_id)
    if idea is None or idea.status != "active":
        raise IntegrityError(f"idea {idea_id} is not active")
    idea.hypotheses.append(hyp)
    idea.trials += 1
    if hyp.score is not None and (idea.best_score is None or hyp.score < idea.best_score):
        idea.best_score = hyp.score
    log.append(hyp.description, hyp.step, island)
    return idea


def render_idea_history(idea: Idea) -> str:
    best = "n/a" if idea.best_score is None else f"{idea.best_score:.6g}"
    lines = [f"Idea {idea.id}: {idea.description}", f"Best result so far: {best}"]
    lines += [h.line() for h in idea.hypotheses]
    return "\n".join(lines)


def maintain_hypothesis_cap(pool: IdeaPool, idea_id: int, summarize: Ask, step: int) -> dict | None:
    """Collapse an idea's history into one summary record once it exceeds K_hyp.

    Returns None when below the cap, else a report. On summarizer failure the
    history is left untouched so the next step retries.
    """
    idea = pool.ideas[idea_id]
    if len(idea.hypotheses) <= pool.K_hyp:
        return None
    before = len(idea.hypotheses)
    try:
        text = parse_summary(summarize({"idea": render_idea_history(idea)}))
    except Exception as exc:
        if is_fatal(exc):
            raise
        return {"idea_id": idea_id, "ok": False, "history_len": before, "error": str(exc)}
    idea.summary = text
    idea.hypotheses = [HypothesisRecord(text, idea.best_score, None, step, is_summary=True)]
    return {"idea_id": idea_id, "ok": True, "history_len": before}


def _fallback_order(pool: IdeaPool) -> list[Idea]:
    # worst best-score first (no score counts as worst), then oldest, then lowest id
    def key(i: Idea):
        return (i.best_score is not None, -(i.best_score or 0.0), i.created_step, i.id)

    return sorted(pool.active(), key=key)


def maintain_idea_cap(pool: IdeaPool, prune: Ask, log: FailureLog, step: int, island: int | None = None, render=None) -> dict | None:
    if len(pool.active()) <= pool.K_idea:
        return None
    render = render or (lambda p: render_context(p, None))
    report: dict = {"requested": [], "pruned": [], "fallback": []}
    try:
        requested = parse_capping(prune({"idea_repo": render(pool), "idea_cap": pool.K_idea}))
    except Exception as exc:
        if is_fatal(exc):
            raise
        requested = []
        report["error"] = str(exc)
    report["requested"] = requested

    def drop(idea: Idea, bucket: str):
        idea.status = "pruned"
        log.append(idea.description, step, island, kind="pruned_idea")
        report[bucket].append(idea.id)

    active = pool.active_ids()
    for i in dict.fromkeys(requested):
        if i in active:
            drop(pool.ideas[i], "pruned")
    for idea in _fallback_order(pool):
        if len(pool.active()) <= pool.K_idea:
            break
        drop(idea, "fallback")
    return report


def render_context(pool: IdeaPool, log: FailureLog | None, budget: int | None = None, rejected: Iterable[str] = ()) -> str:
    """Deterministic text view of the pool for the prompt's idea-repo slot.

    ``budget`` is in approximate tokens; when exceeded, hypothesis lines are
    dropped oldest-first until the text fits (idea headers are never dropped).
    """
    blocks: list[tuple[str, list[tuple[int, int, str]]]] = []
    for idea in pool.active():
        best = "n/a" if idea.best_score is None else f"{idea.best_score:.6g}"
        head = f"## Idea {idea.id} [trials: {idea.trials}, best: {best}]\nDescription: {idea.description}\n"
        if idea.summary:
            head += f"Summary: {idea.summary}\n"
        hyps = [(h.step, n, h.line()) for n, h in enumerate(idea.hypotheses[-pool.K_hyp:]) if not h.is_summary]
        blocks.append((head, hyps))

    tail = ""
    if log is not None and len(log):
        pruned = [e.description for e in log.entries if e.kind == "pruned_idea"]
        tail += f"\n## Failure log: {len(log)} entries\n"
        if pruned:
            tail += "Pruned ideas (do not re-propose):\n" + "".join(f"- {d}\n" for d in pruned[-10:])
    rejected = list(rejected)
    if rejected:
        tail += "\n## Rejected as already attempted\n" + "".join(f"- {t}\n" for t in rejected)

    dropped: set[tuple[int, int, int]] = set()

    def assemble() -> str:
        out = [CONTEXT_HEADER]
        for b, (head, hyps) in enumerate(blocks):
            out.append(head)
            out += [line + "\n" for step, n, line in hyps if (step, b, n) not in dropped]
        out.append(tail)
        return "".join(out)

    text = assemble()
    if budget is None or len(text) <= budget * CHARS_PER_TOKEN:
        return text
    order = sorted((step, b, n) for b, (_, hyps) in enumerate(blocks) for step, n, _ in hyps)
    for key in order:
        dropped.add(key)
        text = assemble()
        if len(text) <= budget * CHARS_PER_TOKEN:
            break
    return text
