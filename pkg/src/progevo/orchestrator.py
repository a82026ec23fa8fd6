"""The island loop: two-stage generation/selection, evaluation, momentum tracking,
snapshots, and backtrack/crossover interventions.

Islands advance in lock-step rounds. Each round has three phases:

1. propose (sequential, island order): generation, classification, selection,
   duplicate check;
2. evaluate (optionally concurrent, one in-flight evaluation per island);
3. apply (sequential, island order): record, momentum, caps, snapshot,
   board publish, intervention.

Because phases 1 and 3 run in a fixed order, the event log does not depend
on evaluation timing, which keeps scripted runs replayable byte for byte.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from progevo.config import RunConfig
from progevo.errors import ConfigError, NoSnapshotError, ProgevoError, is_fatal
from progevo.evaluation import (
    EvalResult,
    Evaluator,
    LandscapeEvaluator,
    SubprocessEvaluator,
    TaskSpec,
)
from progevo.llm.agent import AgentProfile, ScriptedAgent
from progevo.llm.parsing import parse_generation, parse_selection
from progevo.llm.providers import LLM, HttpProvider, MockProvider, ProviderConfig
from progevo.memory import (
    FailureLog,
    HypothesisRecord,
    IdeaPool,
    ingest_proposals,
    is_duplicate,
    maintain_hypothesis_cap,
    maintain_idea_cap,
    record_result,
    render_context,
)
from progevo.persistence import (
    EventLog,
    RunReport,
    config_hash,
    dumps,
    extract_report,
    latest_checkpoint,
    restore_checkpoint,
    truncate_events,
    write_checkpoint,
    write_report,
)
from progevo.policy import (
    ActionKind,
    InterventionAction,
    PolicyConfig,
    compute_weights,
    sample_action,
    sample_backtrack_target,
    should_trigger,
)
from progevo.progress import (
    ProgressTracker,
    ScoreSpec,
    absolute_progress,
    normalize_score,
    observe,
)

logger = logging.getLogger(__name__)

MAX_REJECTED_SHOWN = 5


@dataclass(frozen=True)
class Snapshot:
    step: int
    pool_state: dict
    tracker_state: dict
    best_payload: str
    best_score: float

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Snapshot":
        return cls(**d)


@dataclass(frozen=True)
class BoardEntry:
    A: float
    s_best: float
    best_payload: str
    updated_step: int


class ProgressBoard:
    """The one structure islands share; each entry is replaced atomically."""

    def __init__(self, entries: dict[int, BoardEntry] | None = None):
        self._entries = dict(entries or {})
        self._lock = threading.Lock()

    def publish(self, island: int, entry: BoardEntry) -> None:
        with self._lock:
            self._entries[island] = entry

    def get(self, island: int) -> BoardEntry | None:
        with self._lock:
            return self._entries.get(island)

    def others(self, island: int) -> dict[int, BoardEntry]:
        with self._lock:
            return {j: e for j, e in self._entries.items() if j != island}

    def to_dict(self) -> dict:
        with self._lock:
            return {str(k): asdict(v) for k, v in sorted(self._entries.items())}

    @classmethod
    def from_dict(cls, d: dict) -> "ProgressBoard":
        return cls({int(k): BoardEntry(**v) for k, v in d.items()})


@dataclass
class IslandState:
    island_id: int
    tracker: ProgressTracker
    pool: IdeaPool
    rng: np.random.Generator
    current_best_payload: str
    current_best_score: float
    best_ever_score: float
    best_ever_payload: str
    snapshots: list[Snapshot] = field(default_factory=list)
    archive: list[Snapshot] = field(default_factory=list)
    freeze_until: int = 0
    rejected: list[str] = field(default_factory=list)
    shared_context: str | None = None

    @property
    def step(self) -> int:
        return self.tracker.step

    def take_snapshot(self) -> Snapshot:
        snap = Snapshot(self.step, self.pool.to_dict(), self.tracker.to_dict(),
                        self.current_best_payload, self.current_best_score)
        if self.snapshots and self.snapshots[-1].step >= snap.step:
            raise ValueError("snapshots must be strictly increasing in step")
        self.snapshots.append(snap)
        return snap

    def to_dict(self) -> dict:
        return {
            "island_id": self.island_id,
            "tracker": self.tracker.to_dict(),
            "pool": self.pool.to_dict(),
            "rng": self.rng.bit_generator.state,
            "current_best_payload": self.current_best_payload,
            "current_best_score": self.current_best_score,
            "best_ever_score": self.best_ever_score,
            "best_ever_payload": self.best_ever_payload,
            "snapshots": [s.to_dict() for s in self.snapshots],
            "archive": [s.to_dict() for s in self.archive],
            "freeze_until": self.freeze_until,
            "rejected": list(self.rejected),
            "shared_context": self.shared_context,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IslandState":
        rng = np.random.default_rng()
        rng.bit_generator.state = d["rng"]
        return cls(
            island_id=d["island_id"],
            tracker=ProgressTracker.from_dict(d["tracker"]),
            pool=IdeaPool.from_dict(d["pool"]),
            rng=rng,
            current_best_payload=d["current_best_payload"],
            current_best_score=d["current_best_score"],
            best_ever_score=d["best_ever_score"],
            best_ever_payload=d["best_ever_payload"],
            snapshots=[Snapshot.from_dict(s) for s in d["snapshots"]],
            archive=[Snapshot.from_dict(s) for s in d["archive"]],
            freeze_until=d["freeze_until"],
            rejected=list(d["rejected"]),
            shared_context=d["shared_context"],
        )


@dataclass
class Pending:
    idea_id: int
    description: str
    payload: str
    duplicate: bool = False


@dataclass
class RunResult:
    global_best: float
    global_best_payload: str
    islands: dict[int, dict]
    iterations_done: int
    report: RunReport
    run_dir: Path


def fence(payload: str) -> str:
    return f"```\n{payload}\n```"


def build_evaluator(cfg: RunConfig) -> Evaluator:
    t = cfg.task
    if t.landscape is not None:
        return LandscapeEvaluator(t.landscape, **t.landscape_params)
    spec = TaskSpec(
        workspace_template=Path(t.workspace_template),
        candidate_filename=t.candidate_filename,
        eval_command=list(t.eval_command),
        score_pattern=t.score_pattern,
        score_spec=ScoreSpec(t.direction, t.lower_bound, cfg.metrics.gap_epsilon),
        timeout=t.timeout,
        max_output_bytes=t.max_output_bytes,
        env_allowlist=tuple(t.env_allowlist),
        run_root=Path(cfg.run_dir) / "workspaces",
        keep_artifacts=cfg.keep_artifacts,
    )
    return SubprocessEvaluator(spec)


def build_provider(cfg: RunConfig, evaluator: Evaluator):
    p = cfg.provider
    if p.kind == "mock":
        return MockProvider.from_file(p.script)
    if p.kind == "http":
        return HttpProvider(ProviderConfig(
            endpoint=p.endpoint, model_name=p.model_name, secondary_model_name=p.secondary_model_name,
            api_key_env=p.api_key_env, timeout=p.timeout, max_retries=p.max_retries,
            temperature=p.temperature, rate_limit_per_s=p.rate_limit_per_s,
        ))
    if not isinstance(evaluator, LandscapeEvaluator):
        raise ConfigError("provider.kind", "scripted agent needs a builtin landscape")
    profiles = {int(k): AgentProfile.from_dict(v) for k, v in p.profiles.items()}
    return ScriptedAgent(evaluator, seed=cfg.seed, profiles=profiles, default=AgentProfile.from_dict(p.default_profile))


class Engine:
    def __init__(self, cfg: RunConfig, evaluator: Evaluator | None = None, provider=None):
        self.cfg = cfg
        self.run_dir = Path(cfg.run_dir)
        self.evaluator = evaluator or build_evaluator(cfg)
        self.provider = provider or build_provider(cfg, self.evaluator)
        self.llm = LLM(self.provider)
        self.spec = ScoreSpec(
            self.evaluator.score_spec.direction, self.evaluator.score_spec.lower_bound_r, cfg.metrics.gap_epsilon
        )
        self.policy = PolicyConfig(cfg.metrics.epsilon_rel, cfg.metrics.freeze_steps, cfg.metrics.alpha, cfg.seed)
        self.hash = config_hash(cfg.hash_view())
        self.islands: list[IslandState] = []
        self.logs: dict[int, FailureLog] = {}
        self.board = ProgressBoard()
        self.next_iteration = 0
        self.events: EventLog | None = None
        self.finished = False
        self._ckpt_every = cfg.checkpoint_interval or cfg.metrics.snapshot_interval

    # -- setup -------------------------------------------------------------

    def _initial_payloads(self) -> list[str]:
        t = self.cfg.task
        return list(t.initial_payloads) if t.initial_payloads is not None else [t.initial_payload] * self.cfg.islands

    def initialize(self) -> None:
        """Score the starting payloads; any failure aborts before files are written."""
        payloads = self._initial_payloads()
        scores = []
        for i, payload in enumerate(payloads):
            res = self.evaluator.evaluate(payload)
            if not res.ok:
                raise ConfigError("task.initial_payload", f"island {i} start payload did not score ({res.status})")
            scores.append(normalize_score(res.score, self.spec).value)
        shared = FailureLog()
        for i, (payload, s0) in enumerate(zip(payloads, scores)):
            island = IslandState(
                island_id=i,
                tracker=ProgressTracker.start(s0, self.cfg.metrics.beta),
                pool=IdeaPool(self.cfg.memory.K_idea, self.cfg.memory.K_hyp),
                rng=np.random.default_rng([self.cfg.seed, i]),
                current_best_payload=payload, current_best_score=s0,
                best_ever_score=s0, best_ever_payload=payload,
            )
            island.take_snapshot()
            self.islands.append(island)
            self.logs[i] = shared if self.cfg.memory.shared_failure_log else FailureLog()
            self._publish(island)

    def _clock(self):
        mode = self.cfg.clock
        if mode == "auto":
            mode = "wall" if self.cfg.provider.kind == "http" else "logical"
        return time.time if mode == "wall" else None

    def _open_events(self) -> None:
        self.run_dir.mkdir(parents=True, exist_ok=True)
        self.events = EventLog(self.run_dir / "events.jsonl", clock=self._clock())

    def emit(self, kind: str, island: int | None = None, **payload) -> int:
        return self.events.append(kind, island, payload)

    # -- state ---------------------------------------------------------------

    def state(self) -> dict:
        logs = {}
        seen: dict[int, int] = {}
        for i, log in self.logs.items():
            if id(log) in seen:
                logs[str(i)] = {"shared_with": seen[id(log)]}
            else:
                seen[id(log)] = i
                logs[str(i)] = {"entries": log.to_list()}
        return {
            "config_hash": self.hash,
            "next_iteration": self.next_iteration,
            "event_seq": self.events.seq if self.events else 0,
            "islands": [isl.to_dict() for isl in self.islands],
            "failure_logs": logs,
            "board": self.board.to_dict(),
            "provider": self.provider.state() if hasattr(self.provider, "state") else {},
            "finished": self.finished,
        }

    def load_state(self, state: dict) -> None:
        self.next_iteration = state["next_iteration"]
        self.islands = [IslandState.from_dict(d) for d in state["islands"]]
        self.logs = {}
        for key in sorted(state["failure_logs"], key=int):
            v = state["failure_logs"][key]
            self.logs[int(key)] = self.logs[v["shared_with"]] if "shared_with" in v else FailureLog.from_list(v["entries"])
        self.board = ProgressBoard.from_dict(state["board"])
        if hasattr(self.provider, "load_state"):
            self.provider.load_state(state.get("provider", {}))

    def checkpoint(self) -> Path:
        return write_checkpoint(self.run_dir, self.next_iteration, self.state())

    # -- helpers ---------------------------------------------------------------

    def _publish(self, island: IslandState) -> None:
        self.board.publish(island.island_id, BoardEntry(
            A=absolute_progress(island.tracker, self.spec), s_best=island.tracker.s_best,
            best_payload=island.current_best_payload, updated_step=island.step,
        ))

    def _repo(self, island: IslandState, pool: IdeaPool | None = None) -> str:
        return render_context(pool or island.pool, self.logs[island.island_id],
                              self.cfg.memory.context_budget, island.rejected[-MAX_REJECTED_SHOWN:])

    def _sota(self, island: IslandState) -> str:
        text = fence(island.current_best_payload)
        if island.shared_context:
            text += "\n\nA solution shared by another island:\n\n" + fence(island.shared_context)
        return text

    def _bindings(self, island: IslandState) -> dict:
        t = self.cfg.task
        repo = self._repo(island)
        selection_background = (
            f"{t.background}\n\nThe current state-of-the-art algorithm is as follows:\n\n"
            f"{self._sota(island)}\n\n{repo}"
        ).lstrip()
        return {
            "task_name": t.name,
            "task_background": t.background,
            "sota_solution": self._sota(island),
            "idea_repo": repo,
            "attempt_budget": t.attempt_budget or self.cfg.iterations,
            "coding_instructions": t.coding_instructions,
            "selection_background": selection_background,
        }

    # -- phase 1: propose --------------------------------------------------------

    def propose(self, island: IslandState) -> Pending | None:
        i = island.island_id
        ctx = {"island": i, "step": island.step}
        b = self._bindings(island)
        try:
            gen = parse_generation(self.llm.ask("idea_generation", b, ctx))
        except ProgevoError as exc:
            if is_fatal(exc):
                raise
            self.emit("provider_error", i, step=island.step + 1, stage="idea_generation", error=str(exc))
            return None
        for idea, reasoning in gen.ideas:
            self.emit("idea_proposed", i, step=island.step + 1, idea=idea, reasoning=reasoning)
        report = ingest_proposals(
            island.pool, [idea for idea, _ in gen.ideas],
            lambda bind: self.llm.ask("idea_classification", bind, ctx), island.step + 1,
            render=lambda pool: self._repo(island, pool),
        )
        for entry in report:
            self.emit("idea_classified", i, step=island.step + 1, **entry)

        b = self._bindings(island)
        try:
            sel = parse_selection(self.llm.ask(
                "idea_selection",
                {"task_background": b["selection_background"], "coding_instructions": b["coding_instructions"]},
                ctx,
            ))
        except ProgevoError as exc:
            if is_fatal(exc):
                raise
            self.emit("provider_error", i, step=island.step + 1, stage="idea_selection", error=str(exc))
            return None
        if sel.idea_id not in island.pool.active_ids():
            self.emit("provider_error", i, step=island.step + 1, stage="idea_selection",
                      error=f"selected idea {sel.idea_id} is not in the active pool")
            return None
        self.emit("idea_selected", i, step=island.step + 1, idea_id=sel.idea_id, description=sel.experiment_description)
        if is_duplicate(self.logs[i], sel.experiment_description):
            island.rejected.append(sel.experiment_description)
            self.emit("duplicate_skipped", i, step=island.step + 1, idea_id=sel.idea_id,
                      description=sel.experiment_description)
            return Pending(sel.idea_id, sel.experiment_description, sel.candidate_payload, duplicate=True)
        return Pending(sel.idea_id, sel.experiment_description, sel.candidate_payload)

    # -- phase 3: apply ------------------------------------------------------------

    def apply(self, island: IslandState, pending: Pending | None, result: EvalResult | None) -> None:
        i = island.island_id
        t = island.step + 1
        log = self.logs[i]
        score = None
        if pending is not None and not pending.duplicate:
            clamped = False
            if result.ok:
                score, clamped = normalize_score(result.score, self.spec)
                verdict = "improved" if score < island.tracker.s_best else "no_gain"
            else:
                verdict = "failed_execution"
            idea = record_result(island.pool, pending.idea_id, HypothesisRecord(pending.description, score, verdict, t), log, i)
            island.rejected.clear()
            self.emit("evaluated", i, step=t, idea_id=pending.idea_id, status=result.status, score=score,
                      verdict=verdict, clamped=clamped, history_len=len(idea.hypotheses), log_len=len(log))
            if verdict == "improved":
                island.current_best_payload, island.current_best_score = pending.payload, score
                island.shared_context = None
                if score < island.best_ever_score:
                    island.best_ever_score, island.best_ever_payload = score, pending.payload

        # both caps are checked whether or not the hypothesis ran
        ctx = {"island": i, "step": t}
        if pending is not None:
            rep = maintain_hypothesis_cap(island.pool, pending.idea_id,
                                          lambda bind: self.llm.ask("history_summarization", bind, ctx), t)
            if rep is not None:
                self.emit("summarized", i, step=t, K_hyp=island.pool.K_hyp,
                          history_len_after=len(island.pool.ideas[pending.idea_id].hypotheses), **rep)
        rep = maintain_idea_cap(island.pool, lambda bind: self.llm.ask("idea_capping", bind, ctx), log, t, i,
                                render=lambda pool: self._repo(island, pool))
        if rep is not None:
            for key in ("pruned", "fallback"):
                for idea_id in rep[key]:
                    self.emit("idea_pruned", i, step=t, idea_id=idea_id, fallback=key == "fallback",
                              requested=rep["requested"], active_ideas=len(island.pool.active()))

        island.tracker, r_t = observe(island.tracker, score, self.spec)
        active = island.pool.active()
        self.emit("momentum_updated", i, step=t, R=r_t, m=island.tracker.momentum_m, s_best=island.tracker.s_best,
                  best_ever=island.best_ever_score, A=absolute_progress(island.tracker, self.spec),
                  active_ideas=len(active), max_history=max((len(x.hypotheses) for x in active), default=0))

        if t % self.cfg.metrics.snapshot_interval == 0:
            island.take_snapshot()
            self.emit("snapshot_taken", i, step=t, snapshots=len(island.snapshots))
        self._publish(island)
        self.maybe_intervene(island)

    # -- interventions ---------------------------------------------------------------

    def maybe_intervene(self, island: IslandState) -> InterventionAction | None:
        if self.cfg.variant == "none":
            return None
        if not should_trigger(island.tracker, self.policy) or island.step < island.freeze_until:
            return None
        i = island.island_id
        self.emit("trigger_fired", i, step=island.step, m=island.tracker.momentum_m)
        a_i = absolute_progress(island.tracker, self.spec)
        partners = {}
        if self.cfg.variant == "mbb_ce":
            partners = {j: e.A for j, e in sorted(self.board.others(i).items())}
        weights = compute_weights(a_i, partners)
        action = sample_action(weights, island.rng)
        self.emit("action_sampled", i, step=island.step, A_i=a_i, partners={str(k): v for k, v in partners.items()},
                  w_backtrack=weights.w_backtrack, w_crossover={str(k): v for k, v in weights.w_crossover.items()},
                  probabilities=weights.probabilities(), action=action.kind.value, partner=action.partner)
        if action.kind is ActionKind.CROSSOVER:
            entry = self.board.get(action.partner)
            if entry is not None and entry.best_payload:
                self.apply_crossover(island, action.partner, entry)
                return action
            self.emit("provider_error", i, step=island.step, stage="crossover",
                      error=f"partner {action.partner} has no payload; backtracking instead")
        return self.backtrack(island)

    def backtrack(self, island: IslandState) -> InterventionAction | None:
        eligible = [s.step for s in island.snapshots if s.step < island.step]
        try:
            target = sample_backtrack_target(eligible, self.cfg.metrics.alpha, island.rng)
        except NoSnapshotError as exc:
            self.emit("provider_error", island.island_id, step=island.step, stage="backtrack", error=str(exc))
            return None
        self.apply_backtrack(island, target)
        return InterventionAction(ActionKind.BACKTRACK, reverted_to_step=target)

    def apply_backtrack(self, island: IslandState, target_step: int) -> bool:
        snap = next((s for s in island.snapshots if s.step == target_step), None)
        if snap is None:
            self.emit("provider_error", island.island_id, step=island.step, stage="backtrack",
                      error=f"no snapshot at step {target_step}")
            return False
        step = island.step
        pool = IdeaPool.from_dict(snap.pool_state)
        pool.next_id = max(pool.next_id, island.pool.next_id)  # ids are never reused
        island.pool = pool
        restored = ProgressTracker.from_dict(snap.tracker_state)
        island.tracker = replace(restored, momentum_m=1.0, step=step)
        island.current_best_payload, island.current_best_score = snap.best_payload, snap.best_score
        island.shared_context = None
        island.rejected.clear()
        island.archive.extend(s for s in island.snapshots if s.step > target_step)
        island.snapshots = [s for s in island.snapshots if s.step <= target_step]
        island.freeze_until = step + self.cfg.freeze_after
        self._publish(island)
        self.emit("backtrack_applied", island.island_id, step=step, target=target_step,
                  restored_s_best=snap.best_score, freeze_until=island.freeze_until)
        return True

    def apply_crossover(self, island: IslandState, partner: int, entry: BoardEntry) -> None:
        step = island.step
        adopted = entry.s_best < island.tracker.s_best
        if adopted:
            island.tracker = replace(island.tracker, s_prev=entry.s_best, s_best=entry.s_best)
            island.current_best_payload, island.current_best_score = entry.best_payload, entry.s_best
            island.shared_context = None
            if entry.s_best < island.best_ever_score:
                island.best_ever_score, island.best_ever_payload = entry.s_best, entry.best_payload
        else:
            island.shared_context = entry.best_payload
        island.tracker = replace(island.tracker, momentum_m=1.0)
        island.freeze_until = step + self.cfg.freeze_after
        self._publish(island)
        self.emit("crossover_applied", island.island_id, step=step, partner=partner, partner_s_best=entry.s_best,
                  adopted=adopted, freeze_until=island.freeze_until)

    # -- main loop -----------------------------------------------------------------

    def global_best(self) -> tuple[float, str]:
        best = min(self.islands, key=lambda s: (s.best_ever_score, s.island_id))
        return best.best_ever_score, best.best_ever_payload

    def target_reached(self) -> bool:
        return self.global_best()[0] - self.spec.r <= self.spec.gap_epsilon

    def round(self) -> None:
        pendings = [self.propose(isl) for isl in self.islands]
        todo = [(k, p) for k, p in enumerate(pendings) if p is not None and not p.duplicate]
        results: list[EvalResult | None] = [None] * len(pendings)
        if self.cfg.parallelism > 1 and len(todo) > 1:
            with ThreadPoolExecutor(max_workers=self.cfg.parallelism) as pool:
                for (k, _), res in zip(todo, pool.map(lambda kp: self.evaluator.evaluate(kp[1].payload), todo)):
                    results[k] = res
        else:
            for k, p in todo:
                results[k] = self.evaluator.evaluate(p.payload)
        for isl, p, res in zip(self.islands, pendings, results):
            self.apply(isl, p, res)

    def run(self, stop_after: int | None = None) -> RunResult:
        """Run rounds until the budget, the target, or ``stop_after`` rounds
        in this call (the last simulates an interruption)."""
        done_here = 0
        while self.next_iteration < self.cfg.iterations:
            if self.cfg.stop_at_target and self.target_reached():
                break
            if stop_after is not None and done_here >= stop_after:
                self.events.close()
                return self.result()
            self.round()
            self.next_iteration += 1
            done_here += 1
            if self.next_iteration % self._ckpt_every == 0:
                self.checkpoint()
        if not self.finished:
            best, payload = self.global_best()
            self.emit("run_finished", None, iterations=self.next_iteration, global_best=best,
                      islands={str(s.island_id): {"best": s.best_ever_score,
                                                  "A": absolute_progress(s.tracker, self.spec)} for s in self.islands})
            self.finished = True
            self.checkpoint()
        self.events.close()
        write_report(self.run_dir)
        return self.result()

    def result(self) -> RunResult:
        best, payload = self.global_best()
        islands = {
            s.island_id: {"best": s.best_ever_score, "A": absolute_progress(s.tracker, self.spec),
                          "current_best": s.current_best_score, "payload": s.best_ever_payload}
            for s in self.islands
        }
        return RunResult(best, payload, islands, self.next_iteration,
                         extract_report(self.run_dir / "events.jsonl"), self.run_dir)


def start(cfg: RunConfig, evaluator: Evaluator | None = None, provider=None) -> Engine:
    """Create a fresh run: score start payloads, write config, emit run_started."""
    engine = Engine(cfg, evaluator, provider)
    engine.initialize()
    run_dir = Path(cfg.run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    if (run_dir / "events.jsonl").exists():
        (run_dir / "events.jsonl").unlink()
    (run_dir / "config.json").write_text(cfg.to_json() + "\n", encoding="utf-8")
    engine._open_events()
    engine.emit("run_started", None, config_hash=engine.hash, islands=cfg.islands, variant=cfg.variant,
                seed=cfg.seed, s0={str(s.island_id): s.tracker.s0 for s in engine.islands})
    engine.checkpoint()
    return engine


def run(cfg: RunConfig, evaluator: Evaluator | None = None, provider=None, stop_after: int | None = None) -> RunResult:
    return start(cfg, evaluator, provider).run(stop_after=stop_after)


def resume(run_dir: str | Path, checkpoint: str | Path | None = None, override: bool = False,
           cfg: RunConfig | None = None, evaluator: Evaluator | None = None, provider=None) -> RunResult:
    """Continue a run from its latest (or a given) checkpoint."""
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise ConfigError("run_dir", f"{run_dir} does not exist")
    if cfg is None:
        cfg = RunConfig.from_dict(json.loads((run_dir / "config.json").read_text(encoding="utf-8")))
    cfg.run_dir = str(run_dir)
    path = Path(checkpoint) if checkpoint else latest_checkpoint(run_dir)
    if path is None:
        raise ConfigError("run_dir", f"no checkpoint in {run_dir}")
    engine = Engine(cfg, evaluator, provider)
    state = restore_checkpoint(path, engine.hash, override=override)
    engine.load_state(state)
    engine.finished = state.get("finished", False) and engine.next_iteration >= cfg.iterations
    if engine.finished:
        return engine.result()
    truncate_events(run_dir / "events.jsonl", state["event_seq"])
    engine._open_events()
    logger.info("resuming %s from %s at iteration %d", run_dir, path.name, engine.next_iteration)
    return engine.run()
