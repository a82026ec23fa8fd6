"""Run configuration: a single JSON document parsed into nested dataclasses."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from progevo.errors import ConfigError

VARIANTS = ("none", "mbb", "mbb_ce")
PROVIDER_KINDS = ("mock", "http", "scripted")


@dataclass
class TaskConfig:
    name: str = "task"
    landscape: str | None = None
    landscape_params: dict = field(default_factory=dict)
    workspace_template: str | None = None
    candidate_filename: str = "candidate.txt"
    eval_command: list[str] = field(default_factory=list)
    score_pattern: str | None = None
    direction: str = "minimize"
    lower_bound: float = 0.0
    timeout: float = 60.0
    max_output_bytes: int = 1 << 20
    env_allowlist: list[str] = field(default_factory=lambda: ["PATH", "HOME", "LANG", "LC_ALL", "TMPDIR"])
    initial_payload: str = ""
    initial_payloads: list[str] | None = None
    background: str = ""
    coding_instructions: str = "Return the complete candidate solution in a single fenced code block."
    attempt_budget: int | None = None


@dataclass
class ProviderSection:
    kind: str = "mock"
    script: str | None = None
    endpoint: str | None = None
    model_name: str | None = None
    secondary_model_name: str | None = None
    api_key_env: str | None = None
    timeout: float = 120.0
    max_retries: int = 3
    temperature: float = 0.7
    rate_limit_per_s: float | None = None
    profiles: dict = field(default_factory=dict)
    default_profile: dict = field(default_factory=dict)


@dataclass
class MetricsConfig:
    beta: float = 0.9
    epsilon_rel: float = 0.05
    freeze_steps: int = 10
    freeze_after_intervention: int | None = None
    alpha: float = 1.5
    snapshot_interval: int = 10
    gap_epsilon: float = 1e-12


@dataclass
class MemoryConfig:
    K_idea: int = 10
    K_hyp: int = 5
    context_budget: int | None = 4000
    shared_failure_log: bool = True


@dataclass
class RunConfig:
    task: TaskConfig = field(default_factory=TaskConfig)
    islands: int = 2
    iterations: int = 1000
    provider: ProviderSection = field(default_factory=ProviderSection)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    memory: MemoryConfig = field(default_factory=MemoryConfig)
    variant: str = "mbb_ce"
    seed: int = 0
    run_dir: str = "runs/default"
    keep_artifacts: bool = False
    parallelism: int = 1
    clock: str = "auto"
    checkpoint_interval: int | None = None
    stop_at_target: bool = True

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        cfg = _build(cls, d, "")
        validate(cfg)
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"invalid JSON: {exc}") from exc
        return resolve_paths(cls.from_dict(d), Path(path).resolve().parent)

    def hash_view(self) -> dict:
        """Fields that must match for a checkpoint to be resumable."""
        d = self.to_dict()
        for key in ("run_dir", "iterations", "keep_artifacts", "parallelism"):
            d.pop(key)
        return d

    @property
    def freeze_after(self) -> int:
        m = self.metrics
        return m.freeze_steps if m.freeze_after_intervention is None else m.freeze_after_intervention


def resolve_paths(cfg: RunConfig, base: Path) -> RunConfig:
    """Make the script and workspace paths relative to the config file."""
    if cfg.provider.script and not Path(cfg.provider.script).is_absolute():
        cfg.provider.script = str(base / cfg.provider.script)
    if cfg.task.workspace_template and not Path(cfg.task.workspace_template).is_absolute():
        cfg.task.workspace_template = str(base / cfg.task.workspace_template)
    return cfg


_NESTED = {"task": TaskConfig, "provider": ProviderSection, "metrics": MetricsConfig, "memory": MemoryConfig}


def _build(klass, d: Any, prefix: str):
    if not isinstance(d, dict):
        raise ConfigError(prefix.rstrip(".") or "<root>", "expected an object")
    known = {f.name for f in fields(klass)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(prefix + sorted(unknown)[0], "unknown field")
    kwargs = {}
    for key, value in d.items():
        if klass is RunConfig and key in _NESTED:
            value = _build(_NESTED[key], value, f"{key}.")
        kwargs[key] = value
    return klass(**kwargs)


def _require(cond: bool, name: str, msg: str):
    if not cond:
        raise ConfigError(name, msg)


def _num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def validate(cfg: RunConfig) -> None:
    m, mem, t, p = cfg.metrics, cfg.memory, cfg.task, cfg.provider
    _require(_num(m.beta) and 0 <= m.beta < 1, "metrics.beta", f"must be in [0, 1), got {m.beta}")
    _require(_num(m.epsilon_rel) and 0 < m.epsilon_rel < 1, "metrics.epsilon_rel", f"must be in (0, 1), got {m.epsilon_rel}")
    _require(isinstance(m.freeze_steps, int) and m.freeze_steps >= 0, "metrics.freeze_steps", "must be an integer >= 0")
    _require(cfg.islands == 1 or m.freeze_steps >= 1, "metrics.freeze_steps", "must be >= 1 with multiple islands")
    _require(m.freeze_after_intervention is None or (isinstance(m.freeze_after_intervention, int) and m.freeze_after_intervention >= 0),
             "metrics.freeze_after_intervention", "must be an integer >= 0")
    _require(_num(m.alpha) and m.alpha > 0, "metrics.alpha", "must be > 0")
    _require(isinstance(m.snapshot_interval, int) and m.snapshot_interval >= 1, "metrics.snapshot_interval", "must be an integer >= 1")
    _require(_num(m.gap_epsilon) and m.gap_epsilon > 0, "metrics.gap_epsilon", "must be > 0")
    _require(isinstance(mem.K_idea, int) and mem.K_idea >= 1, "memory.K_idea", "must be an integer >= 1")
    _require(isinstance(mem.K_hyp, int) and mem.K_hyp >= 1, "memory.K_hyp", "must be an integer >= 1")
    _require(mem.context_budget is None or (isinstance(mem.context_budget, int) and mem.context_budget > 0),
             "memory.context_budget", "must be a positive integer or null")
    _require(isinstance(cfg.islands, int) and cfg.islands >= 1, "islands", "must be an integer >= 1")
    _require(isinstance(cfg.iterations, int) and cfg.iterations >= 0, "iterations", "must be an integer >= 0")
    _require(cfg.variant in VARIANTS, "variant", f"must be one of {VARIANTS}")
    _require(isinstance(cfg.seed, int), "seed", "must be an integer")
    _require(isinstance(cfg.parallelism, int) and cfg.parallelism >= 1, "parallelism", "must be an integer >= 1")
    _require(cfg.clock in ("auto", "wall", "logical"), "clock", "must be auto, wall or logical")
    _require(cfg.checkpoint_interval is None or (isinstance(cfg.checkpoint_interval, int) and cfg.checkpoint_interval >= 1),
             "checkpoint_interval", "must be an integer >= 1")

    _require(t.direction in ("minimize", "maximize"), "task.direction", "must be minimize or maximize")
    if t.landscape is None:
        _require(bool(t.workspace_template), "task.workspace_template", "required unless task.landscape is set")
        _require(bool(t.eval_command), "task.eval_command", "must be a non-empty argv list")
        _require(bool(t.score_pattern), "task.score_pattern", "required unless task.landscape is set")
    else:
        from progevo.evaluation import LANDSCAPES
        _require(t.landscape in LANDSCAPES, "task.landscape", f"must be one of {sorted(LANDSCAPES)}")
    _require(_num(t.timeout) and t.timeout > 0, "task.timeout", "must be > 0")
    if t.initial_payloads is not None:
        _require(len(t.initial_payloads) == cfg.islands, "task.initial_payloads", "needs one entry per island")

    _require(p.kind in PROVIDER_KINDS, "provider.kind", f"must be one of {PROVIDER_KINDS}")
    if p.kind == "mock":
        _require(bool(p.script), "provider.script", "mock provider needs a script path")
    elif p.kind == "http":
        _require(bool(p.endpoint), "provider.endpoint", "required for http provider")
        _require(bool(p.model_name), "provider.model_name", "required for http provider")
        _require(_num(p.timeout) and p.timeout > 0, "provider.timeout", "must be > 0")
        _require(isinstance(p.max_retries, int) and p.max_retries >= 0, "provider.max_retries", "must be >= 0")
    else:
        _require(t.landscape is not None, "provider.kind", "scripted agent only works on builtin landscapes")
