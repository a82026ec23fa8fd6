import json

import numpy as np
import pytest

from progevo.config import RunConfig
from progevo.errors import ConfigError, ScriptExhausted
from progevo.llm.providers import MockProvider
from progevo.orchestrator import BoardEntry, IslandState, resume, run, start
from progevo.persistence import read_events
from progevo.policy import ActionKind, compute_weights, should_trigger


def sphere_cfg(tmp_path, **kw):
    d = {
        "task": {"landscape": "sphere", "initial_payload": "1,1"},
        "islands": 1, "iterations": 20, "variant": "mbb", "seed": 0,
        "provider": {"kind": "mock", "script": "unused.json"},
        "run_dir": str(tmp_path / "run"),
    }
    d.update(kw)
    return RunConfig.from_dict(d)


def standing_mock(payload, description="go"):
    return MockProvider([
        {"template": "idea_generation", "reply": "Idea 1\nIdea: A\nReasoning: r", "repeat": True},
        {"template": "idea_classification", "reply": "Idea Exists: False", "repeat": True},
        {"template": "idea_selection", "reply": f"Idea ID: 0\nExperiment description: {description}\n```\n{payload}\n```",
         "repeat": True},
        {"template": "history_summarization", "reply": "- Results: ok", "repeat": True},
        {"template": "idea_capping", "reply": "Dropping Ideas: []", "repeat": True},
    ])


def kinds(run_dir):
    return [e.kind for e in read_events(run_dir / "events.jsonl")]


def test_zero_budget(tmp_path):
    res = run(sphere_cfg(tmp_path, iterations=0), provider=standing_mock("0,0"))
    assert res.iterations_done == 0 and res.global_best == 2.0
    assert kinds(res.run_dir) == ["run_started", "run_finished"]
    assert res.report.rows == []


def test_reaching_target_stops_early(tmp_path):
    res = run(sphere_cfg(tmp_path, iterations=50), provider=standing_mock("0,0"))
    assert res.iterations_done == 1 and res.global_best == 0.0
    assert res.islands[0]["A"] == 1.0
    assert (res.run_dir / "report.csv").exists()


def test_duplicate_is_skipped_and_counts_as_barren(tmp_path):
    res = run(sphere_cfg(tmp_path, iterations=3), provider=standing_mock("0.5,0.5", "same thing"))
    events = read_events(res.run_dir / "events.jsonl")
    assert [e.kind for e in events].count("evaluated") == 1
    assert [e.kind for e in events].count("duplicate_skipped") == 2
    m = [e.payload for e in events if e.kind == "momentum_updated"]
    assert [p["R"] for p in m] == [0.75, 0.0, 0.0]


def test_fatal_provider_error_aborts(tmp_path):
    mock = MockProvider([{"template": "idea_generation", "reply": "Idea 1\nIdea: A\nReasoning: r"}])
    with pytest.raises(ScriptExhausted):
        run(sphere_cfg(tmp_path), provider=mock)


def test_unparseable_generation_is_skipped(tmp_path):
    mock = MockProvider([{"template": "idea_generation", "reply": "garbage", "repeat": True}])
    res = run(sphere_cfg(tmp_path, iterations=4), provider=mock)
    assert res.iterations_done == 4 and res.global_best == 2.0


def test_bad_start_payload_aborts_before_side_effects(tmp_path):
    cfg = sphere_cfg(tmp_path, task={"landscape": "sphere", "initial_payload": "not a vector"})
    with pytest.raises(ConfigError):
        run(cfg, provider=standing_mock("0"))
    assert not (tmp_path / "run").exists()


def test_lagging_island_first_intervention_weights(make_config):
    cfg = make_config(islands=2, variant="mbb_ce", iterations=10)
    eng = start(cfg)
    spec = eng.spec
    s0 = eng.islands[0].tracker.s0
    lag, lead = eng.islands
    # A_0 = 0.1, A_1 = 0.9
    lag.tracker = lag.tracker.__class__(s0, 0.9 * s0, 0.9 * s0, 0.01, 0.9, 20)
    lead.tracker = lead.tracker.__class__(s0, 0.1 * s0, 0.1 * s0, 0.5, 0.9, 20)
    lead.current_best_payload = "-3"
    for isl in eng.islands:
        eng._publish(isl)
    assert should_trigger(lag.tracker, eng.policy)
    action = eng.maybe_intervene(lag)
    sampled = [e for e in read_events(cfg.run_dir + "/events.jsonl") if e.kind == "action_sampled"][-1]
    assert sampled.payload["probabilities"]["crossover:1"] == pytest.approx(0.818 / 0.836, abs=1e-9)
    assert sampled.payload["A_i"] == pytest.approx(0.1)
    expected = compute_weights(0.1, {1: 0.9})
    assert sampled.payload["w_backtrack"] == pytest.approx(expected.w_backtrack, abs=1e-12)
    assert action.kind in (ActionKind.CROSSOVER, ActionKind.BACKTRACK)
    eng.events.close()


def test_apply_backtrack_to_step_zero_restores_initial_pool(make_config):
    eng = start(make_config(iterations=10, variant="none"))
    isl = eng.islands[0]
    initial = json.dumps(isl.snapshots[0].pool_state, sort_keys=True)
    for _ in range(12):
        eng.round()
        eng.next_iteration += 1
    best_before = isl.best_ever_score
    assert isl.pool.ideas
    assert eng.apply_backtrack(isl, 0)
    restored = isl.pool.to_dict()
    next_id = restored.pop("next_id")
    expected = json.loads(initial)
    expected.pop("next_id")
    assert restored == expected and next_id >= 1
    assert isl.tracker.momentum_m == 1.0 and isl.tracker.step == 12
    assert isl.best_ever_score == best_before
    assert [s.step for s in isl.snapshots] == [0] and [s.step for s in isl.archive] == [10]
    # frozen for the post-intervention window even with momentum forced low
    isl.tracker = isl.tracker.__class__(**{**isl.tracker.to_dict(), "momentum_m": 0.0})
    assert eng.maybe_intervene(isl) is None
    eng.events.close()


def test_apply_backtrack_missing_snapshot_is_noop(make_config):
    eng = start(make_config())
    isl = eng.islands[0]
    before = isl.to_dict()
    assert eng.apply_backtrack(isl, 7) is False
    assert isl.to_dict() == before
    assert kinds(eng.run_dir)[-1] == "provider_error"
    eng.events.close()


def test_apply_crossover_better_partner_reanchors(make_config):
    eng = start(make_config(islands=2, variant="mbb_ce"))
    isl = eng.islands[0]
    eng.apply_crossover(isl, 1, BoardEntry(A=0.9, s_best=0.2, best_payload="-3.2", updated_step=5))
    assert isl.tracker.s_prev == isl.tracker.s_best == 0.2
    assert isl.current_best_payload == "-3.2" and isl.best_ever_score == 0.2
    assert isl.tracker.momentum_m == 1.0
    # next R_t is measured against the imported score
    from progevo.progress import observe
    _, r = observe(isl.tracker, 0.1, eng.spec)
    assert r == pytest.approx(0.5)
    eng.events.close()


def test_apply_crossover_worse_partner_shares_context_only(make_config):
    eng = start(make_config(islands=2, variant="mbb_ce"))
    isl = eng.islands[0]
    tracker = isl.tracker
    eng.apply_crossover(isl, 1, BoardEntry(A=0.0, s_best=5.0, best_payload="9", updated_step=5))
    assert (isl.tracker.s_prev, isl.tracker.s_best) == (tracker.s_prev, tracker.s_best)
    assert isl.current_best_payload == "6.0" and isl.shared_context == "9"
    assert "A solution shared by another island" in eng._sota(isl)
    eng.events.close()


def test_island_state_round_trip(make_config):
    eng = start(make_config(iterations=30))
    for _ in range(25):
        eng.round()
    eng.events.close()
    for isl in eng.islands:
        d = isl.to_dict()
        again = IslandState.from_dict(json.loads(json.dumps(d))).to_dict()
        assert again == d


def test_single_island_never_crosses_over(make_config):
    res = run(make_config(iterations=120, variant="mbb_ce"))
    events = read_events(res.run_dir / "events.jsonl")
    assert not [e for e in events if e.kind == "crossover_applied"]
    assert [e for e in events if e.kind == "backtrack_applied"]


def test_event_log_invariants(make_config):
    cfg = make_config(islands=2, iterations=150, variant="mbb_ce")
    res = run(cfg)
    events = read_events(res.run_dir / "events.jsonl")
    assert [e.seq for e in events] == list(range(1, len(events) + 1))
    momentum = {}
    for e in events:
        if e.kind == "momentum_updated":
            momentum[e.island_id] = (e.payload["m"], e.payload["step"])
        if e.kind == "trigger_fired":
            m, step = momentum[e.island_id]
            assert m < cfg.metrics.epsilon_rel and step >= cfg.metrics.freeze_steps
    bests = [e.payload["best_ever"] for e in events if e.kind == "momentum_updated"]
    running = np.minimum.accumulate(bests)
    assert res.global_best == running[-1]


def test_global_best_monotone(make_config):
    res = run(make_config(islands=2, iterations=150, variant="mbb_ce"))
    per_island = {}
    for e in read_events(res.run_dir / "events.jsonl"):
        if e.kind == "momentum_updated":
            per_island.setdefault(e.island_id, []).append(e.payload["best_ever"])
    for series in per_island.values():
        assert all(b <= a for a, b in zip(series, series[1:]))


def test_parallel_evaluation_matches_sequential(make_config, tmp_path):
    a = run(make_config(islands=3, iterations=60, run_dir=str(tmp_path / "a")))
    b = run(make_config(islands=3, iterations=60, parallelism=3, run_dir=str(tmp_path / "b")))
    assert (a.run_dir / "events.jsonl").read_bytes() == (b.run_dir / "events.jsonl").read_bytes()


def test_resume_finished_run_is_noop(make_config):
    res = run(make_config(iterations=30))
    before = (res.run_dir / "events.jsonl").read_bytes()
    again = resume(res.run_dir)
    assert (res.run_dir / "events.jsonl").read_bytes() == before
    assert again.global_best == res.global_best


def test_resume_missing_dir(tmp_path):
    with pytest.raises(ConfigError):
        resume(tmp_path / "nope")


def test_resume_after_interruption_matches_uninterrupted(make_config, tmp_path):
    full = run(make_config(iterations=80, run_dir=str(tmp_path / "full")))
    part = run(make_config(iterations=80, run_dir=str(tmp_path / "part")), stop_after=37)
    assert part.iterations_done == 37
    resume(part.run_dir)
    assert (full.run_dir / "events.jsonl").read_bytes() == (part.run_dir / "events.jsonl").read_bytes()
