import csv
import json

import pytest
from hypothesis import given, settings, strategies as st

from progevo.cli import main
from progevo.config import RunConfig
from progevo.errors import ConfigError


def write_cfg(tmp_path, **kw):
    d = {"task": {"landscape": "deceptive_two_basin", "initial_payload": "6.0"}, "islands": 1, "iterations": 25,
         "provider": {"kind": "scripted"}, "run_dir": str(tmp_path / "run")}
    d.update(kw)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(d))
    return path


def test_invalid_beta_names_field(tmp_path, capsys):
    path = write_cfg(tmp_path, metrics={"beta": 1.5})
    assert main(["run", str(path)]) == 2
    assert "metrics.beta" in capsys.readouterr().err


def test_unknown_field_is_config_error(tmp_path, capsys):
    path = write_cfg(tmp_path, memory={"K_ideas": 3})
    assert main(["run", str(path)]) == 2
    assert "memory.K_ideas" in capsys.readouterr().err


def test_dry_run_writes_nothing(tmp_path, capsys):
    path = write_cfg(tmp_path)
    assert main(["run", str(path), "--dry-run"]) == 0
    assert "config OK" in capsys.readouterr().out
    assert not (tmp_path / "run").exists()


def test_mock_run_exits_zero(tmp_path):
    script = tmp_path / "script.json"
    script.write_text(json.dumps([
        {"template": "idea_generation", "reply": "Idea 1\nIdea: A\nReasoning: r", "repeat": True},
        {"template": "idea_classification", "reply": "Idea Exists: False", "repeat": True},
        {"template": "idea_selection", "reply": "Idea ID: 0\nExperiment description: d\n```\n3.0\n```"},
        {"template": "idea_selection", "reply": "Idea ID: 0\nExperiment description: e\n```\n-3.0\n```"},
    ]))
    path = write_cfg(tmp_path, iterations=2, provider={"kind": "mock", "script": "script.json"})
    assert main(["run", str(path)]) == 0
    assert (tmp_path / "run" / "events.jsonl").exists()
    assert (tmp_path / "run" / "report.csv").exists()


def test_flags_override_file(tmp_path):
    path = write_cfg(tmp_path)
    assert main(["--seed", "5", "run", str(path), "--run-dir", str(tmp_path / "other")]) == 0
    cfg = json.loads((tmp_path / "other" / "config.json").read_text())
    assert cfg["seed"] == 5 and not (tmp_path / "run").exists()


def test_resume_missing_dir(tmp_path, capsys):
    assert main(["resume", str(tmp_path / "missing")]) == 2
    assert "does not exist" in capsys.readouterr().err


def test_resume_finished_is_noop(tmp_path):
    path = write_cfg(tmp_path)
    assert main(["run", str(path)]) == 0
    events = (tmp_path / "run" / "events.jsonl").read_bytes()
    assert main(["resume", str(tmp_path / "run")]) == 0
    assert (tmp_path / "run" / "events.jsonl").read_bytes() == events


def test_resume_refuses_changed_config(tmp_path, capsys):
    path = write_cfg(tmp_path, iterations=40)
    assert main(["run", str(path)]) == 0
    cfg_file = tmp_path / "run" / "config.json"
    cfg = json.loads(cfg_file.read_text())
    cfg["metrics"]["beta"] = 0.5
    cfg_file.write_text(json.dumps(cfg))
    (tmp_path / "run" / "checkpoints" / "ckpt-000040.json").unlink()
    assert main(["resume", str(tmp_path / "run")]) == 1
    assert "config" in capsys.readouterr().err
    assert main(["resume", str(tmp_path / "run"), "--force"]) == 0


def test_simulate_writes_one_row_per_variant_seed(tmp_path, capsys):
    sim = {
        "base": {"task": {"landscape": "deceptive_two_basin", "initial_payload": "6.0"}, "islands": 1,
                 "iterations": 15, "provider": {"kind": "scripted"}, "run_dir": str(tmp_path / "sim")},
        "variants": ["none", "mbb", "mbb_ce"],
        "seeds": 10,
        "output": str(tmp_path / "sim.csv"),
    }
    path = tmp_path / "sim.json"
    path.write_text(json.dumps(sim))
    assert main(["simulate", str(path)]) == 0
    rows = list(csv.DictReader(open(tmp_path / "sim.csv")))
    assert len(rows) == 30
    assert {(r["variant"], r["seed"]) for r in rows} == {(v, str(s)) for v in sim["variants"] for s in range(10)}


def test_simulate_rejects_unknown_variant(tmp_path):
    path = tmp_path / "sim.json"
    path.write_text(json.dumps({"base": {"task": {"landscape": "sphere", "initial_payload": "1"},
                                         "provider": {"kind": "scripted"}}, "variants": ["bogus"]}))
    assert main(["simulate", str(path)]) == 2


def test_report_command(tmp_path):
    path = write_cfg(tmp_path)
    main(["run", str(path)])
    (tmp_path / "run" / "report.csv").unlink()
    assert main(["report", str(tmp_path / "run")]) == 0
    lines = (tmp_path / "run" / "report.csv").read_text().splitlines()
    assert lines[0] == "iteration,island,s_best,working_best,m_t,A_t,markers" and len(lines) == 26


def test_report_missing_log(tmp_path):
    assert main(["report", str(tmp_path)]) == 2


configs = st.fixed_dictionaries({
    "islands": st.integers(1, 4),
    "iterations": st.integers(0, 5000),
    "seed": st.integers(0, 2**31),
    "variant": st.sampled_from(["none", "mbb", "mbb_ce"]),
    "metrics": st.fixed_dictionaries({"beta": st.floats(0, 0.99), "epsilon_rel": st.floats(0.001, 0.999),
                                      "freeze_steps": st.integers(1, 50), "alpha": st.floats(0.1, 5)}),
    "memory": st.fixed_dictionaries({"K_idea": st.integers(1, 50), "K_hyp": st.integers(1, 20)}),
    "task": st.fixed_dictionaries({"landscape": st.sampled_from(["sphere", "staircase"]), "initial_payload": st.just("1")}),
    "provider": st.just({"kind": "scripted"}),
})


@settings(max_examples=50)
@given(configs)
def test_config_round_trip(d):
    cfg = RunConfig.from_dict(d)
    again = RunConfig.from_dict(json.loads(cfg.to_json()))
    assert again == cfg


@pytest.mark.parametrize("patch,field", [
    ({"islands": 0}, "islands"),
    ({"islands": 2, "metrics": {"freeze_steps": 0}}, "metrics.freeze_steps"),
    ({"metrics": {"epsilon_rel": 1.0}}, "metrics.epsilon_rel"),
    ({"memory": {"K_hyp": 0}}, "memory.K_hyp"),
    ({"variant": "x"}, "variant"),
    ({"provider": {"kind": "http"}}, "provider.endpoint"),
    ({"provider": {"kind": "mock"}}, "provider.script"),
    ({"task": {"initial_payload": "1"}}, "task.workspace_template"),
])
def test_config_validation(patch, field):
    d = {"task": {"landscape": "sphere", "initial_payload": "1"}, "provider": {"kind": "scripted"}}
    d.update(patch)
    with pytest.raises(ConfigError) as exc:
        RunConfig.from_dict(d)
    assert exc.value.field == field
