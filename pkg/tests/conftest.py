import pytest

from progevo.config import RunConfig


def landscape_config(tmp_path, **overrides) -> RunConfig:
    base = {
        "task": {"landscape": "deceptive_two_basin", "initial_payload": "6.0"},
        "islands": 1,
        "iterations": 50,
        "provider": {"kind": "scripted"},
        "variant": "mbb",
        "seed": 0,
        "run_dir": str(tmp_path / "run"),
    }
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            base[key] = {**base[key], **value}
        else:
            base[key] = value
    return RunConfig.from_dict(base)


@pytest.fixture
def make_config(tmp_path):
    return lambda **kw: landscape_config(tmp_path, **kw)
