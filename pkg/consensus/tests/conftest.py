from pathlib import Path

import pytest

from consensus.scenarios import build_scenario, load_document, validate_document

SCENARIO_DIR = Path(__file__).resolve().parents[2] / "scenarios"

RING = [
    [0, 0, 0, 1],
    [1, 0, 0, 0],
    [0, 1, 0, 0],
    [0, 0, 1, 0],
]


def _merge(base: dict, overrides: dict) -> dict:
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _merge(base[key], value)
        else:
            base[key] = value
    return base


def shipped_document(name: str, **overrides) -> dict:
    """A shipped scenario as plain data, with nested section overrides applied."""
    text = (SCENARIO_DIR / f"{name}.scn").read_text(encoding="utf-8")
    data = load_document(text).model_dump(mode="json")
    return _merge(data, overrides)


def shipped_scenario(name: str, **overrides):
    return build_scenario(validate_document(shipped_document(name, **overrides)))


@pytest.fixture
def scenario_dir():
    return SCENARIO_DIR


@pytest.fixture(autouse=True)
def sim_dirs(settings, tmp_path):
    settings.SIM_OUT_DIR = tmp_path / "runs"
    settings.SIM_SCENARIO_DIR = SCENARIO_DIR
    settings.SIM_SEARCH_JOBS = 1
    return settings
