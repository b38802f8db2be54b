from io import StringIO

import numpy as np
import pytest
import yaml
from django.core.management import call_command
from django.core.management.base import CommandError

from .conftest import SCENARIO_DIR, shipped_document


def write_scenario(tmp_path, name="custom", **changes):
    data = shipped_document("hinf_unicycle_4", **changes)
    data["name"] = name
    path = tmp_path / f"{name}.scn"
    path.write_text(yaml.safe_dump(data, sort_keys=False), encoding="utf-8")
    return path


def run(*args):
    out = StringIO()
    call_command("sim", *args, stdout=out)
    return out.getvalue()


def test_check_prints_report():
    output = run("check", str(SCENARIO_DIR / "hinf_unicycle_4.scn"))
    assert "d = 0.35" in output
    assert "condition_14_ok = true" in output


def test_run_writes_outputs(tmp_path):
    path = write_scenario(tmp_path, integration={"horizon": 0.05})
    output = run("run", str(path), "--out", str(tmp_path / "out"))
    assert "trajectory:" in output
    assert (tmp_path / "out" / "trajectory.csv").exists()
    assert (tmp_path / "out" / "summary.json").exists()


def test_run_defaults_to_configured_out_dir(tmp_path, settings):
    path = write_scenario(tmp_path, name="defaulted", integration={"horizon": 0.0})
    run("run", str(path))
    assert (settings.SIM_OUT_DIR / "defaulted" / "trajectory.csv").exists()


def test_invalid_scenario_exits_with_2(tmp_path):
    path = tmp_path / "bad.scn"
    path.write_text("name: bad\ntopology: [unclosed\n", encoding="utf-8")
    with pytest.raises(CommandError) as excinfo:
        run("check", str(path))
    assert excinfo.value.returncode == 2


def test_missing_file_exits_with_2(tmp_path):
    with pytest.raises(CommandError) as excinfo:
        run("check", str(tmp_path / "absent.scn"))
    assert excinfo.value.returncode == 2


def test_strict_infeasible_exits_with_3(tmp_path):
    path = write_scenario(tmp_path, synthesis={"when": "never"}, gains={"K1": [[0.0, 0.0], [0.0, 0.0]]})
    with pytest.raises(CommandError) as excinfo:
        run("run", str(path), "--strict")
    assert excinfo.value.returncode == 3


def test_infeasible_synthesis_exits_with_3(tmp_path):
    path = write_scenario(tmp_path, synthesis={"when": "always", "k1_scales": [0.0]})
    with pytest.raises(CommandError) as excinfo:
        run("check", str(path))
    assert excinfo.value.returncode == 3


def test_numerical_failure_exits_with_4(tmp_path):
    path = write_scenario(tmp_path, model={
        "label": "custom-affine", "drift": [[0.0, 0.0], [0.0, 0.0]], "input": [[1.0, 2.0], [2.0, 4.0]],
    }, disturbance={"gain": "none"}, integration={"horizon": 0.01})
    with pytest.raises(CommandError) as excinfo:
        run("run", str(path), "--out", str(tmp_path / "out"))
    assert excinfo.value.returncode == 4


def test_sweep_without_simulation(tmp_path):
    output = run("sweep", str(SCENARIO_DIR / "hinf_unicycle_4.scn"), "--param", "b", "--grid", "0.05:0.2:3",
                 "--no-sim", "--out", str(tmp_path))
    assert output.startswith("parameter = b")
    assert (tmp_path / "sweep_b.csv").exists()


def test_monte_carlo_command(tmp_path):
    path = tmp_path / "mc.scn"
    data = shipped_document("stochastic_unicycle_4", integration={"horizon": 0.01, "output_interval": 0.001})
    path.write_text(yaml.safe_dump(data, sort_keys=False), encoding="utf-8")
    output = run("mc", str(path), "--runs", "2", "--seed", "3", "--out", str(tmp_path / "mc"))
    assert "curves:" in output
    assert (tmp_path / "mc" / "mc_curves.csv").exists()


def test_sweep_continues_past_gamma_at_one(tmp_path):
    output = run("sweep", str(SCENARIO_DIR / "hinf_unicycle_4.scn"), "--param", "gamma", "--grid", "1.0:1.5:3",
                 "--no-sim", "--out", str(tmp_path))
    lines = output.splitlines()
    assert "1  infeasible:" in lines[1]
    assert "gamma" in lines[1]
    assert lines[2].startswith("1.25  q=")
    assert (tmp_path / "sweep_gamma.csv").exists()


@pytest.mark.parametrize("error", [np.linalg.LinAlgError("Singular matrix"), FloatingPointError("overflow")])
def test_raw_numerical_error_exits_with_4(monkeypatch, error):
    def failing_check(*args, **kwargs):
        raise error

    monkeypatch.setattr("consensus.management.commands.sim.cmd_check", failing_check)
    with pytest.raises(CommandError) as excinfo:
        run("check", str(SCENARIO_DIR / "hinf_unicycle_4.scn"))
    assert excinfo.value.returncode == 4
    assert "numerical failure" in str(excinfo.value)
