import json

import numpy as np
import pytest

from consensus.criteria import CriteriaKind
from consensus.exceptions import (
    DimensionMismatch,
    Infeasible,
    ParseError,
    ScenarioValidationError,
)
from consensus.scenarios import (
    cmd_check,
    cmd_montecarlo,
    cmd_run,
    cmd_sweep,
    echo_scenario,
    load_document,
    parse_grid,
    parse_scenario,
    parse_text,
    sweep_document,
    validate_document,
)

from .conftest import SCENARIO_DIR, shipped_document, shipped_scenario

SHIPPED = sorted(path.stem for path in SCENARIO_DIR.glob("*.scn"))


def test_benchmark_scenario_matches_published_setup():
    scenario = parse_scenario(SCENARIO_DIR / "hinf_unicycle_4.scn")
    model = scenario.document.model
    assert (model.m, model.R, model.r, model.p) == (10.0, 0.5, 0.05, 0.04)
    assert np.allclose(scenario.initial_states.reshape(4, 2), [[0.5, 0.5], [0.3, 0.2], [0.8, 0.1], [0.1, 0.7]])
    assert scenario.delays.default(0.0) == pytest.approx(0.35)
    assert scenario.delays.default(1.0) == pytest.approx(0.1 + 0.25 * np.exp(-1.0))
    gains = scenario.gains
    assert (gains.alpha, gains.a, gains.b, gains.gamma, gains.d) == (1.2, 10.0, 0.1, 1.5, 0.35)
    assert np.allclose(scenario.projection.P, 4.0 * np.eye(6))
    assert np.allclose(scenario.disturbance.w(3.0), 1.0)
    assert scenario.source.name == "hinf_unicycle_4.scn"


@pytest.mark.parametrize("name", SHIPPED)
def test_shipped_scenarios_parse(name):
    scenario = parse_scenario(SCENARIO_DIR / f"{name}.scn")
    assert scenario.name == name


@pytest.mark.parametrize("name", SHIPPED)
def test_echo_round_trip(name):
    first = parse_scenario(SCENARIO_DIR / f"{name}.scn")
    second = parse_text(echo_scenario(first))
    assert second.document == first.document
    assert echo_scenario(second) == echo_scenario(first)


def test_leader_references():
    scenario = shipped_scenario("leader_unicycle_4")
    t = 0.8
    assert scenario.reference.value(t) == pytest.approx(
        [0.7 * np.cos(2 * t - np.pi / 8), 0.4 * np.sin(2 * t + np.pi / 12)])
    assert scenario.reference.rate(t) == pytest.approx(
        [-1.4 * np.sin(2 * t - np.pi / 8), 0.8 * np.cos(2 * t + np.pi / 12)])
    assert shipped_scenario("stochastic_leader_unicycle_4").reference.value(0.0) == pytest.approx([0.5, 0.5])


def test_yaml_error_reports_line():
    with pytest.raises(ParseError) as excinfo:
        load_document("name: broken\ntopology:\n  adjacency: [[0, 1]\n")
    assert excinfo.value.line is not None
    assert excinfo.value.exit_code == 2


def test_document_must_be_mapping():
    with pytest.raises(ParseError):
        load_document("- just\n- a list\n")


@pytest.mark.parametrize("changes, message", [
    ({"gains": {"gamma": None}}, "gamma required"),
    ({"delay": {"bound": 0.3}}, "delay exceeds bound d"),
    ({"gains": {"alpha": 1.0}}, "alpha must exceed 1"),
    ({"integration": {"step": 0.5}}, "integration step must not exceed the delay bound d"),
    ({"control": {"mode": "stochastic"}}, "stochastic mode requires a noise gain"),
    ({"control": {"mode": "partial_access"}}, "partial access requires C and K3"),
])
def test_validation_errors(changes, message):
    with pytest.raises(ScenarioValidationError) as excinfo:
        validate_document(shipped_document("hinf_unicycle_4", **changes))
    assert message in str(excinfo.value)


def test_per_link_delay_must_be_an_edge():
    data = shipped_document("perlink_unicycle_4")
    data["delay"]["links"] = [{"receiver": 1, "sender": 2, "c0": 0.1}]
    with pytest.raises(ScenarioValidationError):
        shipped_scenario("perlink_unicycle_4", delay=data["delay"])


def test_initial_state_dimensions():
    with pytest.raises(DimensionMismatch):
        shipped_scenario("hinf_unicycle_4", initial={"states": [[0.0, 0.0]] * 3})


def test_check_reports_delay_bound_and_bound(tmp_path):
    summary = cmd_check(shipped_scenario("hinf_unicycle_4"), tmp_path)
    assert summary.delay_bound == pytest.approx(0.35)
    assert summary.feasible
    assert summary.settling_bound is not None
    report = (tmp_path / "report.txt").read_text()
    assert "d = 0.35" in report
    data = json.loads((tmp_path / "summary.json").read_text())
    assert data["criteria"]["condition_14_ok"] is True
    assert data["gain_source"] in ("given", "synthesized")


def test_check_zero_gains():
    summary = cmd_check(shipped_scenario("hinf_unicycle_4", synthesis={"when": "never"},
                                         gains={"K1": [[0.0, 0.0], [0.0, 0.0]], "K2": [[0.0, 0.0], [0.0, 0.0]]}))
    assert summary.report.q > 0.0
    assert summary.settling_bound is None
    assert summary.extra["critical_gamma"] is None


def test_check_stochastic_reports_stochastic_criteria():
    summary = cmd_check(shipped_scenario("stochastic_unicycle_4"))
    assert summary.report.kind is CriteriaKind.STOCHASTIC
    assert "condition_37_ok" in summary.as_dict()["criteria"]


def test_check_partial_and_stochastic_leader():
    assert cmd_check(shipped_scenario("partial_unicycle_4")).report.kind is CriteriaKind.PARTIAL
    kind = cmd_check(shipped_scenario("stochastic_leader_unicycle_4")).report.kind
    assert kind is CriteriaKind.STOCHASTIC_LEADER_FOLLOWER


def test_zero_horizon_run_writes_one_row(tmp_path):
    summary = cmd_run(shipped_scenario("hinf_unicycle_4", integration={"horizon": 0.0}), tmp_path)
    lines = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert len(lines) == 2
    assert lines[0].startswith("t,x_1_1,x_1_2")
    assert (tmp_path / "poses.csv").exists()
    assert summary.outputs["summary"].endswith("summary.json")


def test_strict_run_refuses_infeasible_gains(tmp_path):
    scenario = shipped_scenario("hinf_unicycle_4", synthesis={"when": "never"},
                                gains={"K1": [[0.0, 0.0], [0.0, 0.0]]}, integration={"horizon": 0.01})
    with pytest.raises(Infeasible):
        cmd_run(scenario, tmp_path, strict=True)
    summary = cmd_run(scenario, tmp_path)
    assert not summary.feasible
    assert summary.settling_bound is None


def test_leader_run_writes_tracking(tmp_path):
    cmd_run(shipped_scenario("leader_unicycle_4", integration={"horizon": 0.02}), tmp_path)
    header = (tmp_path / "tracking.csv").read_text().splitlines()[0]
    assert header == "t,e_l_1,e_l_2"


def test_parse_grid():
    assert np.allclose(parse_grid("0.05:0.5:10"), np.linspace(0.05, 0.5, 10))
    assert parse_grid("0:1:0").size == 0
    with pytest.raises(ScenarioValidationError):
        parse_grid("0.1-0.5")


def test_empty_sweep(tmp_path):
    result = cmd_sweep(shipped_scenario("hinf_unicycle_4"), "d", "0.1:0.5:0", tmp_path, simulate=False)
    assert result.rows == []
    assert (tmp_path / "sweep_d.csv").read_text().strip() == "value,q,settling_bound,settling_time,feasible"


def test_delay_sweep_is_monotone(tmp_path):
    result = cmd_sweep(shipped_scenario("hinf_unicycle_4"), "d", "0.05:0.5:10", tmp_path, simulate=False)
    q = [row["q"] for row in result.rows]
    assert len(q) == 10
    assert all(b >= a for a, b in zip(q, q[1:]))


def test_gamma_sweep_finds_critical_gamma():
    result = cmd_sweep(shipped_scenario("hinf_unicycle_4"), "gamma", "1.0001:1.5:6", simulate=False)
    assert result.critical_gamma is not None
    assert 1.0001 < result.critical_gamma < 1.5


def test_gamma_sweep_reports_gamma_at_one_as_infeasible_row(tmp_path):
    result = cmd_sweep(shipped_scenario("hinf_unicycle_4"), "gamma", "1.0:1.5:6", tmp_path, simulate=False)
    assert len(result.rows) == 6
    first = result.rows[0]
    assert first["feasible"] is False
    assert first["q"] is None
    assert "gamma must exceed 1" in first["reason"]
    assert all(row["q"] is not None and row["reason"] is None for row in result.rows[1:])
    lines = (tmp_path / "sweep_gamma.csv").read_text().splitlines()
    assert len(lines) == 7
    assert "nan" in lines[1]


def test_delay_sweep_rescales_profile():
    document = sweep_document(validate_document(shipped_document("perlink_unicycle_4")), "d", 0.7)
    assert document.delay.bound == 0.7
    assert document.delay.sup == pytest.approx(0.7)
    assert document.synthesis.when == "never"


def test_unknown_sweep_parameter():
    with pytest.raises(ScenarioValidationError):
        cmd_sweep(shipped_scenario("hinf_unicycle_4"), "K1", "0:1:2")


def test_monte_carlo_needs_noise():
    with pytest.raises(ScenarioValidationError):
        cmd_montecarlo(shipped_scenario("hinf_unicycle_4"), 2, 0)


def test_monte_carlo_writes_curves(tmp_path):
    scenario = shipped_scenario("stochastic_unicycle_4", integration={"horizon": 0.01, "output_interval": 0.001})
    summary = cmd_montecarlo(scenario, 3, 4, tmp_path)
    header = (tmp_path / "mc_curves.csv").read_text().splitlines()[0]
    assert header == "t,mean_e_norm,q05_e_norm,q95_e_norm"
    assert summary.extra["runs"] == 3
    assert summary.monte_carlo.runs == 3


def test_monte_carlo_with_external_runner():
    scenario = shipped_scenario("stochastic_unicycle_4", integration={"horizon": 0.01, "output_interval": 0.001})
    calls = []

    def runner(document, root_seed, indices):
        calls.append((document.synthesis.when, root_seed, list(indices)))
        times = np.linspace(0.0, 0.01, 11)
        return [(times, np.full(11, float(index))) for index in indices]

    summary = cmd_montecarlo(scenario, 3, 8, path_runner=runner)
    assert calls == [("never", 8, [0, 1, 2])]
    assert summary.monte_carlo.mean[0] == pytest.approx(1.0)
