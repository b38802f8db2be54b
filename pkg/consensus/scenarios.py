"""
Scenario files and the commands that consume them.

A scenario is a YAML document (``*.scn``) validated by :class:`~consensus.schemas.ScenarioDocument`
and then assembled into runtime objects. Commands return a :class:`RunSummary` and, when given an
output directory, write their artifacts there.
"""

import dataclasses
import functools
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pydantic
import yaml
from django.conf import settings

from . import outputs
from .agents import (
    AgentDynamics,
    DisturbanceModel,
    NoiseModel,
    UnicycleParams,
    custom_affine_dynamics,
    friction_disturbance_gain,
    stochastic_noise_gain,
    unicycle_dynamics,
)
from .control import ControlMode, DelayMode, GainSet, lyapunov_value
from .criteria import (
    CriteriaKind,
    CriteriaReport,
    SearchSpace,
    bisect_gamma,
    check_conditions,
    critical_gamma,
    lambda_max,
    leader_follower_matrices,
    leader_follower_state,
    synthesize_gains,
)
from .exceptions import (
    ConsensusError,
    DimensionMismatch,
    Infeasible,
    ParseError,
    ScenarioValidationError,
    ZeroDisturbance,
)
from .schemas import ScenarioDocument
from .signals import Reference, Sinusoid, Waveform, constant_signal, sinusoid_signal, zero_signal
from .simulator import (
    DEFAULT_STEP,
    DEFAULT_STOCHASTIC_STEP,
    ClosedLoop,
    DelayProfile,
    IntegrationSettings,
    LinkDelay,
    MonteCarloResult,
    RazumikhinReport,
    Trajectory,
    detect_settling,
    hinf_ratio,
    monte_carlo,
    razumikhin_check,
    run_scenario,
    zero_state_trajectory,
)
from .topology import ConsensusProjection, Topology, build_consensus_matrix, build_laplacian, projection_from_matrix

logger = logging.getLogger(__name__)

SWEEP_PARAMETERS = ("d", "b", "a", "gamma", "noise_power")
EXPLICIT_M_TOL = 1e-3


# ───── runtime scenario ─────

@dataclass(eq=False)
class Scenario:
    document: ScenarioDocument
    topology: Topology
    projection: ConsensusProjection
    plant: AgentDynamics
    nominal: AgentDynamics
    gains: GainSet
    delays: DelayProfile
    disturbance: DisturbanceModel | None
    noise: NoiseModel | None
    reference: Reference | None
    integration: IntegrationSettings
    initial_states: np.ndarray
    initial_poses: np.ndarray | None
    source: Path | None = None
    gain_source: str = "given"
    given_report: CriteriaReport | None = None

    @property
    def name(self) -> str:
        return self.document.name

    @property
    def mode(self) -> ControlMode:
        return ControlMode(self.document.control.mode)

    @property
    def delay_mode(self) -> DelayMode:
        return DelayMode(self.document.control.delay_mode)

    @property
    def root_seed(self) -> int:
        return self.document.seeds.root

    @property
    def stochastic(self) -> bool:
        return self.noise is not None

    @property
    def criteria_kind(self) -> CriteriaKind:
        if self.mode is ControlMode.LEADER_FOLLOWER:
            return CriteriaKind.STOCHASTIC_LEADER_FOLLOWER if self.stochastic else CriteriaKind.LEADER_FOLLOWER
        if self.mode is ControlMode.PARTIAL_ACCESS:
            return CriteriaKind.PARTIAL
        return CriteriaKind.STOCHASTIC if self.stochastic else CriteriaKind.HINF

    def closed_loop(self) -> ClosedLoop:
        return ClosedLoop(
            mode=ControlMode.FULL_STATE if self.mode is ControlMode.STOCHASTIC else self.mode,
            delay_mode=self.delay_mode,
            topology=self.topology,
            projection=self.projection,
            plant=self.plant,
            nominal=self.nominal,
            gains=self.gains,
            delays=self.delays,
            disturbance=self.disturbance,
            noise=self.noise,
            reference=self.reference,
        )

    def initial_vector(self) -> np.ndarray:
        if self.initial_poses is None:
            return self.initial_states.copy()
        return np.concatenate([self.initial_states, self.initial_poses])

    def initial_error(self) -> np.ndarray:
        if self.mode is ControlMode.LEADER_FOLLOWER:
            return leader_follower_state(self.projection, self.initial_states, self.reference.value(0.0))
        return self.projection.lifted @ self.initial_states

    @property
    def V0(self) -> float:
        return lyapunov_value(self.initial_error(), self.gains.alpha)

    def condition_samples(self) -> list[np.ndarray]:
        """States for the disturbance condition when the gain has no constant bound."""
        if self.disturbance is None or self.disturbance.gg_bound is not None:
            return []
        verification = self.document.verification
        count = verification.samples if verification.samples is not None else settings.SIM_CONDITION_SAMPLES
        radius = verification.radius if verification.radius is not None else settings.SIM_CONDITION_RADIUS
        rng = np.random.default_rng(self.root_seed)
        return list(rng.uniform(-radius, radius, size=(count, self.initial_states.size)))

    def criteria_context(self) -> dict:
        return {"disturbance": self.disturbance, "samples": self.condition_samples(), "V0": self.V0}

    def with_gains(self, gains: GainSet, source: str, given_report: CriteriaReport | None = None) -> "Scenario":
        return dataclasses.replace(self, gains=gains, gain_source=source,
                                   given_report=given_report or self.given_report)

    def effective_document(self) -> ScenarioDocument:
        """The document with the gains in force written in and synthesis switched off."""
        data = self.document.model_dump(mode="json")
        data["gains"].update({
            "K1": self.gains.K1.tolist(),
            "K2": self.gains.K2.tolist(),
            "K3": None if self.gains.K3 is None else self.gains.K3.tolist(),
            "a": self.gains.a,
            "b": self.gains.b,
            "gamma": self.gains.gamma,
        })
        data["synthesis"] = {"when": "never"}
        return validate_document(data)


# ───── parsing ─────

def validate_document(data) -> ScenarioDocument:
    try:
        return ScenarioDocument.model_validate(data)
    except pydantic.ValidationError as exc:
        error = exc.errors()[0]
        location = ".".join(str(part) for part in error["loc"]) or None
        context = error.get("ctx") or {}
        message = str(context["error"]) if "error" in context else error["msg"]
        raise ScenarioValidationError(message, field=location) from exc


def load_document(text: str) -> ScenarioDocument:
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark is not None else None
        raise ParseError(exc.problem or str(exc), line=line) from exc
    except yaml.YAMLError as exc:
        raise ParseError(str(exc)) from exc
    if not isinstance(data, dict):
        raise ParseError("scenario must be a mapping of sections", line=1)
    return validate_document(data)


def parse_text(text: str, source: Path | None = None) -> Scenario:
    return build_scenario(load_document(text), source=source)


def parse_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc
    return parse_text(text, source=path)


def echo_scenario(scenario: Scenario | ScenarioDocument) -> str:
    """Canonical YAML of the scenario with every default written out."""
    document = scenario.document if isinstance(scenario, Scenario) else scenario
    return yaml.safe_dump(document.model_dump(mode="json"), sort_keys=False, allow_unicode=True)


# ───── assembly ─────

def _matrix(rows) -> np.ndarray | None:
    return None if rows is None else np.atleast_2d(np.asarray(rows, dtype=float))


def _dynamics(document: ScenarioDocument) -> tuple[AgentDynamics, AgentDynamics]:
    model = document.model
    if model.label == "custom-affine":
        dynamics = custom_affine_dynamics(model.drift, model.input)
        return dynamics, dynamics
    params = UnicycleParams(m=model.m, R_axle=model.R, r_wheel=model.r, p_offset=model.p)
    plant = unicycle_dynamics(params)
    if not model.nominal:
        return plant, plant
    renames = {"m": "m", "R": "R_axle", "r": "r_wheel", "p": "p_offset"}
    nominal = dataclasses.replace(params, **{renames[k]: v for k, v in model.nominal.items()})
    return plant, unicycle_dynamics(nominal)


def _delay_profile(document: ScenarioDocument, topology: Topology) -> DelayProfile:
    section = document.delay
    c1 = section.c1 if section.profile == "decaying" else 0.0
    links = {}
    for link in section.links:
        i, j = link.receiver - 1, link.sender - 1
        if i >= topology.N or j >= topology.N or topology.adjacency[i, j] != 1.0:
            raise ScenarioValidationError(
                f"link {link.sender}->{link.receiver} is not an edge of the topology", field="delay.links",
            )
        links[(i, j)] = LinkDelay(link.c0, link.c1, link.rate)
    default = LinkDelay(section.c0, c1, section.rate)
    bound = section.bound if section.bound is not None else max(d.sup for d in (default, *links.values()))
    return DelayProfile(default, bound=bound, links=links)


def _signal(section, dim: int):
    if section.kind == "constant":
        return constant_signal(section.value, dim)
    if section.kind == "sinusoid":
        return sinusoid_signal(
            Sinusoid(Waveform(section.waveform), section.amplitude, section.omega, section.phase), dim,
        )
    return zero_signal(dim)


def _disturbance(document: ScenarioDocument, dim: int) -> DisturbanceModel | None:
    if document.disturbance.gain == "none":
        return None
    return DisturbanceModel(
        G=friction_disturbance_gain,
        w=_signal(document.disturbance.signal, dim),
        gg_bound=np.eye(dim),
        label="friction",
    )


def _noise(document: ScenarioDocument, n: int, N: int) -> NoiseModel | None:
    if document.noise.gain == "none":
        return None
    return NoiseModel(
        H=functools.partial(stochastic_noise_gain, alpha=document.gains.alpha, n=n),
        power=document.noise.power,
        channels=N,
        label="fractional",
    )


def _reference(document: ScenarioDocument) -> Reference | None:
    if document.reference is None:
        return None
    return Reference(tuple(
        Sinusoid(Waveform(c.kind), c.amplitude, c.omega, c.phase, c.offset) for c in document.reference.components
    ))


def _resolve_Q(value, projection: ConsensusProjection, laplacian, gains: GainSet, leader_follower: bool,
               disturbance: DisturbanceModel | None) -> np.ndarray:
    """``Q = "auto"`` takes ``λ_max`` of the disturbance map's worst case times the identity."""
    n, N = projection.n, projection.N
    if leader_follower:
        _, _, T = leader_follower_matrices(projection, laplacian, gains.K1, gains.K2, gains.K3, n)
    else:
        T = projection.lifted
    dim = T.shape[0]
    if isinstance(value, str):
        if disturbance is None or disturbance.gg_bound is None:
            return np.zeros((dim, dim))
        return lambda_max(T @ disturbance.gg_bound @ T.T, "TTᵀ") * np.eye(dim)
    Q = np.atleast_2d(np.asarray(value, dtype=float))
    if Q.shape == (1, 1):
        return float(Q[0, 0]) * np.eye(dim)
    if Q.shape != (dim, dim):
        raise DimensionMismatch(f"Q must be {dim}×{dim}, got {Q.shape}")
    return Q


def build_scenario(document: ScenarioDocument, source: Path | None = None) -> Scenario:
    topology = build_laplacian(document.topology.adjacency)
    plant, nominal = _dynamics(document)
    n, N = plant.n, topology.N

    if document.topology.M is not None:
        projection = projection_from_matrix(document.topology.M, n=n, tol=EXPLICIT_M_TOL)
        if projection.N != N:
            raise DimensionMismatch(f"M has {projection.N} columns but the topology has {N} agents")
    else:
        projection = build_consensus_matrix(topology, row_norm=document.topology.row_norm, n=n)

    delays = _delay_profile(document, topology)
    disturbance = _disturbance(document, n * N)
    noise = _noise(document, n, N)

    section = document.gains
    gains = GainSet(
        K1=section.K1, K2=section.K2, K3=_matrix(section.K3), C=_matrix(section.C),
        alpha=section.alpha, a=section.a, b=section.b, d=delays.bound,
        gamma=None if noise is not None else section.gamma,
    )
    leader_follower = document.control.mode == "leader_follower"
    Q = None if noise is not None else _resolve_Q(section.Q, projection, topology.laplacian, gains,
                                                  leader_follower, disturbance)
    gains = gains.replace(Q=Q)

    states = np.asarray(document.initial.states, dtype=float)
    if states.shape != (N, n):
        raise DimensionMismatch(f"initial states must be {N} rows of length {n}, got {states.shape}")
    poses = None
    if plant.aux_dim:
        poses = np.zeros((N, plant.aux_dim)) if document.initial.poses is None else np.asarray(
            document.initial.poses, dtype=float)
        if poses.shape != (N, plant.aux_dim):
            raise DimensionMismatch(f"initial poses must be {N} rows of length {plant.aux_dim}")
        poses = poses.ravel()

    reference = _reference(document)
    if reference is not None and reference.dim != n:
        raise DimensionMismatch(f"reference must have {n} components, got {reference.dim}")

    integration = document.integration
    step = integration.step or (DEFAULT_STOCHASTIC_STEP if noise is not None else DEFAULT_STEP)
    if step > delays.bound:
        raise ScenarioValidationError("integration step must not exceed the delay bound d", field="integration.step")

    return Scenario(
        document=document,
        topology=topology,
        projection=projection,
        plant=plant,
        nominal=nominal,
        gains=gains,
        delays=delays,
        disturbance=disturbance,
        noise=noise,
        reference=reference,
        integration=IntegrationSettings(
            step=step, horizon=integration.horizon, output_interval=integration.output_interval,
            settle_tol=integration.settle_tol,
        ),
        initial_states=states.ravel(),
        initial_poses=poses,
        source=source,
    )


# ───── criteria and gain resolution ─────

def check_scenario(scenario: Scenario) -> CriteriaReport:
    return check_conditions(scenario.criteria_kind, scenario.projection, scenario.topology.laplacian,
                            scenario.gains, **scenario.criteria_context())


def search_space(scenario: Scenario) -> SearchSpace:
    section = scenario.document.synthesis
    return SearchSpace(
        K1_seed=_matrix(section.k1_seed),
        K2_seed=_matrix(section.k2_seed),
        K3_seed=_matrix(section.k3_seed),
        k1_scales=tuple(section.k1_scales),
        k2_scales=tuple(section.k2_scales),
        k3_scales=tuple(section.k3_scales),
        a_values=tuple(section.a_values),
        b_values=tuple(section.b_values),
        gamma_values=() if scenario.stochastic else tuple(section.gamma_values),
    )


def resolve_gains(scenario: Scenario, report: CriteriaReport | None = None) -> tuple[Scenario, CriteriaReport]:
    """
    Apply the scenario's synthesis policy. With ``when: infeasible`` the given gains are kept if
    they pass and replaced by synthesized ones otherwise; the given margins stay on the scenario.
    """
    report = report or check_scenario(scenario)
    when = scenario.document.synthesis.when
    if when == "never" or (when == "infeasible" and report.feasible):
        return scenario, report

    if not report.feasible:
        logger.warning(
            "given gains of %s fail the criteria: q=%.6g, margins %s",
            scenario.name, report.q, {k: round(v, 6) for k, v in report.margins().items()},
        )
    gains = synthesize_gains(
        scenario.projection, scenario.topology.laplacian, search_space(scenario), scenario.criteria_kind,
        base=scenario.gains, n_jobs=getattr(settings, "SIM_SEARCH_JOBS", 1), **scenario.criteria_context(),
    )
    resolved = scenario.with_gains(gains, source="synthesized", given_report=report)
    return resolved, check_scenario(resolved)


# ───── summaries ─────

@dataclass(eq=False)
class RunSummary:
    scenario: str
    command: str
    report: CriteriaReport
    delay_bound: float
    gain_source: str = "given"
    given_report: CriteriaReport | None = None
    gains: dict = field(default_factory=dict)
    settling_time: float | None = None
    hinf_ratio: float | None = None
    razumikhin: RazumikhinReport | None = None
    outputs: dict[str, str] = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    trajectory: Trajectory | None = field(default=None, repr=False)
    monte_carlo: MonteCarloResult | None = field(default=None, repr=False)

    @property
    def feasible(self) -> bool:
        return self.report.feasible

    @property
    def settling_bound(self) -> float | None:
        return self.report.settling_bound if self.report.feasible else None

    def as_dict(self) -> dict:
        data = {
            "scenario": self.scenario,
            "command": self.command,
            "d": self.delay_bound,
            "feasible": self.feasible,
            "q": self.report.q,
            "settling_bound": self.settling_bound,
            "settling_time": self.settling_time,
            "hinf_ratio": self.hinf_ratio,
            "gain_source": self.gain_source,
            "gains": self.gains,
            "criteria": self.report.as_dict(),
            "outputs": self.outputs,
        }
        if self.given_report is not None:
            data["given_criteria"] = self.given_report.as_dict()
        if self.razumikhin is not None:
            data["razumikhin"] = {**dataclasses.asdict(self.razumikhin), "fraction": self.razumikhin.fraction}
        data.update(self.extra)
        return data

    def format_text(self) -> str:
        lines = [
            f"scenario = {self.scenario}",
            f"command = {self.command}",
            f"d = {self.delay_bound:.10g}",
            f"gain_source = {self.gain_source}",
        ]
        if self.settling_time is not None:
            lines.append(f"settling_time = {self.settling_time:.10g}")
        if self.hinf_ratio is not None:
            lines.append(f"hinf_ratio = {self.hinf_ratio:.10g}")
        return "\n".join(lines) + "\n" + self.report.format_text()


def _gains_dict(gains: GainSet) -> dict:
    return {
        "K1": gains.K1.tolist(),
        "K2": gains.K2.tolist(),
        "K3": None if gains.K3 is None else gains.K3.tolist(),
        "C": None if gains.C is None else gains.C.tolist(),
        "alpha": gains.alpha, "a": gains.a, "b": gains.b, "d": gains.d, "gamma": gains.gamma,
    }


def _summary(scenario: Scenario, command: str, report: CriteriaReport, **kwargs) -> RunSummary:
    return RunSummary(
        scenario=scenario.name, command=command, report=report, delay_bound=scenario.delays.bound,
        gain_source=scenario.gain_source, given_report=scenario.given_report,
        gains=_gains_dict(scenario.gains), **kwargs,
    )


def _write_summary(summary: RunSummary, out_dir: Path | None) -> RunSummary:
    if out_dir is not None:
        out_dir = Path(out_dir)
        summary.outputs["report"] = str(outputs.write_report(summary.format_text(), out_dir / "report.txt"))
        summary.outputs["summary"] = str(out_dir / "summary.json")
        outputs.write_summary(summary.as_dict(), out_dir / "summary.json")
    return summary


# ───── commands ─────

def cmd_check(scenario: Scenario, out_dir: Path | None = None) -> RunSummary:
    scenario, report = resolve_gains(scenario)
    extra = {"V0": scenario.V0}
    if report.kind in (CriteriaKind.HINF, CriteriaKind.PARTIAL, CriteriaKind.LEADER_FOLLOWER):
        extra["critical_gamma"] = critical_gamma(report.terms)
    return _write_summary(_summary(scenario, "check", report, extra=extra), out_dir)


def cmd_run(scenario: Scenario, out_dir: Path | None = None, strict: bool = False,
            hinf: bool = True) -> RunSummary:
    """
    Check, then simulate. Infeasible criteria only stop the run when ``strict`` is set; otherwise
    the run proceeds without a settling bound.
    """
    scenario, report = resolve_gains(scenario)
    if not report.feasible:
        if strict:
            raise Infeasible(f"criteria infeasible for {scenario.name}: margins {report.margins()}")
        logger.warning("criteria infeasible for %s; simulating without a finite-time guarantee", scenario.name)

    trajectory = run_scenario(scenario)
    summary = _summary(scenario, "run", report, settling_time=trajectory.settling_time)

    if hinf and not scenario.stochastic and scenario.disturbance is not None:
        try:
            summary.hinf_ratio = hinf_ratio(zero_state_trajectory(scenario))
        except ZeroDisturbance:
            logger.info("no disturbance energy in %s; H∞ ratio skipped", scenario.name)
    if report.q < 0.0 and not scenario.stochastic:
        summary.razumikhin = razumikhin_check(
            trajectory, report.q, scenario.gains.alpha, scenario.gains.d,
            tol=scenario.document.verification.razumikhin_tol,
        )
    if trajectory.tracking is not None:
        summary.extra["final_tracking_error"] = float(np.linalg.norm(trajectory.tracking[-1]))

    if out_dir is not None:
        out_dir = Path(out_dir)
        summary.outputs["trajectory"] = str(outputs.write_trajectory_csv(trajectory, out_dir / "trajectory.csv"))
        poses = outputs.write_poses_csv(trajectory, out_dir / "poses.csv")
        if poses is not None:
            summary.outputs["poses"] = str(poses)
        tracking = outputs.write_tracking_csv(trajectory, out_dir / "tracking.csv")
        if tracking is not None:
            summary.outputs["tracking"] = str(tracking)
    summary.trajectory = trajectory
    return _write_summary(summary, out_dir)


def parse_grid(grid: str) -> np.ndarray:
    """``"a:b:n"`` → ``n`` evenly spaced values from ``a`` to ``b``."""
    try:
        start, stop, count = grid.split(":")
        start, stop, count = float(start), float(stop), int(count)
    except ValueError as exc:
        raise ScenarioValidationError("grid must look like a:b:n", field="grid") from exc
    if count < 0:
        raise ScenarioValidationError("grid point count must be nonnegative", field="grid")
    return np.linspace(start, stop, count)


def sweep_document(document: ScenarioDocument, parameter: str, value: float) -> ScenarioDocument:
    """Copy of ``document`` with one parameter changed; ``d`` rescales the whole delay profile."""
    data = document.model_dump(mode="json")
    if parameter == "d":
        factor = value / document.delay.sup if document.delay.sup > 0.0 else 0.0
        delay = data["delay"]
        delay["c0"] *= factor
        delay["c1"] *= factor
        for link in delay["links"]:
            link["c0"] *= factor
            link["c1"] *= factor
        delay["bound"] = value
        step = data["integration"]["step"]
        if step is not None and step > value:
            data["integration"]["step"] = value
    elif parameter == "noise_power":
        data["noise"]["power"] = value
    elif parameter in ("a", "b", "gamma"):
        data["gains"][parameter] = value
    else:
        raise ScenarioValidationError(f"cannot sweep {parameter!r}; choose one of {', '.join(SWEEP_PARAMETERS)}",
                                      field="parameter")
    data["synthesis"] = {"when": "never"}
    return validate_document(data)


@dataclass(eq=False)
class SweepResult:
    parameter: str
    rows: list[dict]
    critical_gamma: float | None = None
    outputs: dict[str, str] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "parameter": self.parameter,
            "rows": self.rows,
            "critical_gamma": self.critical_gamma,
            "outputs": self.outputs,
        }


def _row_scenario(base: Scenario, parameter: str, value: float) -> Scenario:
    scenario = build_scenario(sweep_document(base.document, parameter, value), source=base.source)
    # matrices stay at the base scenario's resolved values across the sweep
    gains = scenario.gains.replace(K1=base.gains.K1, K2=base.gains.K2, K3=base.gains.K3)
    return scenario.with_gains(gains, source=base.gain_source)


def cmd_sweep(scenario: Scenario, parameter: str, grid, out_dir: Path | None = None,
              simulate: bool = True) -> SweepResult:
    if parameter not in SWEEP_PARAMETERS:
        raise ScenarioValidationError(f"cannot sweep {parameter!r}; choose one of {', '.join(SWEEP_PARAMETERS)}",
                                      field="parameter")
    values = parse_grid(grid) if isinstance(grid, str) else np.asarray(grid, dtype=float)
    base, _ = resolve_gains(scenario)

    rows = []
    for value in values:
        try:
            row_scenario = _row_scenario(base, parameter, float(value))
            report = check_scenario(row_scenario)
            settling_time = None
            if simulate:
                settling_time = detect_settling(run_scenario(row_scenario), row_scenario.integration.settle_tol)
        except ConsensusError as exc:
            logger.warning("sweep %s=%g skipped: %s", parameter, value, exc.message)
            rows.append({"value": float(value), "q": None, "settling_bound": None, "settling_time": None,
                         "feasible": False, "reason": exc.message})
            continue
        rows.append({
            "value": float(value),
            "q": report.q,
            "settling_bound": report.settling_bound if report.feasible else None,
            "settling_time": settling_time,
            "feasible": report.feasible,
            "reason": None,
        })

    result = SweepResult(parameter=parameter, rows=rows)
    if parameter == "gamma" and rows:
        result.critical_gamma = _bisect_sweep(base, rows)
    if out_dir is not None:
        result.outputs["table"] = str(outputs.write_sweep_csv(rows, Path(out_dir) / f"sweep_{parameter}.csv"))
        outputs.write_summary(result.as_dict(), Path(out_dir) / f"sweep_{parameter}.json")
    return result


def _bisect_sweep(base: Scenario, rows: list[dict]) -> float | None:
    """γ* between the last infeasible and the first feasible row in increasing γ."""
    ordered = sorted((row for row in rows if row["q"] is not None), key=lambda row: row["value"])
    for low, high in zip(ordered, ordered[1:]):
        if low["q"] >= 0.0 > high["q"]:
            def q_of_gamma(gamma):
                return check_scenario(_row_scenario(base, "gamma", gamma)).q

            return bisect_gamma(q_of_gamma, low["value"], high["value"])
    return None


def cmd_montecarlo(scenario: Scenario, runs: int, root_seed: int, out_dir: Path | None = None,
                   path_runner=None) -> RunSummary:
    """
    Expected-norm consensus over ``runs`` paths. ``path_runner`` receives the effective scenario
    document, the root seed and the path indices, and returns ``(times, e_norm)`` per path.
    """
    if not scenario.stochastic:
        raise ScenarioValidationError("Monte-Carlo requires a stochastic scenario", field="noise")
    scenario, report = resolve_gains(scenario)

    runner = None
    if path_runner is not None:
        document = scenario.effective_document()
        runner = functools.partial(path_runner, document, root_seed)
    result = monte_carlo(scenario, runs, root_seed, path_runner=runner)

    summary = _summary(scenario, "mc", report, extra={"runs": runs, "seed": root_seed})
    bound = summary.settling_bound
    if bound is not None:
        summary.extra["mean_e_norm_at_bound"] = result.mean_at(min(bound, float(result.times[-1])))
    summary.extra["final_mean_e_norm"] = float(result.mean[-1])
    summary.monte_carlo = result
    if out_dir is not None:
        summary.outputs["curves"] = str(outputs.write_monte_carlo_csv(result, Path(out_dir) / "mc_curves.csv"))
    return _write_summary(summary, out_dir)
