"""
Fixed-step integration of the delayed closed loop.

Deterministic runs use a classical 4-stage step with delayed arguments read from the history
buffer at stage times (method of steps, valid while the step does not exceed the delay bound).
Stochastic runs use Euler–Maruyama with Wiener increments of variance ``power · h`` per channel.
The integrated vector ``y`` is the stacked state ``X`` followed by any auxiliary states (poses).
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Mapping, Protocol, Sequence

import numpy as np

from .agents import AgentDynamics, DisturbanceModel, NoiseModel, apply_gains, stacked_terms
from .control import (
    ControlMode,
    DelayMode,
    GainSet,
    blockwise,
    consensus_error,
    control_full,
    control_leader_follower,
    control_partial,
    delayed_coupling,
    lyapunov_value,
    penalty_signal,
)
from .criteria import leader_follower_state
from .exceptions import (
    DelayBoundViolated,
    NonFiniteState,
    OutOfSpan,
    ScenarioValidationError,
    ZeroDisturbance,
)
from .signals import Reference, Signal
from .topology import ConsensusProjection, Topology

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-3
DEFAULT_STOCHASTIC_STEP = 1e-4
TIME_EPS = 1e-12


# ───── history ─────

class HistoryBuffer:
    """
    Growable record of ``(t, y)`` samples with a callable pre-history on ``[-width, 0)``.

    Lookups interpolate linearly between bracketing samples. Samples older than ``keep`` seconds
    behind the newest one are dropped lazily.
    """

    def __init__(self, initial_function: Callable[[float], np.ndarray], width: float, dim: int,
                 keep: float | None = None, capacity: int = 1024):
        self.initial_function = initial_function
        self.width = float(width)
        self.keep = None if keep is None else float(keep)
        self._times = np.empty(capacity)
        self._values = np.empty((capacity, dim))
        self._start = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size - self._start

    @property
    def times(self) -> np.ndarray:
        return self._times[self._start:self._size]

    @property
    def values(self) -> np.ndarray:
        return self._values[self._start:self._size]

    def append(self, t: float, y) -> None:
        if self._size and t <= self._times[self._size - 1]:
            raise OutOfSpan(f"history timestamps must increase ({t} after {self._times[self._size - 1]})")
        if self._size == self._times.size:
            self._grow()
        self._times[self._size] = t
        self._values[self._size] = y
        self._size += 1
        if self.keep is not None:
            self._prune(t - self.keep)

    def _grow(self) -> None:
        live = len(self)
        if self._start >= self._times.size // 2:
            # reuse the dropped prefix before allocating
            self._times[:live] = self._times[self._start:self._size]
            self._values[:live] = self._values[self._start:self._size]
        else:
            times = np.empty(2 * self._times.size)
            values = np.empty((2 * self._times.size, self._values.shape[1]))
            times[:live] = self._times[self._start:self._size]
            values[:live] = self._values[self._start:self._size]
            self._times, self._values = times, values
        self._start, self._size = 0, live

    def _prune(self, horizon: float) -> None:
        # keep one sample at or before the horizon so lookups there still bracket
        cut = int(np.searchsorted(self._times[self._start:self._size], horizon, side="right")) - 1
        if cut > 0:
            self._start += cut

    def latest(self) -> tuple[float, np.ndarray]:
        if not self._size:
            raise OutOfSpan("history is empty")
        return self._times[self._size - 1], self._values[self._size - 1]

    def sample(self, t_query: float) -> np.ndarray:
        times = self.times
        if t_query < 0.0 and (not times.size or t_query < times[0]):
            if t_query < -self.width - TIME_EPS:
                raise OutOfSpan(f"t = {t_query} precedes the initial segment [{-self.width}, 0]")
            return np.asarray(self.initial_function(t_query), dtype=float)
        if not times.size or t_query < times[0] - TIME_EPS or t_query > times[-1] + TIME_EPS:
            span = (times[0], times[-1]) if times.size else (None, None)
            raise OutOfSpan(f"t = {t_query} outside the stored history {span}")

        k = int(np.searchsorted(times, t_query, side="right"))
        if k == 0:
            return self.values[0].copy()
        if k == times.size:
            return self.values[-1].copy()
        t0, t1 = times[k - 1], times[k]
        weight = (t_query - t0) / (t1 - t0)
        return (1.0 - weight) * self.values[k - 1] + weight * self.values[k]


def sample_history(buffer: HistoryBuffer, t_query: float) -> np.ndarray:
    return buffer.sample(t_query)


def constant_history(y0) -> Callable[[float], np.ndarray]:
    y0 = np.asarray(y0, dtype=float).copy()
    return lambda t: y0


# ───── delays ─────

@dataclass(frozen=True)
class LinkDelay:
    """``τ(t) = c0 + c1 · e^{-rate · t}``; ``c1 = 0`` is a constant delay."""

    c0: float
    c1: float = 0.0
    rate: float = 1.0

    def __call__(self, t: float) -> float:
        if self.c1 == 0.0:
            return self.c0
        return self.c0 + self.c1 * np.exp(-self.rate * t)

    @property
    def sup(self) -> float:
        return self.c0 + max(self.c1, 0.0)

    def scaled(self, factor: float) -> "LinkDelay":
        return LinkDelay(self.c0 * factor, self.c1 * factor, self.rate)


@dataclass(frozen=True)
class DelayProfile:
    default: LinkDelay
    bound: float
    links: Mapping[tuple[int, int], LinkDelay] = field(default_factory=dict)

    def __post_init__(self):
        if self.bound <= 0.0:
            raise ScenarioValidationError("delay bound d must be positive", field="delay.bound")
        for delay in (self.default, *self.links.values()):
            if delay.c0 < 0.0 or delay.c0 + min(delay.c1, 0.0) < 0.0:
                raise ScenarioValidationError("delays must be nonnegative", field="delay")
        if self.sup > self.bound + TIME_EPS:
            raise ScenarioValidationError("delay exceeds bound d", field="delay")

    @classmethod
    def constant(cls, tau: float, bound: float | None = None) -> "DelayProfile":
        return cls(LinkDelay(tau), bound=tau if bound is None else bound)

    @classmethod
    def decaying(cls, c0: float, c1: float, rate: float = 1.0, bound: float | None = None) -> "DelayProfile":
        delay = LinkDelay(c0, c1, rate)
        return cls(delay, bound=delay.sup if bound is None else bound)

    @property
    def sup(self) -> float:
        return max(delay.sup for delay in (self.default, *self.links.values()))

    def link(self, i: int, j: int) -> LinkDelay:
        return self.links.get((i, j), self.default)

    def tau(self, t: float, i: int, j: int) -> float:
        value = self.link(i, j)(t)
        if value > self.bound + TIME_EPS:
            raise DelayBoundViolated(
                f"delay on link {j + 1}->{i + 1} is {value:.6g} at t={t:.6g}, above d={self.bound:.6g}"
            )
        return value

    def check(self, t: float, topology: Topology) -> None:
        for i in range(topology.N):
            for j in topology.neighbours(i):
                self.tau(t, i, int(j))

    def rescaled(self, bound: float) -> "DelayProfile":
        """Profile whose supremum and bound both equal ``bound``."""
        factor = bound / self.sup if self.sup > 0.0 else 0.0
        return DelayProfile(
            self.default.scaled(factor),
            bound=bound,
            links={key: delay.scaled(factor) for key, delay in self.links.items()},
        )


# ───── steppers ─────

def rk4_step(rhs: Callable[[float, np.ndarray], np.ndarray], t: float, y, h: float) -> np.ndarray:
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


class DelayedSystem(Protocol):
    def rate(self, t: float, y: np.ndarray, history: HistoryBuffer) -> np.ndarray: ...


class StochasticSystem(DelayedSystem, Protocol):
    noise_power: float

    def diffusion(self, t: float, y: np.ndarray): ...


def _ensure_finite(y: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(y)):
        raise NonFiniteState(f"non-finite state at t={t:.6g}; step too large or controller singular")


def step_deterministic(system: DelayedSystem, history: HistoryBuffer, t: float, y, h: float) -> np.ndarray:
    y_next = rk4_step(lambda s, z: system.rate(s, z, history), t, np.asarray(y, dtype=float), h)
    _ensure_finite(y_next, t + h)
    history.append(t + h, y_next)
    return y_next


def step_stochastic(system: StochasticSystem, history: HistoryBuffer, t: float, y, h: float,
                    rng: np.random.Generator) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    H = system.diffusion(t, y)
    increments = rng.normal(0.0, np.sqrt(system.noise_power * h), size=H.shape[1])
    y_next = y + h * system.rate(t, y, history)
    y_next[:H.shape[0]] += H @ increments
    _ensure_finite(y_next, t + h)
    history.append(t + h, y_next)
    return y_next


# ───── network closed loop ─────

@dataclass(eq=False)
class ClosedLoop:
    """
    The agent network under one of the consensus laws. ``plant`` integrates, ``nominal`` is what
    the controller believes (identical unless the scenario models an uncertain plant).
    """

    mode: ControlMode
    delay_mode: DelayMode
    topology: Topology
    projection: ConsensusProjection
    plant: AgentDynamics
    nominal: AgentDynamics
    gains: GainSet
    delays: DelayProfile
    disturbance: DisturbanceModel | None = None
    noise: NoiseModel | None = None
    reference: Reference | None = None

    def __post_init__(self):
        if self.plant.n != self.nominal.n or self.plant.aux_dim != self.nominal.aux_dim:
            raise ScenarioValidationError("nominal and plant models must share dimensions", field="model")
        if self.mode is ControlMode.LEADER_FOLLOWER and self.reference is None:
            raise ScenarioValidationError("leader-follower mode requires a reference", field="reference")
        if self.reference is not None and self.reference.dim != self.n:
            raise ScenarioValidationError(f"reference must have {self.n} components", field="reference")
        self._p_min = float(np.linalg.eigvalsh(self.projection.P)[0])

    @property
    def n(self) -> int:
        return self.plant.n

    @property
    def N(self) -> int:
        return self.topology.N

    @property
    def state_dim(self) -> int:
        return self.n * self.N

    @property
    def aux_dim(self) -> int:
        return self.plant.aux_dim * self.N

    @property
    def stochastic(self) -> bool:
        return self.noise is not None

    @property
    def noise_power(self) -> float:
        return self.noise.power if self.noise is not None else 0.0

    @property
    def max_delay(self) -> float:
        return self.gains.d

    def split(self, y) -> tuple[np.ndarray, np.ndarray | None]:
        y = np.asarray(y, dtype=float)
        X = y[:self.state_dim]
        return X, (y[self.state_dim:] if self.aux_dim else None)

    def disturbance_value(self, t: float) -> np.ndarray | None:
        return None if self.disturbance is None else np.asarray(self.disturbance.w(t), dtype=float)

    def _link_view(self, X: np.ndarray) -> np.ndarray:
        """What neighbours exchange, one row per agent."""
        rows = X.reshape(self.N, self.n)
        if self.mode is ControlMode.PARTIAL_ACCESS:
            return rows @ self.gains.C.T
        if self.mode is ControlMode.LEADER_FOLLOWER:
            return rows - rows[0]
        return rows

    def _neighbour_state(self, history: HistoryBuffer, t_query: float, t: float, X: np.ndarray) -> np.ndarray:
        """Stored state at ``t_query``; between the newest sample and ``t`` it blends in the stage state."""
        t_last, y_last = history.latest()
        if t_query <= t_last:
            return history.sample(t_query)[:self.state_dim]
        if t - t_last <= TIME_EPS:
            return X
        weight = min(1.0, (t_query - t_last) / (t - t_last))
        return (1.0 - weight) * y_last[:self.state_dim] + weight * X

    def _per_link_coupling(self, t: float, history: HistoryBuffer, X: np.ndarray,
                           X_delayed: np.ndarray) -> np.ndarray:
        own = self._link_view(X_delayed)
        neighbours = np.zeros((self.N, self.N, own.shape[1]))
        for i in range(self.N):
            for j in self.topology.neighbours(i):
                j = int(j)
                sample = self._neighbour_state(history, t - self.delays.tau(t, i, j), t, X)
                neighbours[i, j] = self._link_view(sample)[j]
        return delayed_coupling(self.topology.adjacency, own, neighbours, self.gains.alpha)

    def control(self, t: float, y, history: HistoryBuffer) -> np.ndarray:
        X, aux = self.split(y)
        X_delayed = history.sample(t - self.gains.d)[:self.state_dim]
        coupling = None
        if self.delay_mode is DelayMode.PER_LINK:
            coupling = self._per_link_coupling(t, history, X, X_delayed)
        L = self.topology.laplacian

        if self.mode is ControlMode.PARTIAL_ACCESS:
            Y_delayed = blockwise(self.gains.C, X_delayed, self.N)
            return control_partial(X, Y_delayed, self.nominal, L, self.gains, t=t, aux=aux, coupling=coupling)
        if self.mode is ControlMode.LEADER_FOLLOWER:
            return control_leader_follower(
                X, X_delayed, self.reference.value(t), self.reference.rate(t), self.nominal, L,
                self.gains, self.projection.P, t=t, aux=aux, coupling=coupling, p_min=self._p_min,
            )
        return control_full(X, X_delayed, self.nominal, L, self.gains, t=t, aux=aux, coupling=coupling)

    def rate(self, t: float, y, history: HistoryBuffer) -> np.ndarray:
        X, aux = self.split(y)
        U = self.control(t, y, history)
        F, phis = stacked_terms(self.plant, X, t, aux)
        X_dot = F + apply_gains(phis, U)
        w = self.disturbance_value(t)
        if w is not None:
            X_dot = X_dot + self.disturbance.G(X) @ w
        if not self.aux_dim:
            return X_dot
        k, n = self.plant.aux_dim, self.n
        aux_dot = np.concatenate([
            self.plant.aux_rate(aux[i * k:(i + 1) * k], X[i * n:(i + 1) * n]) for i in range(self.N)
        ])
        return np.concatenate([X_dot, aux_dot])

    def diffusion(self, t: float, y) -> np.ndarray:
        return self.noise.H(self.split(y)[0])

    def error_vector(self, t: float, X) -> np.ndarray:
        """Consensus error; in leader-follower mode the stacked ``ξ`` including leader tracking."""
        if self.mode is ControlMode.LEADER_FOLLOWER:
            return leader_follower_state(self.projection, X, self.reference.value(t))
        return consensus_error(self.projection, X)


# ───── trajectories ─────

@dataclass(frozen=True)
class IntegrationSettings:
    step: float = DEFAULT_STEP
    horizon: float = 10.0
    output_interval: float | None = None
    settle_tol: float = 1e-2

    def __post_init__(self):
        if self.step <= 0.0:
            raise ScenarioValidationError("step must be positive", field="integration.step")
        if self.horizon < 0.0:
            raise ScenarioValidationError("horizon must be nonnegative", field="integration.horizon")
        if self.output_interval is not None and self.output_interval < self.step:
            raise ScenarioValidationError("output interval must be at least one step",
                                          field="integration.output_interval")
        if self.settle_tol <= 0.0:
            raise ScenarioValidationError("settling tolerance must be positive", field="integration.settle_tol")

    @property
    def stride(self) -> int:
        if self.output_interval is None:
            return 1
        return max(1, int(round(self.output_interval / self.step)))


@dataclass(eq=False)
class Trajectory:
    n: int
    N: int
    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    errors: np.ndarray
    lyapunov: np.ndarray
    int_z2: np.ndarray
    int_w2: np.ndarray
    poses: np.ndarray | None = None
    tracking: np.ndarray | None = None
    seed: int | None = None
    path_index: int | None = None
    settling_time: float | None = None

    @property
    def e_norm(self) -> np.ndarray:
        return np.linalg.norm(self.errors, axis=1)

    def __len__(self) -> int:
        return self.times.size


class _Recorder:
    def __init__(self):
        self.rows: dict[str, list] = {key: [] for key in (
            "times", "states", "controls", "errors", "lyapunov", "int_z2", "int_w2", "poses", "tracking")}

    def record(self, **values) -> None:
        for key, value in values.items():
            self.rows[key].append(value)

    def array(self, key: str) -> np.ndarray | None:
        rows = self.rows[key]
        if not rows or rows[0] is None:
            return None
        return np.asarray(rows, dtype=float)


def simulate(loop: ClosedLoop, y0, settings: IntegrationSettings, *, rng: np.random.Generator | None = None,
             initial_function: Callable[[float], np.ndarray] | None = None) -> Trajectory:
    """Integrate ``loop`` from ``y0`` over ``[0, horizon]``."""
    h = settings.step
    if h > loop.max_delay + TIME_EPS:
        raise ScenarioValidationError("integration step must not exceed the delay bound d", field="integration.step")
    if loop.stochastic and rng is None:
        raise ScenarioValidationError("stochastic runs need a random generator", field="seeds")

    y = np.asarray(y0, dtype=float).copy()
    _ensure_finite(y, 0.0)
    history = HistoryBuffer(
        initial_function or constant_history(y),
        width=loop.max_delay,
        dim=y.size,
        keep=loop.max_delay + 2.0 * h,
    )
    history.append(0.0, y)

    alpha = loop.gains.alpha
    steps = int(np.floor(settings.horizon / h + 1e-9))
    stride = settings.stride
    recorder = _Recorder()
    int_z2 = int_w2 = 0.0

    def energies(t, X):
        z = penalty_signal(loop.error_vector(t, X), alpha)
        w = loop.disturbance_value(t)
        return float(z @ z), (0.0 if w is None else float(w @ w))

    def record(t, y):
        X, aux = loop.split(y)
        error = loop.error_vector(t, X)
        tracking = None
        if loop.mode is ControlMode.LEADER_FOLLOWER:
            tracking = X[:loop.n] - loop.reference.value(t)
        recorder.record(
            times=t, states=X.copy(), controls=loop.control(t, y, history), errors=error,
            lyapunov=lyapunov_value(error, alpha), int_z2=int_z2, int_w2=int_w2,
            poses=None if aux is None else aux.copy(), tracking=tracking,
        )

    z2_prev, w2_prev = energies(0.0, loop.split(y)[0])
    record(0.0, y)
    t = 0.0
    for k in range(1, steps + 1):
        loop.delays.check(t, loop.topology)
        if loop.stochastic:
            y = step_stochastic(loop, history, t, y, h, rng)
        else:
            y = step_deterministic(loop, history, t, y, h)
        t = k * h
        z2, w2 = energies(t, loop.split(y)[0])
        int_z2 += 0.5 * h * (z2_prev + z2)
        int_w2 += 0.5 * h * (w2_prev + w2)
        z2_prev, w2_prev = z2, w2
        if k % stride == 0 or k == steps:
            record(t, y)

    return Trajectory(
        n=loop.n, N=loop.N,
        times=recorder.array("times"), states=recorder.array("states"),
        controls=recorder.array("controls"), errors=recorder.array("errors"),
        lyapunov=recorder.array("lyapunov"), int_z2=recorder.array("int_z2"),
        int_w2=recorder.array("int_w2"), poses=recorder.array("poses"),
        tracking=recorder.array("tracking"),
    )


def run_scenario(scenario, *, rng: np.random.Generator | None = None, zero_state: bool = False) -> Trajectory:
    """
    Integrate a parsed scenario. Stochastic scenarios without an explicit ``rng`` draw from the
    scenario's root seed.
    """
    loop = scenario.closed_loop()
    y0 = scenario.initial_vector()
    if zero_state:
        y0 = y0.copy()
        y0[:loop.state_dim] = 0.0
    seed = None
    if loop.stochastic and rng is None:
        seed = scenario.root_seed
        rng = np.random.default_rng(seed)
    trajectory = simulate(loop, y0, scenario.integration, rng=rng)
    trajectory.seed = seed
    trajectory.settling_time = detect_settling(trajectory, scenario.integration.settle_tol)
    return trajectory


def zero_state_trajectory(scenario) -> Trajectory:
    return run_scenario(scenario, zero_state=True)


# ───── metrics ─────

def hinf_ratio(trajectory: Trajectory) -> float:
    """``∫‖z‖² / ∫‖w‖²`` over the run."""
    denominator = float(trajectory.int_w2[-1])
    if denominator < 1e-15:
        raise ZeroDisturbance("disturbance energy is zero; the H∞ ratio is undefined")
    return float(trajectory.int_z2[-1]) / denominator


def detect_settling(trajectory: Trajectory, tol: float) -> float | None:
    """First output time after which ``‖e‖ ≤ tol`` for the rest of the run; ``None`` if never."""
    if tol <= 0.0:
        raise ScenarioValidationError("settling tolerance must be positive", field="settle_tol")
    above = np.flatnonzero(trajectory.e_norm > tol)
    if above.size == 0:
        return float(trajectory.times[0])
    if above[-1] == len(trajectory) - 1:
        return None
    return float(trajectory.times[above[-1] + 1])


@dataclass(frozen=True)
class RazumikhinReport:
    points: int
    eligible: int
    satisfied: int
    worst_excess: float

    @property
    def fraction(self) -> float:
        return self.satisfied / self.eligible if self.eligible else 1.0


def razumikhin_check(trajectory: Trajectory, q: float, alpha: float, d: float, tol: float = 1e-3) -> RazumikhinReport:
    """
    Finite-difference test of ``V̇ ≤ q V^{1/α} + tol`` at output points where ``V`` over the trailing
    window ``[t − d, t]`` (constant pre-history before 0) does not exceed ``V(t)``.
    """
    times, V = trajectory.times, trajectory.lyapunov
    if times.size < 2:
        return RazumikhinReport(points=int(times.size), eligible=0, satisfied=0, worst_excess=0.0)
    V_dot = np.gradient(V, times)
    eligible = satisfied = 0
    worst = -np.inf
    for k, t in enumerate(times):
        lo = int(np.searchsorted(times, t - d - TIME_EPS, side="left"))
        window_max = V[lo:k + 1].max()
        if t - d < times[0]:
            window_max = max(window_max, V[0])
        if window_max > V[k] * (1.0 + 1e-12):
            continue
        eligible += 1
        excess = V_dot[k] - q * V[k] ** (1.0 / alpha)
        worst = max(worst, excess)
        if excess <= tol:
            satisfied += 1
    return RazumikhinReport(points=int(times.size), eligible=eligible, satisfied=satisfied,
                            worst_excess=float(worst) if eligible else 0.0)


# ───── Monte-Carlo ─────

def path_seed(root_seed: int, index: int) -> np.random.SeedSequence:
    """Seed of path ``index``; equal to the ``index``-th child of ``SeedSequence(root_seed)``."""
    return np.random.SeedSequence(root_seed, spawn_key=(index,))


def simulate_path(scenario, root_seed: int, index: int) -> Trajectory:
    trajectory = run_scenario(scenario, rng=np.random.default_rng(path_seed(root_seed, index)))
    trajectory.seed = root_seed
    trajectory.path_index = index
    return trajectory


@dataclass(eq=False)
class MonteCarloResult:
    times: np.ndarray
    mean: np.ndarray
    q05: np.ndarray
    q95: np.ndarray
    runs: int
    root_seed: int

    def mean_at(self, t: float) -> float:
        return float(np.interp(t, self.times, self.mean))


PathRunner = Callable[[Sequence[int]], list[tuple[np.ndarray, np.ndarray]]]


def aggregate_paths(curves: Sequence[tuple[np.ndarray, np.ndarray]], root_seed: int) -> MonteCarloResult:
    times = np.asarray(curves[0][0], dtype=float)
    for other, _ in curves[1:]:
        if np.asarray(other).shape != times.shape or not np.allclose(other, times, rtol=0.0, atol=1e-12):
            raise ScenarioValidationError("Monte-Carlo paths do not share a time grid", field="integration")
    norms = np.vstack([np.asarray(e_norm, dtype=float) for _, e_norm in curves])
    q05, q95 = np.quantile(norms, [0.05, 0.95], axis=0)
    return MonteCarloResult(times=times, mean=norms.mean(axis=0), q05=q05, q95=q95,
                            runs=len(curves), root_seed=root_seed)


def monte_carlo(scenario, runs: int, root_seed: int, *, path_runner: PathRunner | None = None) -> MonteCarloResult:
    """Mean and 5/95 % quantiles of ``‖e(t)‖`` over ``runs`` independently seeded paths."""
    if runs < 1:
        raise ScenarioValidationError("at least one run required", field="runs")

    def run_locally(indices):
        curves = []
        for index in indices:
            trajectory = simulate_path(scenario, root_seed, index)
            curves.append((trajectory.times, trajectory.e_norm))
        return curves

    logger.info("Monte-Carlo: %d paths from root seed %d", runs, root_seed)
    curves = (path_runner or run_locally)(list(range(runs)))
    return aggregate_paths(curves, root_seed)
