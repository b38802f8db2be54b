"""
Agent dynamics of the form ``ẋ_i = f_i(x_i) + φ_i(x_i) u_i`` and the disturbance/noise gains.

The mobile-robot model is the nonholonomic unicycle reduced to its velocity coordinates
``ν = [v, ω]``; the pose ``(x_c, y_c, θ)`` is carried along as an auxiliary state.
"""

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import linalg

from .exceptions import DimensionMismatch, ScenarioValidationError, SingularInertia, SingularInputGain

logger = logging.getLogger(__name__)

INPUT_GAIN_MAX_CONDITION = 1e8

# (x_i, t, aux_i) -> (f_i, φ_i)
AffineModel = Callable[[np.ndarray, float, np.ndarray | None], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class AgentDynamics:
    n: int
    model: AffineModel
    label: str
    aux_dim: int = 0
    aux_rate: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    def evaluate(self, x, t: float = 0.0, aux=None) -> tuple[np.ndarray, np.ndarray]:
        return self.model(np.asarray(x, dtype=float), t, aux)

    def drift(self, x, t: float = 0.0, aux=None) -> np.ndarray:
        return self.evaluate(x, t, aux)[0]

    def input_gain(self, x, t: float = 0.0, aux=None) -> np.ndarray:
        return self.evaluate(x, t, aux)[1]


@dataclass(frozen=True)
class UnicycleParams:
    m: float = 10.0
    R_axle: float = 0.5
    r_wheel: float = 0.05
    p_offset: float = 0.04

    def __post_init__(self):
        for name in ("m", "R_axle", "r_wheel", "p_offset"):
            if getattr(self, name) <= 0.0:
                raise ScenarioValidationError("must be positive", field=name)


@dataclass(frozen=True)
class Pose:
    x_c: float
    y_c: float
    theta: float

    @classmethod
    def from_array(cls, values) -> "Pose":
        x_c, y_c, theta = (float(v) for v in values)
        return cls(x_c, y_c, theta)

    @property
    def wrapped_theta(self) -> float:
        return float(wrap_angle(self.theta))


def wrap_angle(theta):
    """Map angles into (-π, π]."""
    return np.pi - np.mod(np.pi - np.asarray(theta, dtype=float), 2.0 * np.pi)


# ───── unicycle ─────

def _inertia(params: UnicycleParams, theta: float) -> np.ndarray:
    mp = params.m * params.p_offset
    s, c = np.sin(theta), np.cos(theta)
    return np.array([
        [params.m, 0.0, mp * s],
        [0.0, params.m, -mp * c],
        [mp * s, -mp * c, 1.0],
    ])


def _coriolis(params: UnicycleParams, theta: float, theta_dot: float) -> np.ndarray:
    mp = params.m * params.p_offset
    return np.array([
        [0.0, 0.0, mp * theta_dot * np.cos(theta)],
        [0.0, 0.0, mp * theta_dot * np.sin(theta)],
        [0.0, 0.0, 0.0],
    ])


def _input_matrix(params: UnicycleParams, theta: float) -> np.ndarray:
    s, c = np.sin(theta), np.cos(theta)
    return np.array([[c, c], [s, s], [params.R_axle, -params.R_axle]]) / params.r_wheel


def _velocity_basis(p: float, theta: float) -> np.ndarray:
    s, c = np.sin(theta), np.cos(theta)
    return np.array([[c, -p * s], [s, p * c], [0.0, 1.0]])


def _velocity_basis_rate(p: float, theta: float, theta_dot: float) -> np.ndarray:
    s, c = np.sin(theta), np.cos(theta)
    return theta_dot * np.array([[-s, -p * c], [c, -p * s], [0.0, 0.0]])


def unicycle_reduced_dynamics(params: UnicycleParams, pose, nu, time: float = 0.0):
    """
    Reduced velocity dynamics ``ν̇ = drift + input_gain · τ``.

    ``drift = -(SᵀM_cS)⁻¹ Sᵀ(M_cṠ + V_cS) ν`` and ``input_gain = (SᵀM_cS)⁻¹ SᵀB_c``, with Ṡ and V_c
    evaluated at ``θ̇ = ω``. Friction and the unknown disturbance are not included here; they enter
    through the disturbance channel.
    """
    theta = pose.theta if isinstance(pose, Pose) else float(np.asarray(pose)[2])
    nu = np.asarray(nu, dtype=float)
    omega = nu[1]

    S = _velocity_basis(params.p_offset, theta)
    S_dot = _velocity_basis_rate(params.p_offset, theta, omega)
    Mc = _inertia(params, theta)
    Vc = _coriolis(params, theta, omega)

    reduced_inertia = S.T @ Mc @ S
    if np.linalg.cond(reduced_inertia) > INPUT_GAIN_MAX_CONDITION:
        raise SingularInertia("SᵀM_cS is numerically singular")

    coupling = S.T @ (Mc @ S_dot + Vc @ S) @ nu
    drift = -linalg.solve(reduced_inertia, coupling)
    input_gain = linalg.solve(reduced_inertia, S.T @ _input_matrix(params, theta))
    return drift, input_gain


def pose_kinematics(pose, nu, p_offset: float) -> np.ndarray:
    """``q̇ = S(θ) ν`` for the pose ``q = (x_c, y_c, θ)``."""
    theta = pose.theta if isinstance(pose, Pose) else float(np.asarray(pose)[2])
    return _velocity_basis(p_offset, theta) @ np.asarray(nu, dtype=float)


def unicycle_dynamics(params: UnicycleParams) -> AgentDynamics:
    def model(x, t, aux):
        pose = aux if aux is not None else np.zeros(3)
        return unicycle_reduced_dynamics(params, pose, x, t)

    return AgentDynamics(
        n=2,
        model=model,
        label="unicycle",
        aux_dim=3,
        aux_rate=lambda aux, x: pose_kinematics(aux, x, params.p_offset),
    )


def custom_affine_dynamics(drift_matrix, input_matrix) -> AgentDynamics:
    """``f(x) = A_f x`` with a constant invertible input matrix."""
    A_f = np.atleast_2d(np.asarray(drift_matrix, dtype=float))
    B = np.atleast_2d(np.asarray(input_matrix, dtype=float))
    n = A_f.shape[0]
    if A_f.shape != (n, n) or B.shape != (n, n):
        raise DimensionMismatch("custom-affine drift and input matrices must be square and equal-sized")
    _guard_input_gain(B, 0)

    return AgentDynamics(n=n, model=lambda x, t, aux: (A_f @ x, B), label="custom-affine")


# ───── stacked network quantities ─────

def _guard_input_gain(phi: np.ndarray, agent: int) -> None:
    condition = np.linalg.cond(phi)
    if not np.isfinite(condition) or condition > INPUT_GAIN_MAX_CONDITION:
        raise SingularInputGain(f"input gain of agent {agent + 1} is not invertible (condition {condition:.3e})")


def stacked_terms(dynamics: AgentDynamics, X, t: float = 0.0, aux=None):
    """Stacked drift ``F(X)`` and the per-agent input gains ``φ_i``."""
    X = np.asarray(X, dtype=float)
    n = dynamics.n
    if X.size % n:
        raise DimensionMismatch(f"state of length {X.size} is not a multiple of n={n}")
    N = X.size // n
    F = np.empty_like(X)
    gains = []
    for i in range(N):
        aux_i = None if aux is None or not dynamics.aux_dim else aux[i * dynamics.aux_dim:(i + 1) * dynamics.aux_dim]
        f_i, phi_i = dynamics.evaluate(X[i * n:(i + 1) * n], t, aux_i)
        _guard_input_gain(phi_i, i)
        F[i * n:(i + 1) * n] = f_i
        gains.append(phi_i)
    return F, gains


def stacked_drift(dynamics: AgentDynamics, X, t: float = 0.0, aux=None) -> np.ndarray:
    return stacked_terms(dynamics, X, t, aux)[0]


def stacked_input_gain(dynamics: AgentDynamics, X, t: float = 0.0, aux=None) -> np.ndarray:
    return linalg.block_diag(*stacked_terms(dynamics, X, t, aux)[1])


def apply_gains(gains, U) -> np.ndarray:
    """``Φ U`` for block-diagonal Φ given as a list of blocks."""
    n = gains[0].shape[0]
    return np.concatenate([phi @ U[i * n:(i + 1) * n] for i, phi in enumerate(gains)])


def solve_gains(gains, V) -> np.ndarray:
    """``Φ⁻¹ V`` for block-diagonal Φ given as a list of blocks."""
    n = gains[0].shape[0]
    return np.concatenate([linalg.solve(phi, V[i * n:(i + 1) * n]) for i, phi in enumerate(gains)])


# ───── disturbance and noise ─────

@dataclass(frozen=True)
class DisturbanceModel:
    G: Callable[[np.ndarray], np.ndarray]
    w: Callable[[float], np.ndarray]
    gg_bound: np.ndarray | None = None
    label: str = "custom"


@dataclass(frozen=True)
class NoiseModel:
    H: Callable[[np.ndarray], np.ndarray]
    power: float
    channels: int
    label: str = "custom"


def friction_disturbance_gain(X) -> np.ndarray:
    """``G(X) = diag(x² / (1 + x²))``; every entry lies in [0, 1), hence ``GGᵀ ⪯ I``."""
    X = np.asarray(X, dtype=float)
    return np.diag(X ** 2 / (1.0 + X ** 2))


def signed_power(x, p: float):
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.abs(x) ** p


def stochastic_noise_gain(X, alpha: float, n: int = 2) -> np.ndarray:
    """Block-diagonal ``nN×N`` gain coupling agent ``i``'s states to Wiener channel ``i``."""
    if alpha <= 1.0:
        raise ScenarioValidationError("alpha must exceed 1", field="alpha")
    X = np.asarray(X, dtype=float)
    if X.size % n:
        raise DimensionMismatch(f"state of length {X.size} is not a multiple of n={n}")
    N = X.size // n
    exponent = alpha / (2.0 * alpha - 1.0)
    H = np.zeros((X.size, N))
    for i in range(N):
        H[i * n:(i + 1) * n, i] = signed_power(X[i * n:(i + 1) * n], exponent)
    return H


@dataclass(frozen=True)
class NoiseBoundReport:
    samples: int
    satisfied: int
    worst_ratio: float

    @property
    def fraction(self) -> float:
        return self.satisfied / self.samples if self.samples else 1.0


def check_noise_trace_bound(H: Callable[[np.ndarray], np.ndarray], samples, alpha: float) -> NoiseBoundReport:
    """Empirical check of ``trace(HᵀH) ≤ ‖X‖^{α/(2α−1)}`` over the supplied states."""
    exponent = alpha / (2.0 * alpha - 1.0)
    satisfied = 0
    worst = 0.0
    count = 0
    for X in samples:
        X = np.asarray(X, dtype=float)
        trace = float(np.sum(H(X) ** 2))
        bound = float(np.linalg.norm(X)) ** exponent
        count += 1
        if trace <= bound + 1e-15:
            satisfied += 1
        if bound > 0.0:
            worst = max(worst, trace / bound)
        elif trace > 0.0:
            worst = np.inf
    report = NoiseBoundReport(samples=count, satisfied=satisfied, worst_ratio=worst)
    if report.satisfied < report.samples:
        logger.warning(
            "noise trace bound violated on %d of %d samples (worst ratio %.3f)",
            report.samples - report.satisfied, report.samples, report.worst_ratio,
        )
    return report
