"""
Fractional-power consensus laws, the Lyapunov value and the penalty output.

All stacked vectors are agent-major: ``X = [x_1; …; x_N]``. ``(I_N ⊗ K) V`` and ``(L ⊗ I_m) V``
are applied block-wise rather than through explicit Kronecker products.
"""

import dataclasses
import enum
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .agents import AgentDynamics, stacked_terms, solve_gains
from .exceptions import DimensionMismatch, GammaTooSmall, ScenarioValidationError, SingularInputGain
from .topology import ConsensusProjection


class ControlMode(str, enum.Enum):
    FULL_STATE = "full_state"
    PARTIAL_ACCESS = "partial_access"
    LEADER_FOLLOWER = "leader_follower"
    STOCHASTIC = "stochastic"


class DelayMode(str, enum.Enum):
    UNIFORM_BOUND = "uniform_bound"
    PER_LINK = "per_link"


def _matrix(value, name: str) -> np.ndarray | None:
    if value is None:
        return None
    matrix = np.atleast_2d(np.asarray(value, dtype=float))
    if matrix.ndim != 2:
        raise DimensionMismatch(f"{name} must be a matrix")
    return matrix


@dataclass(frozen=True, eq=False)
class GainSet:
    K1: np.ndarray
    K2: np.ndarray
    alpha: float
    a: float
    b: float
    d: float
    K3: np.ndarray | None = None
    C: np.ndarray | None = None
    gamma: float | None = None
    Q: np.ndarray | None = None

    def __post_init__(self):
        for name in ("K1", "K2", "K3", "C", "Q"):
            object.__setattr__(self, name, _matrix(getattr(self, name), name))

        n = self.K1.shape[0]
        if self.K1.shape != (n, n) or self.K2.shape != (n, n):
            raise DimensionMismatch("K1 and K2 must be square matrices of the same size")
        if self.C is not None:
            if self.C.shape[1] != n or self.C.shape[0] > n:
                raise DimensionMismatch(f"C must be l×{n} with l ≤ {n}")
            if self.K3 is None or self.K3.shape != (n, self.C.shape[0]):
                raise DimensionMismatch(f"K3 must be {n}×{self.C.shape[0]} when C is given")
        elif self.K3 is not None and self.K3.shape != (n, n):
            raise DimensionMismatch(f"K3 must be {n}×{n}")
        if self.Q is not None and (self.Q.shape[0] != self.Q.shape[1]
                                   or not np.allclose(self.Q, self.Q.T, atol=1e-10)):
            raise DimensionMismatch("Q must be a symmetric matrix")

        if self.alpha <= 1.0:
            raise ScenarioValidationError("alpha must exceed 1", field="alpha")
        if self.a <= 0.0:
            raise ScenarioValidationError("a must be positive", field="a")
        if self.b <= 0.0:
            raise ScenarioValidationError("b must be positive", field="b")
        if self.d <= 0.0:
            raise ScenarioValidationError("delay bound d must be positive", field="d")
        if self.gamma is not None and self.gamma <= 1.0:
            raise GammaTooSmall(f"gamma must exceed 1, got {self.gamma}")

    @property
    def n(self) -> int:
        return self.K1.shape[0]

    def replace(self, **changes) -> "GainSet":
        return dataclasses.replace(self, **changes)


def exponents(alpha: float) -> tuple[float, float]:
    """``(β₁, β₂) = ((1−α)/(2α−1), α/(2α−1))``."""
    return (1.0 - alpha) / (2.0 * alpha - 1.0), alpha / (2.0 * alpha - 1.0)


def fractional_term(v, alpha: float) -> np.ndarray:
    """``(vᵀv)^β₁ v``, continuously extended by 0 at the origin."""
    v = np.asarray(v, dtype=float)
    squared = float(v @ v)
    if squared == 0.0:
        return np.zeros_like(v)
    return squared ** exponents(alpha)[0] * v


def blockwise(K: np.ndarray, V, N: int) -> np.ndarray:
    """``(I_N ⊗ K) V``."""
    return (np.asarray(V, dtype=float).reshape(N, -1) @ K.T).ravel()


def laplacian_apply(laplacian: np.ndarray, V, m: int) -> np.ndarray:
    """``(L ⊗ I_m) V``."""
    N = laplacian.shape[0]
    return (laplacian @ np.asarray(V, dtype=float).reshape(N, m)).ravel()


def consensus_error(projection: ConsensusProjection, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.size != projection.lifted.shape[1]:
        raise DimensionMismatch(f"state of length {X.size} does not match the projection")
    return projection.lifted @ X


def delayed_coupling(adjacency, own_delayed, neighbour_delayed, alpha: float, scale_from=None) -> np.ndarray:
    """
    Per-link form of ``(L ⊗ I_m) fractional_term(X(t−d))``.

    ``own_delayed[i]`` is ``x_i(t−d)`` and ``neighbour_delayed[i, j]`` is ``x_j(t−τ_ij(t))``. The
    fractional factor is the global one of the uniformly delayed state ``scale_from``.
    """
    A = np.asarray(adjacency, dtype=float)
    own = np.asarray(own_delayed, dtype=float).reshape(A.shape[0], -1)
    neighbours = np.asarray(neighbour_delayed, dtype=float)
    scale_vector = own.ravel() if scale_from is None else np.asarray(scale_from, dtype=float)
    squared = float(scale_vector @ scale_vector)
    if squared == 0.0:
        return np.zeros(own.size)
    scale = squared ** exponents(alpha)[0]
    differences = own[:, None, :] - neighbours
    return scale * np.einsum("ij,ijk->ik", A, differences).ravel()


def control_full(X_now, X_delayed, dynamics: AgentDynamics, laplacian, gains: GainSet,
                 *, t: float = 0.0, aux=None, coupling=None) -> np.ndarray:
    """
    ``U = -Φ⁻¹[F + (I⊗K1) frac(X) + (I⊗K2)(L⊗I) frac(X(t−d))]``.

    ``coupling`` replaces ``(L⊗I) frac(X(t−d))`` when the delayed term is assembled per link.
    """
    L = np.asarray(laplacian, dtype=float)
    N = L.shape[0]
    n = dynamics.n
    if gains.n != n:
        raise DimensionMismatch(f"gains are {gains.n}×{gains.n} but agents have n={n}")
    F, phis = stacked_terms(dynamics, X_now, t, aux)
    if coupling is None:
        coupling = laplacian_apply(L, fractional_term(X_delayed, gains.alpha), n)
    V = F + blockwise(gains.K1, fractional_term(X_now, gains.alpha), N) + blockwise(gains.K2, coupling, N)
    return -solve_gains(phis, V)


def control_partial(X_now, Y_delayed, dynamics: AgentDynamics, laplacian, gains: GainSet,
                    *, t: float = 0.0, aux=None, coupling=None) -> np.ndarray:
    """Partial-access law: the delayed neighbour term only sees the outputs ``Y = (I⊗C) X(t−d)``."""
    if gains.C is None or gains.K3 is None:
        raise DimensionMismatch("partial access requires C and K3")
    L = np.asarray(laplacian, dtype=float)
    N = L.shape[0]
    n = dynamics.n
    l = gains.C.shape[0]
    Y_delayed = np.asarray(Y_delayed, dtype=float)
    if Y_delayed.size != l * N:
        raise DimensionMismatch(f"delayed outputs must have length {l * N}")
    F, phis = stacked_terms(dynamics, X_now, t, aux)
    if coupling is None:
        coupling = laplacian_apply(L, fractional_term(Y_delayed, gains.alpha), l)
    V = F + blockwise(gains.K1, fractional_term(X_now, gains.alpha), N) + blockwise(gains.K3, coupling, N)
    return -solve_gains(phis, V)


def leader_feedback(e_l, K3, p_min: float, alpha: float) -> np.ndarray:
    """``K3 λ_min(P)^β₁ frac(e_l)``."""
    return np.asarray(K3, dtype=float) @ (p_min ** exponents(alpha)[0] * fractional_term(e_l, alpha))


def control_leader(x1, r, r_dot, dynamics: AgentDynamics, K3, P, alpha: float,
                   *, t: float = 0.0, aux=None, p_min: float | None = None) -> np.ndarray:
    """
    Leader input ``u1 = -φ⁻¹[f + K3 λ_min(P)^β₁ frac(e_l) − ṙ]`` with ``e_l = x1 − r``.

    The closed loop is ``ė_l = -K3 λ_min(P)^β₁ frac(e_l)`` plus the leader's disturbance.
    """
    x1 = np.asarray(x1, dtype=float)
    f, phi = dynamics.evaluate(x1, t, aux)
    condition = np.linalg.cond(phi)
    if not np.isfinite(condition) or condition > 1e8:
        raise SingularInputGain(f"leader input gain is not invertible (condition {condition:.3e})")
    if p_min is None:
        p_min = float(linalg.eigvalsh(P)[0])
    e_l = x1 - np.asarray(r, dtype=float)
    return -linalg.solve(phi, f + leader_feedback(e_l, K3, p_min, alpha) - np.asarray(r_dot, dtype=float))


def relative_to_leader(X, n: int) -> np.ndarray:
    """Stacked state measured from agent 1: ``X - 1 ⊗ x_1``."""
    X = np.asarray(X, dtype=float)
    return X - np.tile(X[:n], X.size // n)


def control_leader_follower(X_now, X_delayed, r, r_dot, dynamics: AgentDynamics, laplacian,
                            gains: GainSet, P, *, t: float = 0.0, aux=None, coupling=None,
                            p_min: float | None = None) -> np.ndarray:
    """
    Network input in leader-follower mode. Agent 1 runs :func:`control_leader`; followers run the
    full-state law on states relative to the leader, fed forward with the reference rate ``ṙ``.
    """
    if gains.K3 is None:
        raise DimensionMismatch("leader-follower mode requires K3")
    L = np.asarray(laplacian, dtype=float)
    N = L.shape[0]
    n = dynamics.n
    if p_min is None:
        p_min = float(linalg.eigvalsh(P)[0])

    F, phis = stacked_terms(dynamics, X_now, t, aux)
    if coupling is None:
        coupling = laplacian_apply(L, fractional_term(relative_to_leader(X_delayed, n), gains.alpha), n)
    V = (F
         + blockwise(gains.K1, fractional_term(relative_to_leader(X_now, n), gains.alpha), N)
         + blockwise(gains.K2, coupling, N)
         - np.tile(np.asarray(r_dot, dtype=float), N))
    U = -solve_gains(phis, V)
    leader_aux = None if aux is None or not dynamics.aux_dim else aux[:dynamics.aux_dim]
    U[:n] = control_leader(X_now[:n], r, r_dot, dynamics, gains.K3, P, gains.alpha,
                           t=t, aux=leader_aux, p_min=p_min)
    return U


def lyapunov_value(e, alpha: float) -> float:
    """``V = (eᵀe)^β₂``."""
    e = np.asarray(e, dtype=float)
    return float(e @ e) ** exponents(alpha)[1]


def penalty_signal(e, alpha: float) -> np.ndarray:
    """``z = (eᵀe)^β₁ e``; ``‖z‖² = V^{1/α}``."""
    return fractional_term(e, alpha)
