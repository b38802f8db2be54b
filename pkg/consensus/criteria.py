"""
Delay-dependent feasibility criteria, settling-time bounds and gain synthesis.

Every ``λ_max`` is taken on an argument that is checked symmetric to ``SYMMETRY_TOL`` and then
handed to a symmetric eigensolver. A semidefinite condition ``X ⪯ 0`` holds when
``λ_max(X) ≤ CONDITION_TOL``; its margin is ``λ_max(X)``. Condition 14/37 has margin ``q``.
"""

import enum
import itertools
import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable

import numpy as np
from joblib import Parallel, delayed
from scipy import linalg, optimize

from .agents import DisturbanceModel
from .control import GainSet, exponents
from .exceptions import (
    AsymmetricArgument,
    ConsensusError,
    DimensionMismatch,
    GammaTooSmall,
    Infeasible,
    SingularCorrection,
)
from .topology import ConsensusProjection

logger = logging.getLogger(__name__)

CONDITION_TOL = 1e-9
SYMMETRY_TOL = 1e-10
CORRECTION_MAX_CONDITION = 1e10


class CriteriaKind(str, enum.Enum):
    HINF = "hinf"
    STOCHASTIC = "stochastic"
    PARTIAL = "partial"
    LEADER_FOLLOWER = "leader_follower"
    STOCHASTIC_LEADER_FOLLOWER = "stochastic_leader_follower"


# ───── spectral helpers ─────

def _symmetric_eigenvalues(X: np.ndarray, what: str) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    asymmetry = float(np.max(np.abs(X - X.T))) if X.size else 0.0
    scale = max(1.0, float(np.max(np.abs(X)))) if X.size else 1.0
    if asymmetry > SYMMETRY_TOL * scale:
        raise AsymmetricArgument(f"{what} is not symmetric (deviation {asymmetry:.3e})")
    return linalg.eigvalsh(0.5 * (X + X.T))


def lambda_max(X, what: str = "argument") -> float:
    return float(_symmetric_eigenvalues(X, what)[-1])


def lambda_min(X, what: str = "argument") -> float:
    return float(_symmetric_eigenvalues(X, what)[0])


def lambda_min_positive(X, what: str = "argument", tol: float = 1e-10) -> float:
    """Smallest eigenvalue over the range space (nonzero eigenvalues only)."""
    values = _symmetric_eigenvalues(X, what)
    positive = values[values > tol * max(1.0, float(np.abs(values).max()))]
    if positive.size == 0:
        raise DimensionMismatch(f"{what} has no positive eigenvalues")
    return float(positive[0])


# ───── matrix assemblies ─────

def _check_square(K, n: int, name: str) -> np.ndarray:
    K = np.atleast_2d(np.asarray(K, dtype=float))
    if K.shape != (n, n):
        raise DimensionMismatch(f"{name} must be {n}×{n}, got {K.shape}")
    return K


def _check_projection(projection: ConsensusProjection, laplacian, n: int) -> np.ndarray:
    L = np.asarray(laplacian, dtype=float)
    if projection.n != n:
        raise DimensionMismatch(f"projection is lifted with n={projection.n}, expected n={n}")
    if L.shape != (projection.N, projection.N):
        raise DimensionMismatch(f"Laplacian must be {projection.N}×{projection.N}, got {L.shape}")
    return L


def build_RSP(projection: ConsensusProjection, laplacian, K1, K2, n: int):
    """``R = -(M⊗I)(I⊗K1)(M⊗I)⁺``, ``S = -(M⊗I)(I⊗K2)(L⊗I)(M⊗I)⁺`` and ``P``."""
    L = _check_projection(projection, laplacian, n)
    K1 = _check_square(K1, n, "K1")
    K2 = _check_square(K2, n, "K2")
    N = projection.N
    lifted, lifted_pinv = projection.lifted, projection.lifted_pinv
    R = -lifted @ np.kron(np.eye(N), K1) @ lifted_pinv
    S = -lifted @ np.kron(np.eye(N), K2) @ np.kron(L, np.eye(n)) @ lifted_pinv
    return R, S, projection.P


def build_S1P1(projection: ConsensusProjection, laplacian, K3, C, n: int):
    """Output-coupling counterparts ``S1`` and ``P1`` of the partial-access law."""
    L = _check_projection(projection, laplacian, n)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    K3 = np.atleast_2d(np.asarray(K3, dtype=float))
    l = C.shape[0]
    if C.shape[1] != n or l > n:
        raise DimensionMismatch(f"C must be l×{n} with l ≤ {n}, got {C.shape}")
    if np.linalg.matrix_rank(C) != l:
        raise DimensionMismatch("C must have full row rank")
    if K3.shape != (n, l):
        raise DimensionMismatch(f"K3 must be {n}×{l}, got {K3.shape}")
    N = projection.N
    lifted, lifted_pinv = projection.lifted, projection.lifted_pinv
    S1 = (-lifted @ np.kron(np.eye(N), K3) @ np.kron(L, np.eye(l))
          @ np.kron(np.eye(N), C) @ lifted_pinv)
    P1 = lifted_pinv.T @ np.kron(np.eye(N), C.T @ C) @ lifted_pinv
    return S1, 0.5 * (P1 + P1.T)


def leader_follower_matrices(projection: ConsensusProjection, laplacian, K1, K2, K3, n: int):
    """
    Error-coordinate matrices ``A = blockdiag(-K3, A1)``, ``B = blockdiag(0, B1)`` and
    ``T = [T1; T2]`` for the state ``ξ = [x_1 − r; (M⊗I)X]``.

    ``T1 = e_1ᵀ ⊗ I_n`` picks agent 1's rows of the stacked disturbance.
    """
    L = _check_projection(projection, laplacian, n)
    K1 = _check_square(K1, n, "K1")
    K2 = _check_square(K2, n, "K2")
    K3 = _check_square(K3, n, "K3")
    N = projection.N
    I_n = np.eye(n)
    lifted, lifted_pinv = projection.lifted, projection.lifted_pinv

    D_u = np.zeros((N, N))
    D_u[0, 0] = 1.0
    D_ubar = np.eye(N) - D_u

    correction = np.eye(n * (N - 1)) - lifted @ np.kron(D_u, I_n) @ lifted_pinv
    condition = np.linalg.cond(correction)
    if not np.isfinite(condition) or condition > CORRECTION_MAX_CONDITION:
        raise SingularCorrection(f"leader correction matrix is singular (condition {condition:.3e})")
    correction_inv = linalg.inv(correction)

    A1 = correction_inv @ lifted @ (-np.kron(D_ubar, K1) + np.kron(D_u, I_n)) @ lifted_pinv
    B1 = correction_inv @ (-lifted @ np.kron(D_ubar, K2) @ np.kron(L, I_n) @ lifted_pinv)
    T1 = np.kron(np.eye(N)[:1], I_n)
    T2 = correction_inv @ lifted @ (np.eye(n * N) - np.kron(D_u, I_n))

    A = linalg.block_diag(-K3, A1)
    B = linalg.block_diag(np.zeros((n, n)), B1)
    T = np.vstack([T1, T2])
    return A, B, T


def leader_follower_state(projection: ConsensusProjection, X, r) -> np.ndarray:
    """``ξ = [x_1 − r; (M⊗I)X]``."""
    X = np.asarray(X, dtype=float)
    n = projection.n
    return np.concatenate([X[:n] - np.asarray(r, dtype=float), projection.lifted @ X])


# ───── q and its terms ─────

@dataclass(frozen=True)
class QTerms:
    """Additive breakdown of ``q``; ``attenuation_weight`` is ``λ_max(Q)``."""

    spectral: float
    attenuation: float
    delay: float
    gain: float
    constant: float
    attenuation_weight: float = 0.0

    @property
    def total(self) -> float:
        return self.spectral + self.attenuation + self.delay + self.gain + self.constant

    def dominant(self) -> str:
        values = {k: v for k, v in asdict(self).items() if k != "attenuation_weight"}
        return max(values, key=lambda k: abs(values[k]))

    def as_dict(self) -> dict:
        return {**asdict(self), "total": self.total}


def feasible_q_threshold(terms: QTerms) -> float:
    """Value the spectral term has to stay below for ``q < 0`` with the other terms fixed."""
    return -(terms.total - terms.spectral)


def _q_terms(R, S, p_min: float, p_gain: float, gains: GainSet, dim: int,
             attenuation: float, constant: float, attenuation_weight: float = 0.0) -> QTerms:
    beta1, beta2 = exponents(gains.alpha)
    spectral_argument = beta2 * p_min ** beta1 * (R + R.T) + (S.T @ S) / gains.a
    dim_power = float(dim) ** ((gains.alpha - 1.0) / gains.alpha)
    return QTerms(
        spectral=lambda_max(spectral_argument, "spectral argument of q"),
        attenuation=attenuation,
        delay=0.5 * gains.b * gains.d * (dim_power + 1.0),
        gain=gains.a * (beta2 * p_gain ** beta1) ** 2 * dim_power,
        constant=constant,
        attenuation_weight=attenuation_weight,
    )


def _attenuation(gains: GainSet, Q) -> tuple[float, float]:
    if gains.gamma is None:
        raise GammaTooSmall("gamma required")
    if gains.gamma <= 1.0:
        raise GammaTooSmall(f"gamma must exceed 1, got {gains.gamma}")
    q_max = lambda_max(Q, "Q") if Q is not None and np.size(Q) else 0.0
    return q_max / (gains.gamma ** 2 - 1.0), q_max


def noise_trace_term(projection: ConsensusProjection) -> float:
    """``(λ_max(MᵀM), λ_min(M⁺ᵀM⁺))``, the latter over the range space."""
    M, M_pinv = projection.M, projection.M_pinv
    return lambda_max(M.T @ M, "MᵀM"), lambda_min_positive(M_pinv.T @ M_pinv, "M⁺ᵀM⁺")


def _noise_term(projection: ConsensusProjection, alpha: float) -> float:
    numerator, base = noise_trace_term(projection)
    return numerator / base ** exponents(alpha)[1]


def hinf_q_terms(R, S, P, Q, gains: GainSet, n: int, N: int) -> QTerms:
    attenuation, q_max = _attenuation(gains, Q)
    return _q_terms(R, S, lambda_min(P, "P"), lambda_max(P, "P"), gains, n * (N - 1),
                    attenuation, 1.0, q_max)


def hinf_q_value(R, S, P, Q, gains: GainSet, n: int, N: int) -> float:
    return hinf_q_terms(R, S, P, Q, gains, n, N).total


def stochastic_q_terms(R, S, P, projection: ConsensusProjection, gains: GainSet, n: int, N: int) -> QTerms:
    return _q_terms(R, S, lambda_min(P, "P"), lambda_max(P, "P"), gains, n * (N - 1),
                    _noise_term(projection, gains.alpha), 0.0)


def stochastic_q_value(R, S, P, projection: ConsensusProjection, gains: GainSet, n: int, N: int) -> float:
    return stochastic_q_terms(R, S, P, projection, gains, n, N).total


def partial_q_terms(R, S1, P, P1, Q, gains: GainSet, n: int, N: int) -> QTerms:
    attenuation, q_max = _attenuation(gains, Q)
    return _q_terms(R, S1, lambda_min(P, "P"), lambda_max(P1, "P1"), gains, n * (N - 1),
                    attenuation, 1.0, q_max)


def partial_q_value(R, S1, P, P1, Q, gains: GainSet, n: int, N: int) -> float:
    return partial_q_terms(R, S1, P, P1, Q, gains, n, N).total


def leader_follower_q_terms(A, B, P, Q, gains: GainSet, n: int, N: int, stochastic: bool = False,
                            projection: ConsensusProjection | None = None) -> QTerms:
    p_min, p_max = lambda_min(P, "P"), lambda_max(P, "P")
    if stochastic:
        if projection is None:
            raise DimensionMismatch("stochastic leader-follower q needs the projection")
        return _q_terms(A, B, p_min, p_max, gains, n * N, _noise_term(projection, gains.alpha), 0.0)
    attenuation, q_max = _attenuation(gains, Q)
    return _q_terms(A, B, p_min, p_max, gains, n * N, attenuation, 1.0, q_max)


def leader_follower_q_value(A, B, P, Q, gains: GainSet, n: int, N: int, stochastic: bool = False,
                            projection: ConsensusProjection | None = None) -> float:
    return leader_follower_q_terms(A, B, P, Q, gains, n, N, stochastic, projection).total


def settling_bound(q: float, alpha: float, V0: float) -> float:
    """``T = α / (|q|(α−1)) · V0^{(α−1)/α}``."""
    if q >= 0.0:
        raise Infeasible(f"no settling bound: q = {q:.6g} is not negative")
    if V0 < 0.0:
        raise DimensionMismatch("V0 must be nonnegative")
    if V0 == 0.0:
        return 0.0
    return alpha / (abs(q) * (alpha - 1.0)) * V0 ** ((alpha - 1.0) / alpha)


# ───── reports ─────

@dataclass(frozen=True)
class ConditionResult:
    label: str
    margin: float
    strict: bool = False

    @property
    def ok(self) -> bool:
        return self.margin < 0.0 if self.strict else self.margin <= CONDITION_TOL


@dataclass(eq=False)
class CriteriaReport:
    kind: CriteriaKind
    R: np.ndarray
    S: np.ndarray
    P: np.ndarray
    q: float
    terms: QTerms
    conditions: list[ConditionResult]
    V0: float
    alpha: float
    settling_bound: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return all(c.ok for c in self.conditions)

    def condition(self, label: str) -> ConditionResult:
        for result in self.conditions:
            if result.label == label:
                return result
        raise KeyError(label)

    def margins(self) -> dict[str, float]:
        return {c.label: c.margin for c in self.conditions}

    def as_dict(self) -> dict:
        data = {
            "kind": self.kind.value,
            "q": self.q,
            "V0": self.V0,
            "alpha": self.alpha,
            "feasible": self.feasible,
            "settling_bound": self.settling_bound,
            "q_terms": self.terms.as_dict(),
        }
        for c in self.conditions:
            data[f"condition_{c.label}_ok"] = c.ok
            data[f"condition_{c.label}_margin"] = c.margin
        data.update(self.extra)
        return data

    def format_text(self) -> str:
        lines = []
        for key, value in self.as_dict().items():
            if isinstance(value, dict):
                for sub, sub_value in value.items():
                    lines.append(f"{key}.{sub} = {_format_value(sub_value)}")
            else:
                lines.append(f"{key} = {_format_value(value)}")
        return "\n".join(lines) + "\n"


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def _finish(kind, R, S, P, terms: QTerms, conditions, V0, alpha, extra=None) -> CriteriaReport:
    q = terms.total
    bound = settling_bound(q, alpha, V0) if q < 0.0 else None
    return CriteriaReport(
        kind=kind, R=R, S=S, P=P, q=q, terms=terms, conditions=conditions, V0=float(V0),
        alpha=alpha, settling_bound=bound,
        extra={"spectral_threshold": feasible_q_threshold(terms), **(extra or {})},
    )


# ───── condition checks ─────

def disturbance_margin(T, Q, disturbance: DisturbanceModel | None, samples: Iterable = ()) -> float:
    """
    ``λ_max(T G Gᵀ Tᵀ − Q)``, from the model's constant bound on ``GGᵀ`` when it has one and as the
    worst case over ``samples`` otherwise.
    """
    T = np.atleast_2d(np.asarray(T, dtype=float))
    Q = np.zeros((T.shape[0], T.shape[0])) if Q is None else np.asarray(Q, dtype=float)
    if Q.shape != (T.shape[0], T.shape[0]):
        raise DimensionMismatch(f"Q must be {T.shape[0]}×{T.shape[0]}, got {Q.shape}")
    if disturbance is None:
        return lambda_max(-Q, "condition 13 argument")
    if disturbance.gg_bound is not None:
        bound = np.asarray(disturbance.gg_bound, dtype=float)
        return lambda_max(T @ bound @ T.T - Q, "condition 13 argument")

    worst = -np.inf
    for X in samples:
        G = np.atleast_2d(disturbance.G(np.asarray(X, dtype=float)))
        worst = max(worst, lambda_max(T @ G @ G.T @ T.T - Q, "condition 13 argument"))
    if worst == -np.inf:
        return lambda_max(-Q, "condition 13 argument")
    return worst


def _delay_free_margin(R, P, b: float, Q) -> float:
    dim = R.shape[0]
    Q = np.zeros((dim, dim)) if Q is None else Q
    return lambda_max(lambda_min(P, "P") * (R + R.T) - b * np.eye(dim) + Q, "condition 15 argument")


def _resolve_Q(Q, dim: int):
    if Q is None:
        return np.zeros((dim, dim))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if Q.shape == (1, 1):
        return float(Q[0, 0]) * np.eye(dim)
    if Q.shape != (dim, dim):
        raise DimensionMismatch(f"Q must be {dim}×{dim}, got {Q.shape}")
    return Q


def check_hinf_conditions(projection: ConsensusProjection, laplacian, gains: GainSet, *,
                          disturbance: DisturbanceModel | None = None, samples: Iterable = (),
                          V0: float = 0.0) -> CriteriaReport:
    n, N = projection.n, projection.N
    R, S, P = build_RSP(projection, laplacian, gains.K1, gains.K2, n)
    Q = _resolve_Q(gains.Q, n * (N - 1))
    terms = hinf_q_terms(R, S, P, Q, gains, n, N)
    conditions = [
        ConditionResult("13", disturbance_margin(projection.lifted, Q, disturbance, samples)),
        ConditionResult("14", terms.total, strict=True),
        ConditionResult("15", _delay_free_margin(R, P, gains.b, Q)),
    ]
    return _finish(CriteriaKind.HINF, R, S, P, terms, conditions, V0, gains.alpha)


def check_stochastic_conditions(projection: ConsensusProjection, laplacian, gains: GainSet, *,
                                V0: float = 0.0) -> CriteriaReport:
    n, N = projection.n, projection.N
    R, S, P = build_RSP(projection, laplacian, gains.K1, gains.K2, n)
    terms = stochastic_q_terms(R, S, P, projection, gains, n, N)
    conditions = [
        ConditionResult("37", terms.total, strict=True),
        ConditionResult("38", _delay_free_margin(R, P, gains.b, None)),
    ]
    return _finish(CriteriaKind.STOCHASTIC, R, S, P, terms, conditions, V0, gains.alpha)


def check_partial_conditions(projection: ConsensusProjection, laplacian, gains: GainSet, *,
                             disturbance: DisturbanceModel | None = None, samples: Iterable = (),
                             V0: float = 0.0) -> CriteriaReport:
    n, N = projection.n, projection.N
    if gains.C is None or gains.K3 is None:
        raise DimensionMismatch("partial access requires C and K3")
    R, _, P = build_RSP(projection, laplacian, gains.K1, gains.K2, n)
    S1, P1 = build_S1P1(projection, laplacian, gains.K3, gains.C, n)
    Q = _resolve_Q(gains.Q, n * (N - 1))
    terms = partial_q_terms(R, S1, P, P1, Q, gains, n, N)
    conditions = [
        ConditionResult("13", disturbance_margin(projection.lifted, Q, disturbance, samples)),
        ConditionResult("14", terms.total, strict=True),
        ConditionResult("15", _delay_free_margin(R, P, gains.b, Q)),
    ]
    return _finish(CriteriaKind.PARTIAL, R, S1, P, terms, conditions, V0, gains.alpha,
                   extra={"lambda_max_P1": lambda_max(P1, "P1")})


def check_leader_follower_conditions(projection: ConsensusProjection, laplacian, gains: GainSet, *,
                                     disturbance: DisturbanceModel | None = None,
                                     samples: Iterable = (), V0: float = 0.0,
                                     stochastic: bool = False) -> CriteriaReport:
    """Conditions in the error coordinate ``ξ``; ``V0`` is ``V(ξ(0))``."""
    n, N = projection.n, projection.N
    if gains.K3 is None:
        raise DimensionMismatch("leader-follower mode requires K3")
    A, B, T = leader_follower_matrices(projection, laplacian, gains.K1, gains.K2, gains.K3, n)
    P = projection.P
    if stochastic:
        terms = leader_follower_q_terms(A, B, P, None, gains, n, N, stochastic=True, projection=projection)
        conditions = [
            ConditionResult("37", terms.total, strict=True),
            ConditionResult("38", _delay_free_margin(A, P, gains.b, None)),
        ]
        kind = CriteriaKind.STOCHASTIC_LEADER_FOLLOWER
    else:
        Q = _resolve_Q(gains.Q, n * N)
        terms = leader_follower_q_terms(A, B, P, Q, gains, n, N)
        conditions = [
            ConditionResult("13", disturbance_margin(T, Q, disturbance, samples)),
            ConditionResult("14", terms.total, strict=True),
            ConditionResult("15", _delay_free_margin(A, P, gains.b, Q)),
        ]
        kind = CriteriaKind.LEADER_FOLLOWER
    return _finish(kind, A, B, P, terms, conditions, V0, gains.alpha,
                   extra={"lambda_max_TTt": lambda_max(T @ T.T, "TTᵀ")})


def check_conditions(kind: CriteriaKind, projection: ConsensusProjection, laplacian, gains: GainSet,
                     **context) -> CriteriaReport:
    """Dispatch on the criteria family; unused context keys are dropped."""
    kind = CriteriaKind(kind)
    if kind is CriteriaKind.HINF:
        return check_hinf_conditions(projection, laplacian, gains, **context)
    if kind is CriteriaKind.STOCHASTIC:
        return check_stochastic_conditions(projection, laplacian, gains, V0=context.get("V0", 0.0))
    if kind is CriteriaKind.PARTIAL:
        return check_partial_conditions(projection, laplacian, gains, **context)
    if kind is CriteriaKind.LEADER_FOLLOWER:
        return check_leader_follower_conditions(projection, laplacian, gains, **context)
    return check_leader_follower_conditions(projection, laplacian, gains, V0=context.get("V0", 0.0),
                                            stochastic=True)


# ───── γ* ─────

def critical_gamma(terms: QTerms) -> float | None:
    """
    Smallest γ for which ``q < 0`` with everything else fixed. ``None`` when no γ makes ``q``
    negative; 1.0 when every admissible γ does.
    """
    base = terms.total - terms.attenuation
    if base >= 0.0:
        return None
    if terms.attenuation_weight <= 0.0:
        return 1.0
    return float(np.sqrt(1.0 + terms.attenuation_weight / -base))


def bisect_gamma(q_of_gamma: Callable[[float], float], low: float, high: float, xtol: float = 1e-8) -> float:
    """Root of ``q(γ)`` between an infeasible ``low`` and a feasible ``high``."""
    q_low, q_high = q_of_gamma(low), q_of_gamma(high)
    if q_high >= 0.0:
        raise Infeasible(f"gamma = {high} is not feasible")
    if q_low <= 0.0:
        return low
    return float(optimize.brentq(q_of_gamma, low, high, xtol=xtol))


# ───── synthesis ─────

@dataclass(frozen=True)
class SearchSpace:
    """
    Structured candidates ``K_i = s_i · seed_i``; empty scalar grids keep the base value.
    A ``None`` seed keeps the base matrix.
    """

    K1_seed: np.ndarray | None = None
    K2_seed: np.ndarray | None = None
    K3_seed: np.ndarray | None = None
    k1_scales: tuple[float, ...] = (1.0,)
    k2_scales: tuple[float, ...] = (1.0,)
    k3_scales: tuple[float, ...] = (1.0,)
    a_values: tuple[float, ...] = ()
    b_values: tuple[float, ...] = ()
    gamma_values: tuple[float, ...] = ()

    def candidates(self, base: GainSet) -> list[GainSet]:
        K1_seed = base.K1 if self.K1_seed is None else np.asarray(self.K1_seed, dtype=float)
        K2_seed = base.K2 if self.K2_seed is None else np.asarray(self.K2_seed, dtype=float)
        K3_seed = base.K3 if self.K3_seed is None else np.asarray(self.K3_seed, dtype=float)
        k3_scales = self.k3_scales if K3_seed is not None else (None,)

        grid = itertools.product(
            self.k1_scales, self.k2_scales, k3_scales,
            self.a_values or (base.a,), self.b_values or (base.b,), self.gamma_values or (base.gamma,),
        )
        result = []
        for s1, s2, s3, a, b, gamma in grid:
            result.append(base.replace(
                K1=s1 * K1_seed,
                K2=s2 * K2_seed,
                K3=None if K3_seed is None else s3 * K3_seed,
                a=a, b=b, gamma=gamma,
            ))
        return result


def _evaluate_candidate(index: int, kind, projection, laplacian, gains: GainSet, context: dict):
    try:
        report = check_conditions(kind, projection, laplacian, gains, **context)
    except ConsensusError as exc:
        return index, False, np.inf, str(exc)
    if not report.feasible:
        return index, False, np.inf, None
    return index, True, report.settling_bound, None


def synthesize_gains(projection: ConsensusProjection, laplacian, search_space: SearchSpace,
                     target: CriteriaKind | str, *, base: GainSet, n_jobs: int = 1, **context) -> GainSet:
    """
    Evaluate every candidate of ``search_space`` and return the feasible one with the smallest
    settling bound, ties going to the earlier candidate.
    """
    candidates = search_space.candidates(base)
    if not candidates:
        raise Infeasible("gain search space is empty")
    context.setdefault("V0", 1.0)
    samples = context.get("samples")
    if samples is not None:
        context["samples"] = list(samples)

    results = Parallel(n_jobs=n_jobs)(
        delayed(_evaluate_candidate)(i, target, projection, laplacian, gains, context)
        for i, gains in enumerate(candidates)
    )
    feasible = [(bound, index) for index, ok, bound, _ in results if ok]
    if not feasible:
        raise Infeasible(f"no feasible gains among {len(candidates)} candidates")

    bound, index = min(feasible)
    logger.info(
        "synthesized %s gains: candidate %d of %d (%d feasible), settling bound %.4g",
        CriteriaKind(target).value, index + 1, len(candidates), len(feasible), bound,
    )
    return candidates[index]
