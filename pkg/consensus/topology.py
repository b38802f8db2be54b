"""
Graph machinery behind the consensus error.

Conventions: ``adjacency[i, j] == 1`` iff agent ``i`` receives from agent ``j``; the Laplacian is
``L = D - A`` with ``D`` the diagonal of row sums. Stacked states are agent-major, so the lifted
projection is ``M ⊗ I_n``.
"""

import enum
import logging
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from scipy import linalg

from .exceptions import (
    DegenerateSpectrum,
    DimensionMismatch,
    NotClassifiable,
    RankDeficient,
    ScenarioValidationError,
)

logger = logging.getLogger(__name__)

SPECTRAL_TOL = 1e-10
MAX_GRAM_CONDITION = 1e12
ORTHOGONALITY_TOL = 1e-8


class TopologyKind(str, enum.Enum):
    UNDIRECTED = "undirected"
    BALANCED_STRONGLY_CONNECTED = "balanced_strongly_connected"


@dataclass(frozen=True, eq=False)
class Topology:
    adjacency: np.ndarray
    laplacian: np.ndarray
    kind: TopologyKind

    @property
    def N(self) -> int:
        return self.adjacency.shape[0]

    def neighbours(self, i: int) -> np.ndarray:
        """Indices ``j`` with ``a_ij = 1``."""
        return np.flatnonzero(self.adjacency[i])


@dataclass(frozen=True, eq=False)
class ConsensusProjection:
    M: np.ndarray
    M_pinv: np.ndarray
    P: np.ndarray
    l: np.ndarray
    row_norm: float
    n: int
    lifted: np.ndarray = field(repr=False)
    lifted_pinv: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return self.M.shape[1]

    @property
    def error_dim(self) -> int:
        return self.n * (self.N - 1)


def build_laplacian(adjacency) -> Topology:
    A = np.asarray(adjacency, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"adjacency must be square, got shape {A.shape}")
    N = A.shape[0]
    if N < 2:
        raise ScenarioValidationError("at least 2 agents required", field="adjacency")
    if not np.all((A == 0.0) | (A == 1.0)):
        raise ScenarioValidationError("adjacency entries must be 0 or 1", field="adjacency")
    if np.any(np.diag(A) != 0.0):
        raise ScenarioValidationError("self loops are not allowed", field="adjacency")

    laplacian = np.diag(A.sum(axis=1)) - A

    if np.array_equal(A, A.T):
        kind = TopologyKind.UNDIRECTED
    elif np.array_equal(A.sum(axis=0), A.sum(axis=1)) and _strongly_connected(A):
        kind = TopologyKind.BALANCED_STRONGLY_CONNECTED
    else:
        raise NotClassifiable(
            "topology is neither undirected nor a balanced strongly connected digraph"
        )

    logger.debug("classified %d-agent topology as %s", N, kind.value)
    return Topology(adjacency=A, laplacian=laplacian, kind=kind)


def _strongly_connected(A: np.ndarray) -> bool:
    # a_ij = 1 is an edge j -> i; reachability is unaffected by the orientation choice
    graph = nx.from_numpy_array(A.T, create_using=nx.DiGraph)
    return nx.is_strongly_connected(graph)


def left_zero_eigenvector(topology: Topology) -> np.ndarray:
    """Left null vector ``l`` of the Laplacian, normalised so that ``lᵀ1 = 1``."""
    null = linalg.null_space(topology.laplacian.T, rcond=SPECTRAL_TOL)
    if null.shape[1] != 1:
        raise DegenerateSpectrum(
            f"zero eigenvalue of the Laplacian has multiplicity {null.shape[1]}; graph is not connected"
        )
    l = null[:, 0]
    l = l / l.sum()
    if np.any(l <= 0.0):
        raise DegenerateSpectrum("left zero eigenvector is not strictly positive")
    residual = np.max(np.abs(l @ topology.laplacian))
    if residual > SPECTRAL_TOL:
        raise DegenerateSpectrum(f"left zero eigenvector residual {residual:.3e}")
    return l


def pseudo_inverse(A) -> np.ndarray:
    """Right inverse ``Aᵀ(AAᵀ)⁻¹`` of a full-row-rank matrix."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    gram = A @ A.T
    condition = np.linalg.cond(gram)
    if not np.isfinite(condition) or condition > MAX_GRAM_CONDITION:
        raise RankDeficient(f"AAᵀ is numerically singular (condition {condition:.3e})")
    return linalg.solve(gram, A, assume_a="pos").T


def build_consensus_matrix(topology: Topology, row_norm: float = 1.0, n: int = 1) -> ConsensusProjection:
    if row_norm <= 0.0:
        raise ScenarioValidationError("row_norm must be positive", field="row_norm")
    N = topology.N
    l = left_zero_eigenvector(topology)

    if topology.kind is TopologyKind.UNDIRECTED:
        values, vectors = linalg.eigh(topology.laplacian)
        basis = vectors[:, np.abs(values) > SPECTRAL_TOL * max(1.0, np.abs(values).max())]
    else:
        psi = np.eye(N) - np.outer(np.ones(N), l)
        if np.max(np.abs(psi - psi.T)) > SPECTRAL_TOL:
            raise DegenerateSpectrum("I - 1lᵀ is not symmetric; digraph is not balanced")
        values, vectors = linalg.eigh(0.5 * (psi + psi.T))
        basis = vectors[:, np.abs(values - 1.0) < ORTHOGONALITY_TOL]

    if basis.shape[1] != N - 1:
        raise DegenerateSpectrum(f"expected {N - 1} consensus directions, found {basis.shape[1]}")

    M = row_norm * _orient_rows(basis.T)
    return projection_from_matrix(M, n=n, row_norm=row_norm, l=l)


def _orient_rows(rows: np.ndarray) -> np.ndarray:
    # first nonzero entry of every row is positive
    oriented = rows.copy()
    for k, row in enumerate(oriented):
        lead = row[np.abs(row) > 1e-12]
        if lead.size and lead[0] < 0.0:
            oriented[k] = -row
    return oriented


def projection_from_matrix(M, n: int = 1, row_norm: float | None = None, l=None,
                           tol: float = ORTHOGONALITY_TOL) -> ConsensusProjection:
    """Wrap an explicit ``(N-1)×N`` matrix ``M`` into a :class:`ConsensusProjection`."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    rows, N = M.shape
    if rows != N - 1:
        raise DimensionMismatch(f"M must be (N-1)×N, got {M.shape}")
    if n < 1:
        raise DimensionMismatch("per-agent state dimension must be positive")
    scale = max(1.0, float(np.abs(M).max()))
    if np.max(np.abs(M @ np.ones(N))) > tol * scale:
        raise ScenarioValidationError("rows of M must be orthogonal to the all-ones vector", field="M")

    M_pinv = pseudo_inverse(M)
    lifted = np.kron(M, np.eye(n))
    lifted_pinv = pseudo_inverse(lifted)
    P = lifted_pinv.T @ lifted_pinv
    P = 0.5 * (P + P.T)

    if row_norm is None:
        row_norm = float(np.mean(np.linalg.norm(M, axis=1)))
    if l is None:
        l = np.full(N, 1.0 / N)

    return ConsensusProjection(
        M=M, M_pinv=M_pinv, P=P, l=np.asarray(l, dtype=float), row_norm=float(row_norm), n=n,
        lifted=lifted, lifted_pinv=lifted_pinv,
    )


def projector(projection: ConsensusProjection) -> np.ndarray:
    """Row-space projector ``M⁺M``; independent of how the rows of M were chosen."""
    return projection.M_pinv @ projection.M
