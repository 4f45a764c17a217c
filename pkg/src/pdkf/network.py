"""Node graph, neighborhoods, and combination coefficients.

The combination matrix C stores c[l, k]: the weight node k applies to
neighbor l's intermediate estimate.  The constraint is per destination k:
sum_l c[l, k] = 1 with c[l, k] = 0 off the neighborhood.
"""
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, DimensionError


@dataclass(frozen=True, eq=False)
class Topology:
    """Undirected node graph; every node is its own neighbor."""

    adjacency: np.ndarray  # (N, N) bool, symmetric, True diagonal

    def __post_init__(self):
        A = np.asarray(self.adjacency, dtype=bool)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionError("adjacency must be square")
        if not np.array_equal(A, A.T):
            raise ValueError("adjacency must be symmetric")
        if not np.all(np.diag(A)):
            raise ValueError("adjacency diagonal must be all True (self-inclusion)")
        object.__setattr__(self, "adjacency", A)

    @property
    def N(self):
        return self.adjacency.shape[0]

    def neighbors(self, k):
        """Sorted neighbor indices of node k, including k itself."""
        return np.flatnonzero(self.adjacency[k])

    def degree(self, k):
        """Number of neighbors excluding the node itself."""
        return int(self.adjacency[k].sum()) - 1

    def is_connected(self):
        N = self.N
        seen = np.zeros(N, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            u = stack.pop()
            for v in np.flatnonzero(self.adjacency[u]):
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
        return bool(seen.all())

    @classmethod
    def from_edges(cls, N, edges):
        """Build from an explicit undirected edge list of (u, v) pairs."""
        A = np.eye(N, dtype=bool)
        for u, v in edges:
            if not (0 <= u < N and 0 <= v < N):
                raise ConfigError(f"edge ({u}, {v}) out of range for N={N}")
            A[u, v] = A[v, u] = True
        return cls(A)


@dataclass(frozen=True, eq=False)
class CombinationWeights:
    """Nonnegative combination coefficients, column-stochastic in c[l, k]."""

    C: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "C", np.asarray(self.C, dtype=float))

    @property
    def N(self):
        return self.C.shape[0]

    def column(self, k):
        return self.C[:, k]


@dataclass(frozen=True)
class WeightViolation:
    """First constraint violation found by validate_weights."""

    kind: str       # "negative" | "sum" | "sparsity" | "shape"
    l: int
    k: int
    detail: str


def generate_topology(N, avg_degree, seed, require_connected=True, max_tries=10000):
    """Random Erdos-Renyi topology with expected off-diagonal degree avg_degree.

    Edge probability is avg_degree / (N - 1); sampling is rejected until the
    graph is connected when `require_connected` is set.  Deterministic in
    (N, avg_degree, seed).
    """
    if N < 1:
        raise ConfigError("N must be >= 1")
    if N == 1:
        return Topology(np.ones((1, 1), dtype=bool))
    if not 0 <= avg_degree <= N - 1:
        raise ConfigError(f"avg_degree must be in [0, {N - 1}], got {avg_degree}")
    if require_connected and avg_degree == 0 and N > 1:
        raise ConfigError("a connected graph needs avg_degree > 0")

    p = avg_degree / (N - 1)
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        upper = rng.random((N, N)) < p
        A = np.triu(upper, 1)
        A = A | A.T | np.eye(N, dtype=bool)
        topo = Topology(A)
        if not require_connected or topo.is_connected():
            return topo
    raise ConfigError(
        f"failed to draw a connected graph with N={N}, avg_degree={avg_degree} "
        f"after {max_tries} tries")


def uniform_weights(topology):
    """c[l, k] = 1 / |N_k| for l in N_k, else 0."""
    A = topology.adjacency.astype(float)
    return CombinationWeights(A / A.sum(axis=0, keepdims=True))


def validate_weights(weights, topology, tol=1e-12):
    """Check Eq.-style weight constraints; return None or the first violation."""
    C = weights.C
    N = topology.N
    if C.shape != (N, N):
        return WeightViolation("shape", -1, -1, f"C has shape {C.shape}, expected {(N, N)}")
    for k in range(N):
        for l in range(N):
            if C[l, k] < -tol:
                return WeightViolation("negative", l, k, f"c[{l},{k}] = {C[l, k]:g} < 0")
            if not topology.adjacency[l, k] and abs(C[l, k]) > tol:
                return WeightViolation(
                    "sparsity", l, k, f"c[{l},{k}] = {C[l, k]:g} but {l} is not a neighbor of {k}")
        s = C[:, k].sum()
        if abs(s - 1.0) > max(tol, 1e-9):
            return WeightViolation("sum", -1, k, f"column {k} sums to {s!r}, expected 1")
    return None
