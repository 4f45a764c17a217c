"""Steady-state analysis: Riccati fixed points, augmented network operators,
the averaged Kronecker combination operator, and the closed-form MSD.

The network error obeys, once the per-node covariances have converged,

    e_i = B_i Ftil e_{i-1} + B_i Gtil (1 (x) n_{i-1}) - B_i Dtil v_i

with per-node blocks Ftil_k = (I - K_k H_k) F, Gtil_k = (I - K_k H_k) G and
Dtil_k = K_k built from the steady Kalman gain K_k = P-_k H_k' Re_k^-1.  The
steady error covariance Sigma solves the averaged Lyapunov relation

    vec(Sigma) = (I - E[B (x) B] (Ftil (x) Ftil))^-1 E[B (x) B] vec(K + L)

with K = Dtil R Dtil' and L = Gtil (1 1' (x) Q) Gtil'; the network MSD is
tr(Sigma) / N and the per-node values are the diagonal-block traces.
"""
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError, RiccatiConvergenceError, StabilityError
from .linalg import spectral_radius, symmetrize
from .selection import SEQUENTIAL
from .statespace import SensorModel

#: largest MN for which the vectorized (MN)^2 system is solved directly
DIRECT_SOLVE_MAX_DIM = 64


def _covariance_update(P, sensor):
    H, R = sensor.H, sensor.R
    Re = R + H @ P @ H.T
    gain = np.linalg.solve(Re, H @ P).T
    return symmetrize(P - gain @ H @ P)


def solve_riccati(model, sensors, tol=1e-12, max_iter=100000):
    """Iterate the coupled covariance recursion from Pi0 to its fixed point.

    sensors: a single SensorModel (own-data mode, matching the partial
    filter's adaptation) or a sequence applied in ascending order
    (neighborhood-data mode, matching the data-sharing filter).

    Returns (P_pred, P_filt), the predicted/filtered steady covariances.
    Raises RiccatiConvergenceError with the last Frobenius delta when the
    recursion does not settle within max_iter.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    sensor_list = [sensors] if isinstance(sensors, SensorModel) else list(sensors)
    F, G, Q = model.F, model.G, model.Q
    GQG = G @ Q @ G.T
    P_pred = model.Pi0.copy()
    delta = np.inf
    plateau_ref = None
    for i in range(max_iter):
        P = P_pred
        for s in sensor_list:
            P = _covariance_update(P, s)
        P_next = symmetrize(F @ P @ F.T + GQG)
        delta = np.linalg.norm(P_next - P_pred)
        P_pred = P_next
        if delta < tol:
            return P_pred, P
        # A delta that stops shrinking while still far above tol marks a
        # covariance growing without bound (undetectable non-contractive
        # modes); bail out instead of burning the full iteration budget.
        if i % 1000 == 999:
            if plateau_ref is not None and delta > 0.999 * plateau_ref:
                raise RiccatiConvergenceError(
                    f"covariance recursion diverges (delta plateaued at "
                    f"{delta:.3e} after {i + 1} iterations)", last_delta=delta)
            plateau_ref = delta
    raise RiccatiConvergenceError(
        f"covariance recursion did not converge in {max_iter} iterations "
        f"(last delta {delta:.3e})", last_delta=delta)


@dataclass(frozen=True, eq=False)
class SteadyState:
    """Per-node covariance limits and the stacked network operators."""

    model: object
    sensors: tuple
    P_pred: np.ndarray   # (N, M, M) predicted-covariance fixed points
    P_filt: np.ndarray   # (N, M, M) filtered-covariance fixed points
    gains: np.ndarray    # (N, M, P) steady Kalman gains
    S: np.ndarray        # (N, M, M) information-like H' Re^-1 H
    Fcal: np.ndarray     # (MN, MN)
    Gcal: np.ndarray     # (MN, MN)
    Dcal: np.ndarray     # (MN, sum P_k) block diagonal of gains
    Scal: np.ndarray
    Pcal: np.ndarray     # block diagonal of filtered covariances
    Rcal: np.ndarray     # block diagonal of measurement covariances

    @property
    def N(self):
        return self.P_pred.shape[0]


def network_steady_state(model, sensors, topology=None, mode="own-data",
                         tol=1e-12, max_iter=100000):
    """Solve every node's Riccati fixed point and assemble the stacked operators.

    mode "own-data" updates each node with its own sensor only (the partial
    filter's covariance recursion); "neighborhood-data" uses all neighbor
    sensors in ascending order and requires `topology`.
    """
    sensors = tuple(sensors)
    N, M = len(sensors), model.M
    if mode not in ("own-data", "neighborhood-data"):
        raise ValueError(f"unknown riccati mode {mode!r}")
    if mode == "neighborhood-data" and topology is None:
        raise ValueError("neighborhood-data mode requires a topology")

    P_pred = np.empty((N, M, M))
    P_filt = np.empty((N, M, M))
    gains, S = [], []
    for k in range(N):
        if mode == "own-data":
            node_sensors = sensors[k]
        else:
            node_sensors = [sensors[l] for l in topology.neighbors(k)]
        P_pred[k], P_filt[k] = solve_riccati(model, node_sensors, tol=tol, max_iter=max_iter)
        # Steady gain and S from the node's OWN sensor (the combination-phase
        # error recursion only involves the adaptation step).
        H, R = sensors[k].H, sensors[k].R
        Re = R + H @ P_pred[k] @ H.T
        K = np.linalg.solve(Re, H @ P_pred[k]).T
        gains.append(K)
        S.append(H.T @ np.linalg.solve(Re, H))
    gains = np.stack(gains)
    S = np.stack(S)

    F, G = model.F, model.G
    Fcal = _blockdiag([(np.eye(M) - gains[k] @ sensors[k].H) @ F for k in range(N)])
    Gcal = _blockdiag([(np.eye(M) - gains[k] @ sensors[k].H) @ G for k in range(N)])
    Dcal = _blockdiag(list(gains))
    Scal = _blockdiag(list(S))
    Pcal = _blockdiag(list(P_filt))
    Rcal = _blockdiag([s.R for s in sensors])
    return SteadyState(model=model, sensors=sensors, P_pred=P_pred, P_filt=P_filt,
                       gains=gains, S=S, Fcal=Fcal, Gcal=Gcal, Dcal=Dcal,
                       Scal=Scal, Pcal=Pcal, Rcal=Rcal)


def _blockdiag(blocks):
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols))
    r = c = 0
    for b in blocks:
        out[r:r + b.shape[0], c:c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out


def build_b_patterns(topology, weights, partition):
    """One stacked combination matrix per subset, for shared schedules.

    For subset tau with mask t: diagonal block of node p is
    I - sum_{l in N_p \\ {p}} c_lp diag(t); block (p, q) is c_qp diag(t) for
    neighbors q != p; zero elsewhere.  Every block row sums to the identity.
    L = 0 yields the single pattern I (no mixing).
    """
    N = topology.N
    M = partition.M
    C = weights.C
    if partition.L == 0:
        return [np.eye(M * N)]
    patterns = []
    for sub in partition.subsets:
        t = np.zeros(M)
        t[list(sub)] = 1.0
        T = np.diag(t)
        B = np.zeros((M * N, M * N))
        for p in range(N):
            others = [l for l in topology.neighbors(p) if l != p]
            diag = np.eye(M) - sum(C[l, p] for l in others) * T
            B[p * M:(p + 1) * M, p * M:(p + 1) * M] = diag
            for q in others:
                B[p * M:(p + 1) * M, q * M:(q + 1) * M] = C[q, p] * T
        patterns.append(B)
    return patterns


@dataclass(frozen=True, eq=False)
class BfrakOperator:
    """Average of the Kronecker self-products of the combination patterns.

    Both schemes select every subset equally often (the sequential cycle
    deterministically, the stochastic scheme uniformly), so they share the
    same average.
    """

    bfrak: np.ndarray    # mean of B'(tau) (x) B(tau)
    patterns: tuple
    scheme: str

    def mean_kron_plain(self):
        """Mean of B(tau) (x) B(tau), the operator propagating vec(covariance)."""
        return sum(np.kron(B, B) for B in self.patterns) / len(self.patterns)


def expected_b_kron(patterns, scheme=SEQUENTIAL):
    """Average B'(tau) (x) B(tau) over the subset cycle."""
    patterns = tuple(np.asarray(B, dtype=float) for B in patterns)
    if not patterns:
        raise ValueError("patterns must be nonempty")
    bfrak = sum(np.kron(B.T, B) for B in patterns) / len(patterns)
    return BfrakOperator(bfrak=bfrak, patterns=patterns, scheme=scheme)


@dataclass(frozen=True, eq=False)
class MsdTheory:
    """Closed-form steady-state mean-square deviation."""

    K: np.ndarray
    Lmat: np.ndarray
    msd_network: float
    msd_per_node: np.ndarray
    spectral_radius: float


def _noise_injection(steady):
    N = steady.N
    Q = steady.model.Q
    K = steady.Dcal @ steady.Rcal @ steady.Dcal.T
    Lmat = steady.Gcal @ np.kron(np.ones((N, N)), Q) @ steady.Gcal.T
    return K, Lmat


def theoretical_network_msd(steady, bfrak_op, rho_tol=1.0):
    """Evaluate the closed-form steady-state MSD from the averaged Lyapunov relation.

    Raises StabilityError (reporting the spectral radius) when the averaged
    closed loop is not contractive, in which case the steady-state expression
    does not exist.
    """
    K, Lmat = _noise_injection(steady)
    inject = K + Lmat
    N = steady.N
    M = steady.model.M
    MN = M * N
    patterns = bfrak_op.patterns

    if MN <= DIRECT_SOLVE_MAX_DIM:
        Bhat = bfrak_op.mean_kron_plain()
        A = Bhat @ np.kron(steady.Fcal, steady.Fcal)
        rho = spectral_radius(A)
        if rho >= rho_tol:
            raise StabilityError(
                f"averaged closed loop unstable (spectral radius {rho:.6f})",
                spectral_radius=rho)
        rhs = Bhat @ inject.reshape(-1, order="F")
        z = np.linalg.solve(np.eye(MN * MN) - A, rhs)
        Sigma = z.reshape((MN, MN), order="F")
    else:
        # Matrix-space fixed point, avoiding the (MN)^2 Kronecker assembly.
        Sigma, rho = _iterate_lyapunov(steady.Fcal, patterns, inject)
        if rho >= rho_tol:
            raise StabilityError(
                f"averaged closed loop unstable (estimated spectral radius {rho:.6f})",
                spectral_radius=rho)

    per_node = np.array([np.trace(Sigma[k * M:(k + 1) * M, k * M:(k + 1) * M])
                         for k in range(N)])
    rho_report = rho
    return MsdTheory(K=K, Lmat=Lmat, msd_network=float(per_node.mean()),
                     msd_per_node=per_node, spectral_radius=float(rho_report))


def _iterate_lyapunov(Fcal, patterns, inject, tol=1e-13, max_iter=100000):
    def step(S):
        inner = Fcal @ S @ Fcal.T + inject
        return sum(B @ inner @ B.T for B in patterns) / len(patterns)

    Sigma = np.zeros_like(inject)
    prev_delta = None
    rho_est = 0.0
    for _ in range(max_iter):
        nxt = step(Sigma)
        delta = np.linalg.norm(nxt - Sigma)
        if prev_delta not in (None, 0.0):
            rho_est = max(rho_est, min(delta / prev_delta, 1.5))
        if prev_delta is not None and delta > prev_delta and delta > 1e6:
            return Sigma, 1.0 + delta  # clearly diverging
        Sigma = nxt
        if delta < tol * max(1.0, np.linalg.norm(Sigma)):
            return Sigma, rho_est
        prev_delta = delta
    raise RiccatiConvergenceError("Lyapunov fixed-point iteration did not converge",
                                  last_delta=prev_delta)


@dataclass(frozen=True)
class StabilityReport:
    rho_F: float
    rho_loop: float
    stable: bool


def stability_report(steady, bfrak_op):
    """Spectral radii of the model and of the averaged error loop."""
    rho_F = spectral_radius(steady.model.F)
    MN = steady.Fcal.shape[0]
    if MN <= DIRECT_SOLVE_MAX_DIM:
        A = bfrak_op.mean_kron_plain() @ np.kron(steady.Fcal, steady.Fcal)
        rho_loop = spectral_radius(A)
    else:
        rho_loop = _power_iteration_rho(steady.Fcal, bfrak_op.patterns)
    return StabilityReport(rho_F=rho_F, rho_loop=rho_loop,
                           stable=bool(rho_F < 1.0 and rho_loop < 1.0))


def _power_iteration_rho(Fcal, patterns, iters=500, seed=0):
    # Power iteration on the symmetric-matrix-space map; its spectral radius
    # matches the vectorized operator's on the relevant invariant subspace.
    rng = np.random.default_rng(seed)
    MN = Fcal.shape[0]
    X = symmetrize(rng.standard_normal((MN, MN)))
    rho = 0.0
    for _ in range(iters):
        inner = Fcal @ X @ Fcal.T
        Y = sum(B @ inner @ B.T for B in patterns) / len(patterns)
        norm = np.linalg.norm(Y)
        if norm == 0:
            return 0.0
        rho = norm / np.linalg.norm(X)
        X = Y / norm
    return rho
