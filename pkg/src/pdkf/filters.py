"""Per-node Kalman recursions and one synchronized network step.

Two cooperation modes match the two algorithms under study:

* "dkf": nodes share raw data (y, H, R) with neighbors, run the incremental
  measurement loop over the whole neighborhood, then convex-combine the full
  intermediate estimates.
* "pdkf": nodes update with their own data only and combine the masked
  entries received from neighbors, substituting their own entries for the
  ones that were not transmitted.

"pdkf-convex" (own-data update + full convex combination) and
"noncooperative" (no combination at all) are the limiting baselines.

All state-vector operations broadcast over an optional leading run axis, so
a NetworkFilter can advance a whole Monte-Carlo ensemble in lockstep; the
covariance recursions are data-independent and therefore shared across runs.
"""
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, DimensionError, FilterNumericsError
from .linalg import symmetrize
from .selection import mask_at

MODES = ("dkf", "pdkf", "pdkf-convex", "noncooperative")


def measurement_update(psi, P, y, sensor):
    """One measurement update with innovation covariance Re = R + H P H'.

    psi may carry leading batch axes; P is shared across the batch (the
    covariance recursion never sees data).  Returns (psi', P') with P'
    symmetrized.
    """
    H, R = sensor.H, sensor.R
    psi = np.asarray(psi, dtype=float)
    y = np.asarray(y, dtype=float)
    if psi.shape[-1] != H.shape[1] or y.shape[-1] != H.shape[0]:
        raise DimensionError(
            f"psi/y trailing dims {psi.shape[-1]}/{y.shape[-1]} do not match H {H.shape}")
    Re = R + H @ P @ H.T
    try:
        gain = np.linalg.solve(Re, H @ P).T  # equals P H' Re^-1 (P, Re symmetric)
    except np.linalg.LinAlgError as exc:
        raise FilterNumericsError(f"innovation covariance singular: {exc}") from exc
    if not np.all(np.isfinite(gain)):
        raise FilterNumericsError("non-finite Kalman gain (ill-conditioned Re)")
    innovation = y - psi @ H.T
    psi_new = psi + innovation @ gain.T
    P_new = symmetrize(P - gain @ H @ P)
    return psi_new, P_new


def dkf_incremental(x_pred, P_pred, neighbor_data):
    """Sequential measurement updates over a node's neighborhood.

    neighbor_data is an ordered sequence of (y, sensor) pairs; callers order
    it by ascending node index so floating-point results are reproducible.
    """
    psi, P = np.asarray(x_pred, dtype=float), P_pred
    for y, sensor in neighbor_data:
        psi, P = measurement_update(psi, P, y, sensor)
    return psi, P


def pdkf_adaptation(x_pred, P_pred, y, sensor):
    """Own-data-only measurement update (no raw data exchange)."""
    return measurement_update(x_pred, P_pred, y, sensor)


def combine_dkf(neighbor_psi, weights):
    """Convex combination sum_l c_l psi_l over the whole neighborhood."""
    neighbor_psi = list(neighbor_psi)
    if len(neighbor_psi) != len(weights):
        raise DimensionError("one weight per neighbor estimate required")
    out = np.zeros_like(np.asarray(neighbor_psi[0], dtype=float))
    for psi_l, c in zip(neighbor_psi, weights):
        out = out + c * np.asarray(psi_l, dtype=float)
    return out


def combine_pdkf(psi_own, neighbor_psi, masks, weights):
    """Masked combination: psi_k + sum_{l != k} c_l T_l (psi_l - psi_k).

    Entries a neighbor did not transmit are implicitly replaced by the
    node's own intermediate estimate.  neighbor_psi / masks / weights cover
    the neighborhood excluding the node itself.
    """
    psi_own = np.asarray(psi_own, dtype=float)
    neighbor_psi = list(neighbor_psi)
    if not (len(neighbor_psi) == len(masks) == len(weights)):
        raise DimensionError("neighbor estimates, masks, and weights must align")
    out = psi_own.copy()
    for psi_l, mask, c in zip(neighbor_psi, masks, weights):
        if mask.M != psi_own.shape[-1]:
            raise DimensionError(f"mask length {mask.M} != state dimension {psi_own.shape[-1]}")
        out = out + c * (mask.bits * (np.asarray(psi_l, dtype=float) - psi_own))
    return out


def combine_pdkf_substitution(psi_own, c_own, neighbor_psi, masks, weights):
    """Equivalent substitution form: c_k psi_k + sum c_l [T_l psi_l + (I - T_l) psi_k].

    Algebraically identical to combine_pdkf whenever the weights sum to one;
    kept as the independent second route for the identity check.
    """
    psi_own = np.asarray(psi_own, dtype=float)
    out = c_own * psi_own
    for psi_l, mask, c in zip(neighbor_psi, masks, weights):
        psi_l = np.asarray(psi_l, dtype=float)
        out = out + c * (mask.bits * psi_l + (~mask.bits) * psi_own)
    return out


def time_update(x_filt, P_filt, model):
    """Propagate through the dynamics: x' = F x, P' = F P F' + G Q G'."""
    x_pred = np.asarray(x_filt, dtype=float) @ model.F.T
    P_pred = symmetrize(model.F @ P_filt @ model.F.T + model.G @ model.Q @ model.G.T)
    return x_pred, P_pred


@dataclass(frozen=True, eq=False)
class NodeFilterState:
    """Snapshot of one node's filter variables."""

    x_pred: np.ndarray
    P_pred: np.ndarray
    psi: np.ndarray
    P_filt: np.ndarray
    x_filt: np.ndarray


class NetworkFilter:
    """All nodes' filter state plus one synchronized step of the chosen mode.

    With n_runs > 1 the state vectors carry a run axis and the filter
    advances the whole ensemble at once; covariances are shared because they
    are data-free.  All nodes advance in lockstep.
    """

    def __init__(self, model, sensors, topology, weights, schedule=None,
                 mode="pdkf", n_runs=1):
        if mode not in MODES:
            raise ConfigError(f"unknown filter mode {mode!r}")
        if len(sensors) != topology.N:
            raise DimensionError(f"{len(sensors)} sensors for {topology.N} nodes")
        if mode == "pdkf" and schedule is None:
            raise ConfigError("pdkf mode requires a selection schedule")
        if schedule is not None and schedule.partition.M != model.M:
            raise DimensionError("schedule partition size does not match state dimension")
        self.model = model
        self.sensors = tuple(sensors)
        self.topology = topology
        self.weights = weights
        self.schedule = schedule
        self.mode = mode
        self.n_runs = int(n_runs)
        N, M = topology.N, model.M
        self.iteration = 0
        self.x_pred = np.zeros((N, self.n_runs, M))
        self.P_pred = np.stack([model.Pi0.copy() for _ in range(N)])
        self.psi = np.zeros((N, self.n_runs, M))
        self.P_filt = self.P_pred.copy()
        self.x_filt = np.zeros((N, self.n_runs, M))
        self._neighbors = [topology.neighbors(k) for k in range(N)]

    @property
    def N(self):
        return self.topology.N

    def node_state(self, k):
        """Per-node snapshot; run axis dropped for single-run filters."""
        sq = (lambda a: a[0]) if self.n_runs == 1 else (lambda a: a)
        return NodeFilterState(
            x_pred=sq(self.x_pred[k]).copy(), P_pred=self.P_pred[k].copy(),
            psi=sq(self.psi[k]).copy(), P_filt=self.P_filt[k].copy(),
            x_filt=sq(self.x_filt[k]).copy())

    @property
    def messages_per_iteration(self):
        """Scalars transmitted per iteration across all links."""
        links = sum(len(nbrs) - 1 for nbrs in self._neighbors)
        if self.mode == "noncooperative":
            return 0
        if self.mode == "pdkf":
            return links * self.schedule.partition.L
        return links * self.model.M

    def _obs(self, observations, k):
        y = np.asarray(observations[k], dtype=float)
        if y.ndim == 1:
            if self.n_runs != 1:
                raise DimensionError("batched filter needs observations with a run axis")
            y = y[None, :]
        if y.shape != (self.n_runs, self.sensors[k].P_dim):
            raise DimensionError(
                f"node {k} observations have shape {y.shape}, "
                f"expected {(self.n_runs, self.sensors[k].P_dim)}")
        return y

    def step(self, observations, iteration=None):
        """Run adaptation, combination, and time update for every node.

        observations: per-node array, shape (N, P_k) or (N, n_runs, P_k)
        (indexable per node; ragged P_k allowed via a list).  Returns the
        per-node filtered estimates, run axis dropped when n_runs == 1.
        """
        i = self.iteration
        if iteration is not None and iteration != i:
            raise ValueError(f"lockstep violation: filter is at iteration {i}, got {iteration}")
        N = self.N

        # Step 1: intermediate estimates (reads only per-node predicted state).
        for k in range(N):
            try:
                if self.mode == "dkf":
                    data = [(self._obs(observations, l), self.sensors[l])
                            for l in self._neighbors[k]]
                    psi, P = dkf_incremental(self.x_pred[k], self.P_pred[k], data)
                else:
                    psi, P = pdkf_adaptation(self.x_pred[k], self.P_pred[k],
                                             self._obs(observations, k), self.sensors[k])
            except FilterNumericsError as exc:
                raise FilterNumericsError(f"node {k}, iteration {i}: {exc}") from exc
            self.psi[k] = psi
            self.P_filt[k] = P

        # Step 2: combination, consuming the complete psi snapshot.
        if self.mode == "pdkf":
            masks = [mask_at(self.schedule, l, i) for l in range(N)]
        for k in range(N):
            nbrs = self._neighbors[k]
            if self.mode == "noncooperative":
                self.x_filt[k] = self.psi[k]
            elif self.mode == "pdkf":
                others = [l for l in nbrs if l != k]
                self.x_filt[k] = combine_pdkf(
                    self.psi[k], [self.psi[l] for l in others],
                    [masks[l] for l in others],
                    [self.weights.C[l, k] for l in others])
            else:  # dkf or pdkf-convex: full convex combination
                self.x_filt[k] = combine_dkf(
                    [self.psi[l] for l in nbrs], [self.weights.C[l, k] for l in nbrs])

        # Step 3: time update.
        for k in range(N):
            self.x_pred[k], self.P_pred[k] = time_update(
                self.x_filt[k], self.P_filt[k], self.model)

        self.iteration = i + 1
        out = self.x_filt.copy()
        return out[:, 0, :] if self.n_runs == 1 else out


def network_step(filt, observations, iteration, truth=None):
    """One synchronized step; optionally also return errors truth - estimate."""
    x_filt = filt.step(observations, iteration)
    errors = None
    if truth is not None:
        errors = np.asarray(truth, dtype=float) - x_filt
    return x_filt, errors
