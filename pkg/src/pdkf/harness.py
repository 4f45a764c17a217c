"""Monte-Carlo experiment driver and report emission.

A single master seed determines everything: the topology, the sensor
assignment, the selection schedule, and one trajectory stream per run
(derived as (seed, TAG_TRAJECTORY, r)).  Every (scheme, L) branch consumes
the identical observation ensemble, so differences between branches are
attributable to the selection policy alone.
"""
import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .analysis import (build_b_patterns, expected_b_kron, network_steady_state,
                       stability_report, theoretical_network_msd)
from .config import ExperimentConfig
from .exceptions import ConfigError, RiccatiConvergenceError, StabilityError
from .filters import NetworkFilter
from .network import Topology, generate_topology, uniform_weights, validate_weights
from .selection import SelectionSchedule, build_partition
from .statespace import SensorModel, sample_trajectory

# Sub-stream tags hung off the master seed.
TAG_TOPOLOGY = 0
TAG_SENSORS = 1
TAG_SELECTION = 2
TAG_TRAJECTORY = 3


def assign_sensors(topology, rng, h_types, noise_range=(0.0, 0.5), max_tries=10000):
    """Randomly assign one of two observation patterns per node.

    Assignments are rejection-sampled until every neighborhood contains both
    pattern types; noise covariances are sigma_k^2 I with sigma_k^2 uniform
    over noise_range.
    """
    N = topology.N
    for _ in range(max_tries):
        types = rng.integers(0, 2, size=N)
        ok = True
        for k in range(N):
            nbr_types = types[topology.neighbors(k)]
            if not (np.any(nbr_types == 0) and np.any(nbr_types == 1)):
                ok = False
                break
        if ok:
            lo, hi = noise_range
            sigma2 = rng.uniform(lo, hi, size=N)
            P_dim = h_types[0].shape[0]
            return tuple(SensorModel(H=h_types[types[k]], R=sigma2[k] * np.eye(P_dim))
                         for k in range(N))
    raise ConfigError(
        f"could not satisfy the both-pattern neighborhood constraint in {max_tries} tries")


def build_experiment(config):
    """Materialize (model, topology, sensors, weights) from a config."""
    if config.edges:
        topology = Topology.from_edges(config.n_nodes, config.edges)
    else:
        topology = generate_topology(config.n_nodes, config.avg_degree,
                                     seed=[config.seed, TAG_TOPOLOGY])
    rng = np.random.default_rng([config.seed, TAG_SENSORS])
    sensors = assign_sensors(topology, rng, config.h_types, config.noise_range)
    weights = uniform_weights(topology)
    violation = validate_weights(weights, topology)
    if violation is not None:
        raise ConfigError(f"combination weights invalid: {violation}")
    return config.model, topology, sensors, weights


def _selection_seed(master_seed):
    return int(np.random.SeedSequence([master_seed, TAG_SELECTION]).generate_state(1)[0])


@dataclass
class BranchResult:
    """Results for one (scheme, L) pair."""

    scheme: str
    L: int
    curve_msd: np.ndarray          # (T+1,) network MSD per iteration, linear
    msd_per_node_emp: np.ndarray   # (N,) window-averaged steady values
    msd_per_node_theory: object    # (N,) array or None when inapplicable
    theory_note: str
    rho_loop: float
    messages_per_iteration: int
    per_run_steady: np.ndarray     # (R,) window/node-averaged MSD per run
    final_mean_error: np.ndarray   # (N, M) ensemble-mean error at the last iteration

    @property
    def curve_db(self):
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(self.curve_msd)

    @property
    def steady_network_msd(self):
        return float(self.msd_per_node_emp.mean())


@dataclass
class MsdReport:
    config: ExperimentConfig
    topology_edges: list
    branches: list
    rho_F: float
    seed: int


def _simulate_branch(config, model, topology, sensors, weights, obs, states,
                     mode, scheme, L):
    N = topology.N
    R, T, W = config.runs, config.horizon, config.window
    schedule = SelectionSchedule(scheme=scheme if mode == "pdkf" else "sequential",
                                 partition=build_partition(model.M, L),
                                 shared_across_nodes=config.shared_masks,
                                 seed=_selection_seed(config.seed))
    filt = NetworkFilter(model, sensors, topology, weights,
                         schedule=schedule, mode=mode, n_runs=R)
    curve_nodes = np.empty((T + 1, N))
    steady_acc = np.zeros(R)
    final_mean_error = None
    for i in range(T + 1):
        filt.step([o[:, i, :] for o in obs], i)
        x = filt.x_filt                               # (N, R, M), R-run axis kept
        err = states[:, i, :] - x                     # broadcast to (N, R, M)
        sq = (err ** 2).sum(axis=-1)                  # (N, R)
        curve_nodes[i] = sq.mean(axis=1)
        if i > T - W:
            steady_acc += sq.mean(axis=0)
        if i == T:
            final_mean_error = err.mean(axis=1)
    return filt, schedule, BranchResult(
        scheme=scheme, L=L,
        curve_msd=curve_nodes.mean(axis=1),
        msd_per_node_emp=curve_nodes[T - W + 1:].mean(axis=0),
        msd_per_node_theory=None, theory_note="", rho_loop=float("nan"),
        messages_per_iteration=filt.messages_per_iteration,
        per_run_steady=steady_acc / W,
        final_mean_error=final_mean_error)


def _steady_or_none(model, sensors):
    """Own-data covariance fixed points, or None when they do not exist."""
    try:
        return network_steady_state(model, sensors, mode="own-data"), ""
    except RiccatiConvergenceError as exc:
        return None, f"inapplicable: {exc}"


def _attach_theory(branch, steady, topology, weights, partition, scheme):
    patterns = build_b_patterns(topology, weights, partition)
    bfrak = expected_b_kron(patterns, scheme)
    stab = stability_report(steady, bfrak)
    branch.rho_loop = stab.rho_loop
    if stab.rho_loop >= 1.0:
        branch.theory_note = f"inapplicable: rho_loop = {stab.rho_loop:.6f} >= 1"
        return
    try:
        theory = theoretical_network_msd(steady, bfrak)
    except StabilityError as exc:
        branch.theory_note = f"inapplicable: {exc}"
        return
    branch.msd_per_node_theory = theory.msd_per_node


def run_experiment(config, progress=False):
    """Run the full Monte-Carlo ensemble for every configured (scheme, L)."""
    model, topology, sensors, weights = build_experiment(config)
    N = topology.N
    R, T = config.runs, config.horizon

    trajectories = [sample_trajectory(model, sensors, T, seed=(config.seed, TAG_TRAJECTORY, r))
                    for r in range(R)]
    states = np.stack([t.states for t in trajectories])                 # (R, T+1, M)
    obs = [np.stack([t.observations[k] for t in trajectories]) for k in range(N)]
    del trajectories  # keep only the stacked ensemble views

    steady, steady_note = _steady_or_none(model, sensors)

    branches = []
    for L in config.L_values:
        if progress:
            print(f"  branch scheme={config.scheme} L={L} ...", flush=True)
        _, schedule, branch = _simulate_branch(
            config, model, topology, sensors, weights, obs, states,
            mode="pdkf", scheme=config.scheme, L=L)
        if steady is None:
            branch.theory_note = steady_note
        else:
            _attach_theory(branch, steady, topology, weights, schedule.partition,
                           config.scheme)
        branches.append(branch)

    if config.include_dkf:
        _, _, branch = _simulate_branch(
            config, model, topology, sensors, weights, obs, states,
            mode="dkf", scheme="dkf", L=model.M)
        branch.theory_note = "not computed for the data-sharing baseline"
        branches.append(branch)

    edges = [(int(u), int(v)) for u, v in zip(*np.nonzero(np.triu(topology.adjacency, 1)))]
    rho_F = model.spectral_radius()
    return MsdReport(config=config, topology_edges=edges, branches=branches,
                     rho_F=rho_F, seed=config.seed)


def theory_only(config):
    """Closed-form per-node MSD for every configured L, without simulation."""
    model, topology, sensors, weights = build_experiment(config)
    steady, _ = _steady_or_none(model, sensors)
    rows = []
    for L in config.L_values:
        if steady is None:
            rows.append((config.scheme, L, None, None))
            continue
        partition = build_partition(model.M, L)
        patterns = build_b_patterns(topology, weights, partition)
        bfrak = expected_b_kron(patterns, config.scheme)
        stab = stability_report(steady, bfrak)
        if stab.rho_loop >= 1.0:
            rows.append((config.scheme, L, stab, None))
            continue
        rows.append((config.scheme, L, stab, theoretical_network_msd(steady, bfrak)))
    return rows


def _db(value):
    with np.errstate(divide="ignore"):
        return float(10.0 * np.log10(value))


def _fmt(value):
    return repr(float(value))


def emit_report(report, outdir):
    """Write curves.csv, steady.csv, and meta.json; returns the paths written."""
    os.makedirs(outdir, exist_ok=True)
    paths = {}

    curves_path = os.path.join(outdir, "curves.csv")
    with open(curves_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scheme", "L", "iteration", "msd_db"])
        for br in report.branches:
            curve_db = br.curve_db
            for i in range(curve_db.shape[0]):
                writer.writerow([br.scheme, br.L, i, _fmt(curve_db[i])])
    paths["curves"] = curves_path

    steady_path = os.path.join(outdir, "steady.csv")
    with open(steady_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scheme", "L", "node", "msd_emp_db", "msd_theory_db"])
        for br in report.branches:
            for k in range(br.msd_per_node_emp.shape[0]):
                if br.msd_per_node_theory is not None:
                    theory = _fmt(_db(br.msd_per_node_theory[k]))
                else:
                    theory = "inapplicable"
                writer.writerow([br.scheme, br.L, k, _fmt(_db(br.msd_per_node_emp[k])), theory])
    paths["steady"] = steady_path

    meta_path = os.path.join(outdir, "meta.json")
    meta = {
        "seed": report.seed,
        "config": {k: str(v) for k, v in report.config.raw.items()},
        "topology_edges": report.topology_edges,
        "rho_F": report.rho_F,
        "branches": [
            {
                "scheme": br.scheme,
                "L": br.L,
                "messages_per_iteration": br.messages_per_iteration,
                "rho_loop": None if np.isnan(br.rho_loop) else br.rho_loop,
                "theory_note": br.theory_note,
                "steady_network_msd_db": _db(br.steady_network_msd),
            }
            for br in report.branches
        ],
    }
    try:
        with open(meta_path, "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"failed writing report to {meta_path}: {exc}") from exc
    paths["meta"] = meta_path
    return paths
