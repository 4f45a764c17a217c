"""Linear dynamic model, per-node sensors, and trajectory sampling.

The global process is x_{i+1} = F x_i + G n_i with n_i ~ N(0, Q), and each
node observes y_{k,i} = H_k x_i + v_{k,i} with v_{k,i} ~ N(0, R_k).  All
noises are mutually independent across time and nodes and independent of the
random initial state x_0 ~ N(0, Pi0).
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .exceptions import DimensionError
from .linalg import check_vector, is_symmetric, spectral_radius, sym_sqrt


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    """Time-invariant linear dynamics.

    Parameters
    ----------
    F : ndarray [M, M]
        State transition matrix.
    G : ndarray [M, M]
        State-noise gain matrix.
    Q : ndarray [M, M]
        State-noise covariance, symmetric PSD.
    Pi0 : ndarray [M, M]
        Initial-state covariance, symmetric PD.
    """

    F: np.ndarray
    G: np.ndarray
    Q: np.ndarray
    Pi0: np.ndarray

    def __post_init__(self):
        for name in ("F", "G", "Q", "Pi0"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        M = self.F.shape[0]
        for name in ("F", "G", "Q", "Pi0"):
            if getattr(self, name).shape != (M, M):
                raise DimensionError(f"{name} must be {M}x{M}, got {getattr(self, name).shape}")
        if not is_symmetric(self.Q):
            raise ValueError("Q must be symmetric")
        if not is_symmetric(self.Pi0):
            raise ValueError("Pi0 must be symmetric")
        if np.min(np.linalg.eigvalsh(self.Pi0)) <= 0:
            raise ValueError("Pi0 must be positive definite")
        # PSD check for Q happens in sym_sqrt on first use, but fail early here
        sym_sqrt(self.Q, "Q")

    @property
    def M(self):
        """State dimension."""
        return self.F.shape[0]

    @cached_property
    def q_factor(self):
        """Symmetric square root of Q, used for noise draws."""
        return sym_sqrt(self.Q, "Q")

    @cached_property
    def pi0_factor(self):
        return sym_sqrt(self.Pi0, "Pi0")

    def spectral_radius(self):
        return spectral_radius(self.F)

    def is_stable(self):
        """True when all eigenvalues of F lie strictly inside the unit circle."""
        return self.spectral_radius() < 1.0


@dataclass(frozen=True, eq=False)
class SensorModel:
    """One node's observation model y = H x + v, v ~ N(0, R)."""

    H: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "H", np.asarray(self.H, dtype=float))
        object.__setattr__(self, "R", np.asarray(self.R, dtype=float))
        P_dim = self.H.shape[0]
        if self.R.shape != (P_dim, P_dim):
            raise DimensionError(f"R must be {P_dim}x{P_dim}, got {self.R.shape}")
        if not is_symmetric(self.R):
            raise ValueError("R must be symmetric")
        sym_sqrt(self.R, "R")

    @property
    def P_dim(self):
        """Observation dimension."""
        return self.H.shape[0]

    @property
    def M(self):
        return self.H.shape[1]

    @cached_property
    def r_factor(self):
        return sym_sqrt(self.R, "R")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A sampled ground-truth path with per-node noisy observations.

    states[i + 1] == F @ states[i] + G @ process_noise[i] holds exactly for
    the recorded draws.
    """

    states: np.ndarray            # (T+1, M)
    observations: tuple           # per node, (T+1, P_k)
    process_noise: np.ndarray     # (T, M)
    seed: object

    @property
    def horizon(self):
        return self.states.shape[0] - 1


def simulate_step(model, x, rng):
    """Advance the true state one step: F x + G n, n ~ N(0, Q).

    Exactly M standard-normal draws are consumed from `rng`.
    """
    x = check_vector(x, model.M, "state")
    n = model.q_factor @ rng.standard_normal(model.M)
    return model.F @ x + model.G @ n


def observe(sensor, x, rng):
    """Measure the state through one sensor: H x + v, v ~ N(0, R)."""
    x = check_vector(x, sensor.M, "state")
    v = sensor.r_factor @ rng.standard_normal(sensor.P_dim)
    return sensor.H @ x + v


def sample_trajectory(model, sensors, T, seed, x0=None):
    """Sample a length-T trajectory and per-node observation sequences.

    Draw order is fixed for reproducibility: x_0 (skipped when `x0` is
    supplied), then the (T, M) process-noise block, then one observation
    noise block per node in node order.  Identical inputs give a
    bitwise-identical Trajectory.

    Parameters
    ----------
    sensors : sequence of SensorModel
        One per node.
    T : int
        Number of transitions; the state sequence has T+1 entries.
    seed : int or sequence of int
        Passed to numpy's default_rng.
    x0 : ndarray [M], optional
        Deterministic initial state overriding the N(0, Pi0) draw.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    M = model.M
    for k, s in enumerate(sensors):
        if s.M != M:
            raise DimensionError(f"sensor {k} expects state dimension {s.M}, model has {M}")
    rng = np.random.default_rng(seed)

    if x0 is None:
        x0 = model.pi0_factor @ rng.standard_normal(M)
    else:
        x0 = check_vector(x0, M, "x0")

    noise = rng.standard_normal((T, M)) @ model.q_factor.T
    states = np.empty((T + 1, M))
    states[0] = x0
    for i in range(T):
        states[i + 1] = model.F @ states[i] + model.G @ noise[i]

    observations = []
    for s in sensors:
        v = rng.standard_normal((T + 1, s.P_dim)) @ s.r_factor.T
        observations.append(states @ s.H.T + v)

    return Trajectory(states=states, observations=tuple(observations),
                      process_noise=noise, seed=seed)
