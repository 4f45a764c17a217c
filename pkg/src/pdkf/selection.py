"""Entry-selection schedules for partial diffusion.

A partition splits the M state entries into ceil(M / L) disjoint subsets of
at most L entries each.  At every iteration each node transmits the entries
of one subset, chosen either cyclically (sequential scheme) or in a random
order that is re-drawn every cycle (stochastic scheme).  Because the random
order is balanced over each cycle, every subset is still selected uniformly
at each iteration, and all nodes can derive the choice from a shared
counter-based stream: no addressing side channel is needed.
"""
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, DimensionError

SEQUENTIAL = "sequential"
STOCHASTIC = "stochastic"
SCHEMES = (SEQUENTIAL, STOCHASTIC)


@dataclass(frozen=True)
class Partition:
    """Disjoint index subsets covering {0..M-1}, each of size <= L.

    L = 0 is the no-cooperation sentinel: no subsets, all-zero masks.
    """

    M: int
    L: int
    subsets: tuple  # tuple of tuples of int

    @property
    def omega(self):
        """Number of subsets in one selection cycle (1 when L = 0)."""
        return max(len(self.subsets), 1)

    def __post_init__(self):
        seen = set()
        for sub in self.subsets:
            if not 1 <= len(sub) <= max(self.L, 1):
                raise ValueError(f"subset {sub} has size outside [1, L]")
            if seen & set(sub):
                raise ValueError("subsets must be pairwise disjoint")
            seen.update(sub)
        if self.L > 0 and seen != set(range(self.M)):
            raise ValueError("subsets must cover {0..M-1}")


@dataclass(frozen=True, eq=False)
class SelectionMask:
    """Which entries a node transmits at one iteration."""

    bits: np.ndarray  # (M,) bool

    def __post_init__(self):
        object.__setattr__(self, "bits", np.asarray(self.bits, dtype=bool))

    @property
    def M(self):
        return self.bits.shape[0]

    def count(self):
        return int(self.bits.sum())


@dataclass(frozen=True)
class SelectionSchedule:
    """Scheme + partition + seed; masks are a pure function of the iteration.

    With shared_across_nodes (the default) every node selects the same subset
    at every iteration, so receivers always know which entries arrived.  The
    per-node mode draws independently per node and exists for
    experimentation only.
    """

    scheme: str
    partition: Partition
    shared_across_nodes: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown selection scheme {self.scheme!r}")


def build_partition(M, L):
    """Contiguous-block partition: {0..L-1}, {L..2L-1}, ...; last block may be smaller."""
    if L < 0 or L > M:
        raise ConfigError(f"L must be in [0, {M}], got {L}")
    if L == 0:
        return Partition(M=M, L=0, subsets=())
    subsets = tuple(tuple(range(start, min(start + L, M))) for start in range(0, M, L))
    return Partition(M=M, L=L, subsets=subsets)


def subset_index_at(schedule, node, iteration):
    """Index of the subset transmitted at `iteration` (None when L = 0)."""
    part = schedule.partition
    if part.L == 0:
        return None
    omega = part.omega
    if schedule.scheme == SEQUENTIAL or omega == 1:
        return iteration % omega
    cycle, pos = divmod(iteration, omega)
    key = [schedule.seed, cycle] if schedule.shared_across_nodes else [schedule.seed, cycle, node]
    perm = np.random.default_rng(key).permutation(omega)
    return int(perm[pos])


def mask_at(schedule, node, iteration):
    """Selection mask for `node` at `iteration`; thread-safe pure function."""
    part = schedule.partition
    bits = np.zeros(part.M, dtype=bool)
    tau = subset_index_at(schedule, node, iteration)
    if tau is not None:
        bits[list(part.subsets[tau])] = True
    return SelectionMask(bits)


def as_matrix(mask):
    """Diagonal 0/1 matrix form of a mask; multiplying zeroes non-selected entries."""
    return np.diag(mask.bits.astype(float))
