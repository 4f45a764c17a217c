"""Partial-diffusion Kalman filtering over sensor networks.

Simulation of diffusion Kalman filters that exchange only a subset of their
intermediate-estimate entries per iteration, plus the closed-form
steady-state mean-square-deviation analysis and a Monte-Carlo harness that
cross-validates the two.
"""
from .analysis import (BfrakOperator, MsdTheory, StabilityReport, SteadyState,
                       build_b_patterns, expected_b_kron, network_steady_state,
                       solve_riccati, stability_report, theoretical_network_msd)
from .config import ExperimentConfig, from_dict, load_config
from .exceptions import (ConfigError, DimensionError, FilterNumericsError,
                         NumericError, PdkfError, RiccatiConvergenceError,
                         StabilityError)
from .filters import (NetworkFilter, NodeFilterState, combine_dkf, combine_pdkf,
                      combine_pdkf_substitution, dkf_incremental,
                      measurement_update, network_step, pdkf_adaptation,
                      time_update)
from .harness import (BranchResult, MsdReport, assign_sensors, build_experiment,
                      emit_report, run_experiment, theory_only)
from .network import (CombinationWeights, Topology, WeightViolation,
                      generate_topology, uniform_weights, validate_weights)
from .selection import (Partition, SelectionMask, SelectionSchedule, as_matrix,
                        build_partition, mask_at, subset_index_at)
from .statespace import (SensorModel, StateSpaceModel, Trajectory, observe,
                         sample_trajectory, simulate_step)

__version__ = "0.1.0"
