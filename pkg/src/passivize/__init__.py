"""Passivization times, time-optimal Hamiltonians and quantum-battery bounds
for finite-dimensional systems under a bandwidth constraint."""

from .battery import (
    BatterySpec,
    DischargeSchedule,
    energy_transfer_variance,
    ergotropy,
    interaction_picture_check,
    power_upper_bound,
    qutrit_passivizing_family,
    smooth_discharge_schedule,
    variance_range,
)
from .bounds import (
    bound_report,
    build_time_optimal_hamiltonian,
    decompose_invariant_subspaces,
    distance_to_passivizing_set,
    tau_pas_nondegenerate,
    tau_qsl,
    tau_upper_from_permutation,
)
from .errors import ComputationError, PassivizeError, ValidationError
from .multipartite import (
    CollectiveSpec,
    collective_hamiltonian,
    delta_N,
    delta_N_bruteforce,
    delta_N_closed,
    figure_series,
    tau_cqsl,
)
from .operators import expm_skew, geodesic_distance, principal_log, propagator, von_neumann_evolve
from .oracle import numeric_min_distance, verify_optimality_properties, verify_passivization_run
from .system import (
    Permutation,
    SystemSpec,
    cycle_decomposition,
    discrepancy,
    enumerate_passivizing_permutations,
    is_passive,
    validate_spec,
)

__version__ = "0.1.0"
