"""Nash-stable clustering of federated-learning agents."""

from ._core import (
    AllocationTable,
    CapacityError,
    ContractError,
    DomainError,
    FormatError,
    GainReport,
    MutualGainVector,
    Scenario,
    __version__,
    check_nash_stable,
    enumerate_partitions,
    expected_loss,
    find_general_allocation,
    generate_scenario,
    lp_solve,
    nash_stable_partitions,
    optimal_clustering,
    phi_from_v,
    potential,
    run_dynamics,
    solve_symmetric_lp,
)

__all__ = [
    "AllocationTable",
    "CapacityError",
    "ContractError",
    "DomainError",
    "FormatError",
    "GainReport",
    "MutualGainVector",
    "Scenario",
    "__version__",
    "check_nash_stable",
    "enumerate_partitions",
    "expected_loss",
    "find_general_allocation",
    "generate_scenario",
    "lp_solve",
    "nash_stable_partitions",
    "optimal_clustering",
    "phi_from_v",
    "potential",
    "run_dynamics",
    "solve_symmetric_lp",
]
