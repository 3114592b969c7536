"""Gramian-based actuator placement for linear dynamical networks.

Given stable dynamics x' = A x and a finite menu of candidate input
columns, every supported placement metric — trace of the controllability
Gramian, a weighted trace, or the squared H2 norm — is additive across
candidates.  The subset score is therefore modular and the exact optimal
k-subset falls out of sorting per-candidate weights, which this package
exploits for ranking, selection, centrality analysis and minimum-energy
input synthesis.
"""

__version__ = "0.1.0"

from .exceptions import (
    DegenerateGramianWarning,
    DimensionError,
    DomainError,
    EnumerationCapError,
    GramselError,
    NonFiniteError,
    NumericalError,
    ProblemFormatError,
    SingularGramianError,
    StabilityError,
    TopologyError,
    UnreachableStateError,
)
from .numerics import (
    DEFAULT_STABILITY_MARGIN,
    Spectrum,
    eigenvalues,
    is_hurwitz,
    matrix_exponential,
    real_schur,
    spectral_abscissa,
)
from .gramian import (
    Gramian,
    LyapunovSolver,
    controllability_gramian,
    finite_horizon_gramian,
    lyapunov_residual,
    observability_gramian,
    solve_lyapunov,
)
from .metrics import (
    EllipsoidAxes,
    InputTrajectory,
    MetricSpec,
    TransferResult,
    average_energy_tr_inverse,
    evaluate_metric,
    min_energy_to_reach,
    reachability_ellipsoid,
    simulate_transfer,
    synthesize_min_energy_input,
)
from .placement import (
    CandidateSet,
    ModularityReport,
    PlacementResult,
    brute_force_best,
    candidate_weights,
    controllability_centrality,
    select_top_k,
    verify_modularity,
)
from .models import (
    Bus,
    GridModel,
    Line,
    LinearizedGrid,
    Problem,
    build_swing_matrix,
    frequency_selector,
    hvdc_candidates,
    load_problem,
    random_hurwitz_system,
    ring_grid,
    ring_problem_dict,
    system_problem_dict,
    write_problem,
)

__all__ = [
    "__version__",
    # exceptions
    "GramselError", "DimensionError", "DomainError", "NonFiniteError",
    "ProblemFormatError", "TopologyError", "EnumerationCapError",
    "NumericalError", "StabilityError", "SingularGramianError",
    "UnreachableStateError", "DegenerateGramianWarning",
    # numerics
    "DEFAULT_STABILITY_MARGIN", "Spectrum", "eigenvalues", "spectral_abscissa",
    "is_hurwitz", "matrix_exponential", "real_schur",
    # gramian
    "Gramian", "LyapunovSolver", "solve_lyapunov", "lyapunov_residual",
    "controllability_gramian", "finite_horizon_gramian", "observability_gramian",
    # metrics
    "MetricSpec", "evaluate_metric", "average_energy_tr_inverse",
    "min_energy_to_reach", "reachability_ellipsoid", "EllipsoidAxes",
    "InputTrajectory", "synthesize_min_energy_input", "TransferResult",
    "simulate_transfer",
    # placement
    "CandidateSet", "PlacementResult", "ModularityReport", "candidate_weights",
    "select_top_k", "brute_force_best", "verify_modularity",
    "controllability_centrality",
    # models
    "Bus", "Line", "GridModel", "LinearizedGrid", "build_swing_matrix",
    "frequency_selector", "hvdc_candidates", "ring_grid",
    "random_hurwitz_system", "Problem", "load_problem", "write_problem",
    "system_problem_dict", "ring_problem_dict",
]
