"""walklab: a numerical laboratory for spatially inhomogeneous centered
elliptic random walks killed at the boundary of Lipschitz graph domains in
Z^d.

Exact lattice geometry, sparse Dirichlet solves, Monte Carlo cross-checks,
an exhaustion construction of the positive harmonic profile with Martin
kernels, and measured comparison constants (Harnack, Carleson, boundary
Harnack, contraction, collar exit ratios, decay exponents).
"""

from ._mc_step import NUMBA_ENABLED
from .constructor import (
    DATA_VARIANTS,
    ConvergenceLog,
    ExhaustionSchedule,
    HarmonicCandidate,
    UniquenessReport,
    construct_harmonic,
    make_schedule,
    martin_kernel,
    martin_profile,
    martin_window_radius,
    uniqueness_check,
)
from .geometry import (
    LipschitzDomain,
    LipschitzProfile,
    PointIndex,
    Region,
    ball,
    boundary,
    boundary_distances_sq,
    collar,
    cone_domain,
    cube,
    distance_to_boundary,
    distance_sq_to_boundary,
    enumerate_region,
    exterior_cone_fraction,
    half_space,
    interior_slab,
    is_domain_boundary_point,
    unit_steps,
)
from .kernels import (
    StepSet,
    TransitionKernel,
    apply_generator,
    cosine_kernel,
    drift,
    homogeneous_kernel,
    lazy_srw_kernel,
    max_feasible_ellipticity,
    parity_kernel_2d,
    periodic_kernel,
    srw_kernel,
    validate_kernel,
)
from .lab import (
    boundary_decay_profile,
    boundary_harnack_constant,
    carleson_constant,
    collar_exit_onset,
    contraction_factor,
    fit_power_envelope,
    harnack_constant,
    interior_growth_exponent,
    lateral_decay,
    local_harnack_constant,
    uniformity_band,
)
from .montecarlo import (
    EstimatorResult,
    SimulationConfig,
    estimate_exit_probability,
    estimate_green,
    simulate_exit,
)
from .reports import LabReport, TOOL_VERSION, canonical_digest, read_field_csv, write_field_csv
from .solver import (
    DirichletProblem,
    ExitSplit,
    Field,
    LatticeSystem,
    exit_split,
    green_function,
    green_row,
    harmonic_measure,
    solve_dirichlet,
)

__version__ = TOOL_VERSION
