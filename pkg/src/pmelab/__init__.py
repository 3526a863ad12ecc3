"""Numerical laboratory for a porous-medium equation with nonlocal source,
absorption and gradient damping: explicit blow-up-time lower bounds, a
global-existence ceiling, a finite-difference solver that observes the
actual blow-up, and numerical verification of the underlying functional
inequalities."""

from .bounds import (
    BoundResult,
    ConstantsLedger,
    EpsilonChoice,
    comparison_ode_blowup,
    constants_2d,
    constants_3d,
    eps1_admissible_max,
    global_ceiling,
    lower_bound_2d,
    lower_bound_2d_quadrature,
    lower_bound_3d,
    lower_bound_3d_quadrature,
    optimize_eps1,
)
from .errors import (
    ConfigurationError,
    DomainError,
    EstimationError,
    InfeasibilityError,
    PmelabError,
    PositivityError,
    QuadratureError,
    RegimeError,
)
from .geometry import (
    DomainGeometry,
    DomainShape,
    SpatialGrid,
    boundary_integrate,
    build_grid,
    compute_geometry,
    gradient_magnitude,
    integrate,
)
from .pde import (
    Field,
    InitialDatum,
    SimulationSeries,
    SolverConfig,
    estimate_blowup_time,
    make_initial_field,
    run,
    spatial_rhs,
    step,
)
from .regime import ProblemParams, RegimeVerdict, classify, flux_exponent
from .verify import (
    InequalityCase,
    InequalityReport,
    TestFunctionSpec,
    check_inequality,
    check_phi_envelope,
    standard_suite,
)

__version__ = "0.1.0"
