"""Numerical laboratory for Korovkin-type approximation under generalized
convergences: summability-matrix statistical convergence, filter
limsup/liminf, almost convergence, Orlicz modulars, moment-kernel and
bivariate Kantorovich operator families, and empirical little-o / big-O
rate classification.
"""

from .tolerances import DEFAULT_TOLERANCES, Tolerances
from .nets import (
    Almost,
    ConvergenceMode,
    DensityFilter,
    DensityReport,
    Frechet,
    Net,
    Ordinary,
    PsiAStatistical,
    RateClass,
    RateKind,
    ShapeFunction,
    SummabilityMatrix,
    cesaro_entry,
    cesaro_matrix,
    check_summability_axioms,
    degenerate_entry,
    degenerate_matrix,
    filter_limsup_liminf,
    identity_matrix,
    is_perfect_square,
    mode_limit,
    non_squares_filter,
    rate_classify,
    triangular_density,
    triangular_shape,
)
from .modular import (
    Box,
    FunctionSample,
    Grid,
    OrliczModular,
    PhiFunction,
    Simplex2,
    build_grid,
    check_modular_properties,
    modulus_of_continuity,
    orlicz_modular,
    phi_expm1,
    phi_linear,
    phi_power,
    sample_from_csv,
)
from .operators import (
    KantorovichParams,
    MellinParams,
    OperatorFamily,
    check_positivity_set,
    gate_family,
    kantorovich_apply,
    kantorovich_family,
    mellin_apply,
    mellin_error_closed_form,
    mellin_family,
)
from .engine import (
    LipschitzProbe,
    RateReport,
    TestSystem,
    build_test_system_euclidean,
    build_test_system_trig,
    check_rho_star,
    decomposition_check,
    rates_pipeline_continuity,
    rates_pipeline_lipschitz,
    tau_continuity,
    tau_lipschitz,
    verify_P_axioms,
    with_constants,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
