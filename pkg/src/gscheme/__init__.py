"""Monotone recursive schemes for G-equations under sublinear expectation."""

from .analysis import (
    ExperimentResult,
    ExperimentRow,
    ModulusReport,
    axiom_suite,
    check_comparison,
    estimate_modulus,
    fit_rate,
)
from .bounds import (
    BoundsReport,
    SmoothFunction,
    compute_c_rho,
    compute_constants,
    consistency_bounds,
    consistency_error,
    cubic_spline_psi,
    gaussian_bump,
    sine,
)
from .bsb import (
    BsbSpec,
    CappedCallPayoff,
    PutPayoff,
    bsb_price,
    bsb_rate_experiment,
    bsb_step,
    bsb_transform,
    make_payoff,
    richardson_reference_curve,
)
from .clt import clt_experiment, clt_functional, lln_experiment
from .errors import (
    ArgumentError,
    ConfigurationError,
    EvaluationError,
    GschemeError,
    NumericalError,
    PreconditionError,
    ResourceLimitError,
    UnsupportedError,
    ValidationError,
)
from .families import (
    bsb_family,
    builtin_family,
    builtin_phi,
    capped_relu,
    lln_box_family,
    pm_sigma_family,
    relu,
    zero_family,
)
from .oracles import (
    ReferenceSolution,
    ThetaSet,
    brute_force_tree,
    bs_closed_form,
    classical_normal_reference,
    fine_grid_reference,
    maximal_sup,
)
from .scheme import (
    GridFunction,
    InitialData,
    LatticeResult,
    LatticeState,
    SchemeConfig,
    SchemeSolution,
    forward_operator,
    forward_values,
    scheme_residual,
    solve_grid,
    solve_lattice,
)
from .uncertainty import (
    Atom,
    DiscreteMeasure,
    MomentReport,
    UncertaintySet,
    from_text,
    g_function,
    load_measures,
    moment,
    save_measures,
    sublinear_expect,
    to_text,
    validate,
)

__version__ = "0.1.0"
