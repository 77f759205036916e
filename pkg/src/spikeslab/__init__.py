"""Sparse linear regression with simultaneous error-variance estimation.

The core solver fits a spike-and-slab lasso over an increasing ladder
of spike rates, with the error variance fixed, estimated alongside the
coefficients, or estimated through the scaled (concomitant) loss.
Companion modules provide the conjugate-prior EM variant, Bayesian
ridge estimators with a Gibbs sampler, plain and scaled lasso
baselines, numerical checks of the prior-concentration results, and a
seeded simulation benchmark.
"""

__version__ = "0.1.0"

from .baselines import (
    ScaledLassoFit,
    lambda0_log_heuristic,
    lasso_cd,
    oracle_sigma2,
    scaled_lasso,
    universal_lambda0,
)
from .bench import (
    BenchReport,
    SelectionMetrics,
    SimScenario,
    compute_metrics,
    generate_design,
    generate_response,
    kfold_cv,
    ridge_variance_study,
    run_replications,
)
from .conjugate import (
    ConjEmConfig,
    ConjEmFit,
    em_beta_step,
    em_e_step,
    em_sigma_step,
    em_theta_step,
    run_conj_em,
    sigma_map_at_truth,
)
from .data import (
    Coefficients,
    Dataset,
    destandardize_coefficients,
    load_design_csv,
    load_response_csv,
    residual_ss,
    standardize,
)
from .errors import (
    ConstantColumnError,
    DegenerateFitError,
    DidNotConvergeError,
    DimensionMismatchError,
    DomainError,
    InsufficientDofError,
    NonFiniteInputError,
    NotStandardizedError,
    SingularDesignError,
    SpikeslabError,
)
from .penalty import (
    generalized_threshold,
    mixture_penalty,
    penalty_rate,
    selection_threshold,
    slab_probability,
    threshold_discriminant,
    update_mixing_weight,
)
from .ridge import (
    GibbsChain,
    RidgeEstimates,
    conditional_beta_independent,
    conditional_sigma_conjugate,
    conditional_sigma_independent,
    conjugate_ridge,
    draw_beta_conditional,
    gibbs_independent_ridge,
    least_squares,
    zellner,
)
from .rng import RngSpec
from .solver import (
    KktReport,
    LadderRecord,
    PenaltyState,
    SslConfig,
    SslFit,
    coordinate_sweep,
    fit_ssl,
    init_sigma2,
    kkt_certificate,
    sigma2_adjusted,
    sigma2_newton,
)
from .theory import (
    GlobalLocalSpec,
    SparseBetaSpec,
    conjugate_tail_bound,
    conjugate_tail_mc,
    global_local_sigma_bound,
    horseshoe_conditional_sigma,
    ig1_tail_mc,
    ig1_upper_tail,
    make_global_local_instance,
    p_sigma_tail_bound,
    run_theory_suite,
)
