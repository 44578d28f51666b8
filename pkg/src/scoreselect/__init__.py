"""Model selection with derivative-based proper scores and Bayes factors.

The score of a forecast density q at an observation x,

    2 * laplacian(log q)(x) + || gradient(log q)(x) ||^2,

depends on q only through derivatives of its log density, so it remains
usable when the normalizing constant is unknown or does not exist, which is
exactly the situation created by flat improper priors.  The package pairs
that score with classical marginal likelihoods for Gaussian linear models
and three univariate conjugate families, and ships a seeded simulation
harness plus a command line front end (see scoreselect.cli).
"""

__version__ = "0.1.0"

from .errors import (
    DegenerateFit,
    DimensionMismatch,
    DiscreteSupport,
    ImproperPriorHasNoMarginalMass,
    InsufficientBurnIn,
    InvalidParameters,
    NonSmoothDensity,
    NonSPDPrior,
    OutOfSupport,
    PointOutsideSupport,
    RankDeficientDesign,
    ScoreSelectError,
)
from .scoring import (
    POSITIVE_HALF_LINE,
    REAL_LINE,
    SmoothLogDensity,
    Support,
    fd_gradient_laplacian,
    gaussian_log_density,
    half_line_above,
    hyvarinen_gaussian,
    hyvarinen_pointwise,
    prequential_score,
)
from .linear import (
    Criterion,
    GaussianMarginal,
    IMPROPER_FLAT,
    ImproperFlat,
    LinearModelSpec,
    ProperGaussian,
    ScoreReport,
    log_bayes_factor,
    log_marginal_likelihood,
    marginal,
    marginal_improper,
    marginal_proper,
    multivariate_score,
    prefix_joint_statistics,
    prequential_log_density_linear,
    prequential_score_linear,
    select_model,
)
from .families import (
    ConjugateFamily,
    GammaKnownShape,
    NormalKnownVar,
    ParetoKnownScale,
    applicability_check,
    log_marginal,
    log_marginal_closed_form,
    log_predictive_density,
    posterior_update,
    predictive,
    prequential_hyvarinen,
)
from .samplers import (
    Gamma,
    Laplace,
    Normal,
    Pareto,
    Poisson,
    SamplerSpec,
    laplace_inverse_cdf,
    pareto_inverse_cdf,
    sample,
)
from .harness import (
    ExperimentConfig,
    derive_seed,
    estimate_slope_ratio,
    fig1_selection_frequencies,
    run_fig1,
    run_scenario,
    run_trajectory,
    run_univariate_study,
    selection_accuracy,
)

__all__ = [name for name in dir() if not name.startswith("_")]
