"""Exception types shared across the package."""


class ScoreSelectError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(ScoreSelectError):
    """Vector or matrix arguments have incompatible shapes."""


class InvalidParameters(ScoreSelectError):
    """A parameter violates its domain (nonpositive variance, empty list, ...)."""


class PointOutsideSupport(ScoreSelectError):
    """A scoring point is on the boundary of, or outside, the density support."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class NonSmoothDensity(ScoreSelectError):
    """The density is flagged non-differentiable, so derivative-based scoring
    is undefined (a Laplace density has a kink at its location)."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class DiscreteSupport(ScoreSelectError):
    """The model has discrete support; gradient-based scores do not apply."""


class OutOfSupport(ScoreSelectError):
    """An observation falls outside a candidate model's support."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class NonSPDPrior(ScoreSelectError):
    """The prior covariance is not symmetric positive definite."""


class RankDeficientDesign(ScoreSelectError):
    """The design matrix does not have full column rank where required."""


class ImproperPriorHasNoMarginalMass(ScoreSelectError):
    """Marginal likelihoods (and hence Bayes factors) are undefined under a
    flat improper prior: the marginal's normalizing constant is arbitrary."""


class InsufficientBurnIn(ScoreSelectError):
    """Too few observations to form proper one-step predictives under a flat
    prior (needs more observations than coefficients)."""


class DegenerateFit(ScoreSelectError):
    """A slope fit required by a ratio is nonpositive or undefined."""
