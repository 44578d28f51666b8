"""Univariate conjugate families with closed-form posterior predictives.

Each family keeps exactly one unknown parameter under a conjugate prior, so
the posterior predictive after any batch of observations stays closed form
together with the first two derivatives of its log density:

NormalKnownVar
    x | mu ~ N(mu, sigma2), mu ~ N(prior_mean, prior_var).
    Predictive: N(prior_mean, sigma2 + prior_var).

GammaKnownShape
    x | rate ~ Gamma(shape, rate), rate ~ Gamma(a, b) (rate parameterized).
    Predictive (compound Gamma), with s = shape:
        log q(x) = lgamma(s+a) - lgamma(s) - lgamma(a) + a log b
                   + (s-1) log x - (s+a) log(x+b),          x > 0
        d/dx   log q = (s-1)/x - (s+a)/(x+b)
        d2/dx2 log q = -(s-1)/x^2 + (s+a)/(x+b)^2

ParetoKnownScale
    x | tail ~ Pareto(x_min, tail), tail ~ Gamma(a, b).
    Predictive, with L = log(x / x_min):
        log q(x) = log a + a log b - log x - (a+1) log(b+L),  x > x_min
        d/dx   log q = -1/x - (a+1) / (x (b+L))
        d2/dx2 log q = 1/x^2 + (a+1)(b+L+1) / (x^2 (b+L)^2)

Batch posterior updates are computed as a left fold over the observations,
one point at a time, so updating with d1 then d2 gives bit-identical
hyperparameters to updating with the concatenation d1 + d2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Union

import numpy as np
from scipy.special import gammaln

from .errors import (
    DiscreteSupport,
    InvalidParameters,
    NonSmoothDensity,
    OutOfSupport,
)
from .scoring import (
    POSITIVE_HALF_LINE,
    REAL_LINE,
    SmoothLogDensity,
    Support,
    half_line_above,
)


@dataclass(frozen=True)
class NormalKnownVar:
    """Normal sampling model with known variance; conjugate prior on the mean."""

    sigma2: float
    prior_mean: float = 0.0
    prior_var: float = 1.0

    def __post_init__(self):
        if self.sigma2 <= 0 or self.prior_var <= 0:
            raise InvalidParameters("variances must be positive")


@dataclass(frozen=True)
class GammaKnownShape:
    """Gamma sampling model with known shape; Gamma(a, rate b) prior on the rate."""

    shape: float
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if self.shape <= 0 or self.a <= 0 or self.b <= 0:
            raise InvalidParameters("shape and prior hyperparameters must be positive")


@dataclass(frozen=True)
class ParetoKnownScale:
    """Pareto sampling model with known scale; Gamma(a, rate b) prior on the
    tail exponent."""

    x_min: float
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if self.x_min <= 0 or self.a <= 0 or self.b <= 0:
            raise InvalidParameters("scale and prior hyperparameters must be positive")


ConjugateFamily = Union[NormalKnownVar, GammaKnownShape, ParetoKnownScale]


def support_of(family: ConjugateFamily) -> Support:
    if isinstance(family, NormalKnownVar):
        return REAL_LINE
    if isinstance(family, GammaKnownShape):
        return POSITIVE_HALF_LINE
    if isinstance(family, ParetoKnownScale):
        return half_line_above(family.x_min)
    raise InvalidParameters(f"not a conjugate family: {family!r}")


def _check_point(family: ConjugateFamily, x: float, index: int | None = None) -> float:
    x = float(x)
    if not support_of(family).contains_interior(x):
        where = "" if index is None else f" (index {index})"
        raise OutOfSupport(
            f"observation {x!r}{where} is outside the support of {type(family).__name__}",
            index=index,
        )
    return x


def _update_one(family: ConjugateFamily, x: float) -> ConjugateFamily:
    if isinstance(family, NormalKnownVar):
        precision = 1.0 / family.prior_var + 1.0 / family.sigma2
        mean = (family.prior_mean / family.prior_var + x / family.sigma2) / precision
        return replace(family, prior_mean=mean, prior_var=1.0 / precision)
    if isinstance(family, GammaKnownShape):
        return replace(family, a=family.a + family.shape, b=family.b + x)
    return replace(family, a=family.a + 1.0, b=family.b + math.log(x / family.x_min))


def posterior_update(family: ConjugateFamily, data) -> ConjugateFamily:
    """Fold the observations into the prior, one point at a time."""
    out = family
    for i, x in enumerate(data):
        out = _update_one(out, _check_point(out, x, index=i))
    return out


def log_predictive_density(family: ConjugateFamily, x: float) -> float:
    """Normalized log density of the posterior predictive at x."""
    x = _check_point(family, x)
    if isinstance(family, NormalKnownVar):
        s2 = family.sigma2 + family.prior_var
        return -0.5 * math.log(2.0 * math.pi * s2) - 0.5 * (x - family.prior_mean) ** 2 / s2
    if isinstance(family, GammaKnownShape):
        s, a, b = family.shape, family.a, family.b
        return float(
            gammaln(s + a)
            - gammaln(s)
            - gammaln(a)
            + a * math.log(b)
            + (s - 1.0) * math.log(x)
            - (s + a) * math.log(x + b)
        )
    a, b = family.a, family.b
    length = math.log(x / family.x_min)
    return math.log(a) + a * math.log(b) - math.log(x) - (a + 1.0) * math.log(b + length)


def _predictive_gradient(family: ConjugateFamily, x: float) -> float:
    if isinstance(family, NormalKnownVar):
        return -(x - family.prior_mean) / (family.sigma2 + family.prior_var)
    if isinstance(family, GammaKnownShape):
        s, a, b = family.shape, family.a, family.b
        return (s - 1.0) / x - (s + a) / (x + b)
    a, b = family.a, family.b
    length = math.log(x / family.x_min)
    return -1.0 / x - (a + 1.0) / (x * (b + length))


def _predictive_laplacian(family: ConjugateFamily, x: float) -> float:
    if isinstance(family, NormalKnownVar):
        return -1.0 / (family.sigma2 + family.prior_var)
    if isinstance(family, GammaKnownShape):
        s, a, b = family.shape, family.a, family.b
        return -(s - 1.0) / x**2 + (s + a) / (x + b) ** 2
    a, b = family.a, family.b
    length = math.log(x / family.x_min)
    return 1.0 / x**2 + (a + 1.0) * (b + length + 1.0) / (x**2 * (b + length) ** 2)


def predictive(family: ConjugateFamily) -> SmoothLogDensity:
    """Posterior predictive as a SmoothLogDensity with analytic derivatives."""

    def logq(x: float) -> float:
        return log_predictive_density(family, x)

    def grad(x: float) -> float:
        return _predictive_gradient(family, _check_point(family, x))

    def lap(x: float) -> float:
        return _predictive_laplacian(family, _check_point(family, x))

    return SmoothLogDensity(
        log_density=logq,
        gradient=grad,
        laplacian=lap,
        dimension=1,
        support=support_of(family),
    )


def prequential_hyvarinen(family: ConjugateFamily, data) -> float:
    """Accumulated one-step-ahead score along the (ordered) data.

    Step i scores data[i] under the predictive given data[:i]; an
    observation outside the model support raises OutOfSupport with the
    index attached (callers comparing candidates usually record such a
    candidate as disqualified: loss +inf).
    """
    current = family
    total = 0.0
    for i, x in enumerate(data):
        x = _check_point(current, x, index=i)
        g = _predictive_gradient(current, x)
        total += 2.0 * _predictive_laplacian(current, x) + g * g
        current = _update_one(current, x)
    return total


def log_marginal(family: ConjugateFamily, data) -> float:
    """Log joint marginal of the data: chain of one-step predictive densities.

    Equals the closed-form joint marginal of these conjugate families (see
    log_marginal_closed_form, kept as an independent route).
    """
    current = family
    total = 0.0
    for i, x in enumerate(data):
        x = _check_point(current, x, index=i)
        total += log_predictive_density(current, x)
        current = _update_one(current, x)
    return total


def log_marginal_closed_form(family: ConjugateFamily, data) -> float:
    """Joint marginal computed in one shot from sufficient statistics."""
    xs = [
        _check_point(family, x, index=i) for i, x in enumerate(data)
    ]
    n = len(xs)
    if n == 0:
        return 0.0
    if isinstance(family, NormalKnownVar):
        # y ~ N(m 1, sigma2 I + tau2 J): rank-one determinant and inverse.
        s2, t2, m = family.sigma2, family.prior_var, family.prior_mean
        d = np.asarray(xs) - m
        total = s2 + n * t2
        log_det = (n - 1) * math.log(s2) + math.log(total)
        quad = (float(d @ d) - t2 * float(np.sum(d)) ** 2 / total) / s2
        return -0.5 * n * math.log(2.0 * math.pi) - 0.5 * log_det - 0.5 * quad
    if isinstance(family, GammaKnownShape):
        s, a, b = family.shape, family.a, family.b
        return float(
            (s - 1.0) * np.sum(np.log(xs))
            - n * gammaln(s)
            + a * math.log(b)
            - gammaln(a)
            + gammaln(a + n * s)
            - (a + n * s) * math.log(b + float(np.sum(xs)))
        )
    a, b = family.a, family.b
    lengths = np.log(np.asarray(xs) / family.x_min)
    return float(
        -np.sum(np.log(xs))
        + a * math.log(b)
        - gammaln(a)
        + gammaln(a + n)
        - (a + n) * math.log(b + float(np.sum(lengths)))
    )


def applicability_check(candidate) -> None:
    """Reject candidate models the derivative-based score cannot handle.

    Raises NonSmoothDensity for Laplace models (kink at the location) and
    DiscreteSupport for Poisson models; returns None for the smooth
    continuous families and distributions.
    """
    from . import samplers

    if isinstance(candidate, samplers.SamplerSpec):
        candidate = candidate.distribution
    if isinstance(candidate, samplers.Laplace):
        raise NonSmoothDensity(
            "Laplace density is not differentiable at its location; "
            "derivative-based scoring does not apply"
        )
    if isinstance(candidate, samplers.Poisson):
        raise DiscreteSupport(
            "Poisson model has discrete support; derivative-based scoring "
            "does not apply"
        )
    if isinstance(
        candidate,
        (NormalKnownVar, GammaKnownShape, ParetoKnownScale, samplers.Normal,
         samplers.Gamma, samplers.Pareto),
    ):
        return None
    raise InvalidParameters(f"unrecognized candidate model: {candidate!r}")
