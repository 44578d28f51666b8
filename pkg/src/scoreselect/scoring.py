"""Scoring of smooth, possibly unnormalized, log densities.

The pointwise score of a forecast density q at an observation x is

    2 * laplacian(log q)(x) + || gradient(log q)(x) ||^2

treated as a loss: smaller accumulated values indicate a better predictive
distribution.  Both terms involve only derivatives of log q, so an additive
constant in the log density, in particular an unknown or nonexistent
normalizing constant, has no effect on the score.  That insensitivity is
what lets the same machinery score marginal distributions derived from flat
improper priors, for which no normalized density exists.

The score is not invariant under reparameterizing the observation: scoring
h(X) under the transformed density generally gives a different value than
scoring X under the original (see the property tests).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidParameters,
    NonSmoothDensity,
    PointOutsideSupport,
)


@dataclass(frozen=True)
class Support:
    """Open interval support, applied coordinate-wise to vector points."""

    lower: float = -math.inf
    upper: float = math.inf

    def contains_interior(self, x, margin: float = 0.0) -> bool:
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        return bool(
            np.all(arr > self.lower + margin) and np.all(arr < self.upper - margin)
        )


REAL_LINE = Support()
POSITIVE_HALF_LINE = Support(lower=0.0)


def half_line_above(x_min: float) -> Support:
    """Support on the open half-line x > x_min."""
    return Support(lower=float(x_min))


@dataclass(frozen=True)
class SmoothLogDensity:
    """A log density known up to an additive constant, with its derivatives.

    ``log_density``, ``gradient`` and ``laplacian`` take a scalar when
    ``dimension == 1`` and a length-d array otherwise.  ``gradient`` returns
    a vector (or scalar), ``laplacian`` the trace of the Hessian of the log
    density.  ``differentiable=False`` marks densities with kinks, which the
    scoring functions refuse to evaluate instead of silently returning a
    value away from the kink.
    """

    log_density: Callable
    gradient: Callable
    laplacian: Callable
    dimension: int = 1
    support: Support = REAL_LINE
    differentiable: bool = True


def hyvarinen_pointwise(density: SmoothLogDensity, x) -> float:
    """Pointwise score 2 * laplacian + squared gradient norm at x.

    Raises NonSmoothDensity for flagged densities and PointOutsideSupport
    when x is not strictly interior to the support.
    """
    if not density.differentiable:
        raise NonSmoothDensity(
            "density is flagged non-differentiable; derivative-based scoring undefined"
        )
    if not density.support.contains_interior(x):
        raise PointOutsideSupport(
            f"point {x!r} is not strictly interior to the support {density.support}"
        )
    grad = np.atleast_1d(np.asarray(density.gradient(x), dtype=float))
    if grad.shape != (density.dimension,):
        raise DimensionMismatch(
            f"gradient has shape {grad.shape}, expected ({density.dimension},)"
        )
    lap = float(density.laplacian(x))
    return 2.0 * lap + float(grad @ grad)


def hyvarinen_gaussian(mean, precision, x) -> float:
    """Closed-form score of a Gaussian with the given precision matrix.

    For log q(x) = const - (x-mean)' K (x-mean) / 2 the gradient is
    -K (x-mean) and the Laplacian -trace(K), so the score is

        -2 * trace(K) + || K (x - mean) ||^2

    K must be symmetric positive semidefinite; singular K is accepted (the
    trace and the matrix-vector product stay well defined), which is what
    scoring marginals obtained from flat improper priors requires.
    """
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    K = np.atleast_2d(np.asarray(precision, dtype=float))
    n = mean.shape[0]
    if x.shape != (n,):
        raise DimensionMismatch(f"x has shape {x.shape}, expected ({n},)")
    if K.shape != (n, n):
        raise DimensionMismatch(f"precision has shape {K.shape}, expected ({n}, {n})")
    r = K @ (x - mean)
    return -2.0 * float(np.trace(K)) + float(r @ r)


def prequential_score(
    predictive_at_step: Callable[[int, Sequence], SmoothLogDensity], data
) -> float:
    """Accumulated score of one-step-ahead predictives along a data sequence.

    ``predictive_at_step(i, history)`` must return the density used to score
    ``data[i]``, where ``history`` is the tuple of the first i observations.
    Support and smoothness failures are re-raised with the offending index
    attached.
    """
    seq = list(data)
    if not seq:
        raise InvalidParameters("data must be non-empty")
    total = 0.0
    for i, x in enumerate(seq):
        density = predictive_at_step(i, tuple(seq[:i]))
        try:
            total += hyvarinen_pointwise(density, x)
        except (PointOutsideSupport, NonSmoothDensity) as exc:
            exc.index = i
            raise
    return total


def fd_gradient_laplacian(
    log_density: Callable,
    x,
    h: float = 1e-4,
    support: Support | None = None,
) -> tuple[np.ndarray, float]:
    """Central-difference gradient and Laplacian of a scalar function.

    The Laplacian is the sum over coordinates of second central differences.
    Used as the independent numerical oracle for every analytic derivative
    in this package.  When a support is supplied, points closer than 2h to
    its boundary are rejected so every evaluation stays strictly inside.
    """
    if h <= 0:
        raise InvalidParameters("step size h must be positive")
    if support is not None and not support.contains_interior(x, margin=2.0 * h):
        raise PointOutsideSupport(
            f"point {x!r} is within 2h of the support boundary"
        )
    scalar = np.ndim(x) == 0
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    d = arr.shape[0]

    def f(v: np.ndarray) -> float:
        return float(log_density(v[0] if scalar else v))

    f0 = f(arr)
    grad = np.empty(d)
    lap = 0.0
    for j in range(d):
        step = np.zeros(d)
        step[j] = h
        fp = f(arr + step)
        fm = f(arr - step)
        grad[j] = (fp - fm) / (2.0 * h)
        lap += (fp - 2.0 * f0 + fm) / h**2
    return grad, float(lap)


def gaussian_log_density(mean, precision, differentiable: bool = True) -> SmoothLogDensity:
    """Explicit Gaussian SmoothLogDensity with analytic derivatives.

    The log density is left unnormalized; the scoring functions never look
    at the constant.
    """
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    K = np.atleast_2d(np.asarray(precision, dtype=float))
    d = mean.shape[0]
    if K.shape != (d, d):
        raise DimensionMismatch(f"precision has shape {K.shape}, expected ({d}, {d})")
    trace_K = float(np.trace(K))

    def logq(x) -> float:
        v = np.atleast_1d(np.asarray(x, dtype=float)) - mean
        return -0.5 * float(v @ K @ v)

    def grad(x) -> np.ndarray:
        v = np.atleast_1d(np.asarray(x, dtype=float)) - mean
        return -(K @ v)

    def lap(x) -> float:
        return -trace_K

    return SmoothLogDensity(
        log_density=logq,
        gradient=grad,
        laplacian=lap,
        dimension=d,
        differentiable=differentiable,
    )
