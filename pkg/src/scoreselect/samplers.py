"""Deterministic data generation for the simulation studies.

Every draw goes through a generator freshly seeded from the spec, so a
SamplerSpec pins its output exactly, independent of call order or thread
schedule.  Pareto and Laplace variates come from explicit inverse transform
functions (exposed for direct testing); Gamma variates use the generator's
rejection sampler (Marsaglia-Tsang squeeze method, as documented by numpy);
Normal variates are mean + sqrt(var) * z so location shifts are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InvalidParameters


@dataclass(frozen=True)
class Normal:
    mean: float
    var: float

    def __post_init__(self):
        if self.var <= 0:
            raise InvalidParameters("variance must be positive")


@dataclass(frozen=True)
class Gamma:
    shape: float
    rate: float

    def __post_init__(self):
        if self.shape <= 0 or self.rate <= 0:
            raise InvalidParameters("shape and rate must be positive")


@dataclass(frozen=True)
class Pareto:
    x_min: float
    shape: float

    def __post_init__(self):
        if self.x_min <= 0 or self.shape <= 0:
            raise InvalidParameters("x_min and shape must be positive")


@dataclass(frozen=True)
class Laplace:
    loc: float
    scale: float

    def __post_init__(self):
        if self.scale <= 0:
            raise InvalidParameters("scale must be positive")


@dataclass(frozen=True)
class Poisson:
    rate: float

    def __post_init__(self):
        if self.rate <= 0:
            raise InvalidParameters("rate must be positive")


Distribution = Union[Normal, Gamma, Pareto, Laplace, Poisson]


@dataclass(frozen=True)
class SamplerSpec:
    distribution: Distribution
    seed: int


def pareto_inverse_cdf(u, x_min: float, shape: float):
    """Map upper-tail probability u in (0, 1] to the Pareto quantile
    x_min * u ** (-1/shape)."""
    if x_min <= 0 or shape <= 0:
        raise InvalidParameters("x_min and shape must be positive")
    return x_min * np.asarray(u, dtype=float) ** (-1.0 / shape)


def laplace_inverse_cdf(u, loc: float, scale: float):
    """Map probability u in (0, 1) to the Laplace quantile
    loc - scale * sign(u - 1/2) * log(1 - 2 |u - 1/2|)."""
    if scale <= 0:
        raise InvalidParameters("scale must be positive")
    u = np.asarray(u, dtype=float)
    centered = u - 0.5
    return loc - scale * np.sign(centered) * np.log1p(-2.0 * np.abs(centered))


def sample(spec: SamplerSpec, n: int) -> np.ndarray:
    """Draw n i.i.d. variates, fully determined by the spec's seed."""
    if n < 1:
        raise InvalidParameters("sample count must be at least 1")
    rng = np.random.default_rng(spec.seed)
    d = spec.distribution
    if isinstance(d, Normal):
        return d.mean + np.sqrt(d.var) * rng.standard_normal(n)
    if isinstance(d, Gamma):
        return rng.gamma(shape=d.shape, scale=1.0 / d.rate, size=n)
    if isinstance(d, Pareto):
        # 1 - random() lies in (0, 1], keeping the quantile finite.
        return pareto_inverse_cdf(1.0 - rng.random(n), d.x_min, d.shape)
    if isinstance(d, Laplace):
        return laplace_inverse_cdf(rng.random(n), d.loc, d.scale)
    if isinstance(d, Poisson):
        return rng.poisson(lam=d.rate, size=n).astype(float)
    raise InvalidParameters(f"unrecognized distribution: {d!r}")
