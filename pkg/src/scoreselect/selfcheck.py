"""Numerical cross-checks runnable from the command line.

Each check pits an analytic path against an independent route (finite
differences, dense linear algebra, limiting arguments, the probability
chain rule) on freshly seeded random instances.  ``gaussian_score_offset``
exists as a fault-injection hook: a nonzero value perturbs the closed-form
Gaussian score inside the first check, which must then fail.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import families
from .linear import (
    IMPROPER_FLAT,
    LinearModelSpec,
    ProperGaussian,
    log_marginal_likelihood,
    marginal_improper,
    marginal_proper,
    multivariate_score,
    prequential_log_density_linear,
)
from .scoring import fd_gradient_laplacian, hyvarinen_gaussian
from .samplers import Gamma, Normal, Pareto, SamplerSpec, sample


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _random_spd(rng: np.random.Generator, p: int) -> np.ndarray:
    A = rng.standard_normal((p, p))
    return A @ A.T + (0.5 + p) * np.eye(p)


def _relative(err: float, scale: float) -> float:
    return err / (1.0 + abs(scale))


def check_finite_differences(
    seed: int = 101, gaussian_score_offset: float = 0.0
) -> CheckResult:
    """Analytic derivatives against central differences, and the closed-form
    Gaussian score against a score assembled purely from finite differences."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    fams = [
        families.NormalKnownVar(sigma2=1.3, prior_mean=0.4, prior_var=0.8),
        families.GammaKnownShape(shape=2.2, a=1.5, b=1.2),
        families.ParetoKnownScale(x_min=1.0, a=1.4, b=1.1),
    ]
    points = {
        0: rng.normal(0.0, 1.5, size=6),
        1: rng.gamma(2.0, 1.0, size=6) + 0.05,
        2: 1.0 + rng.gamma(1.5, 0.8, size=6) + 0.05,
    }
    for k, fam in enumerate(fams):
        d = families.predictive(fam)
        for x in points[k]:
            grad, lap = fd_gradient_laplacian(d.log_density, float(x), h=1e-4)
            g = float(np.atleast_1d(d.gradient(float(x)))[0])
            worst = max(worst, _relative(abs(g - grad[0]), g))
            worst = max(worst, _relative(abs(d.laplacian(float(x)) - lap), lap))
    # Gaussian marginal of a small linear model, scored both ways.
    for _ in range(3):
        n, p = 4, 2
        X = rng.standard_normal((n, p))
        spec = LinearModelSpec(
            X, 1.7, ProperGaussian(rng.standard_normal(p), _random_spd(rng, p))
        )
        m = marginal_proper(spec)
        y = rng.standard_normal(n)
        closed = hyvarinen_gaussian(m.mean, m.precision, y) + gaussian_score_offset

        def logq(v: np.ndarray) -> float:
            r = v - m.mean
            return -0.5 * float(r @ m.precision @ r)

        grad, lap = fd_gradient_laplacian(logq, y, h=1e-4)
        fd_score = 2.0 * lap + float(grad @ grad)
        worst = max(worst, _relative(abs(closed - fd_score), fd_score))
    passed = worst < 1e-5
    return CheckResult(
        "finite-difference derivatives", passed, f"max relative error {worst:.3e}"
    )


def check_woodbury(seed: int = 202, cases: int = 50) -> CheckResult:
    """Low-rank precision and determinant identities against dense inversion."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        n = int(rng.integers(1, 21))
        p = int(rng.integers(0, min(6, n) + 1))
        sigma2 = float(rng.uniform(0.5, 4.0))
        X = rng.standard_normal((n, p))
        V = _random_spd(rng, p)
        spec = LinearModelSpec(X, sigma2, ProperGaussian(np.zeros(p), V))
        m = marginal_proper(spec)
        cov = sigma2 * np.eye(n) + X @ V @ X.T
        K_dense = np.linalg.inv(cov)
        num = np.linalg.norm(m.precision - K_dense)
        worst = max(worst, num / np.linalg.norm(K_dense))
        sign, logdet = np.linalg.slogdet(cov)
        worst = max(worst, _relative(abs(m.log_det_cov - logdet), logdet))
    passed = worst < 1e-8
    return CheckResult(
        "low-rank precision and determinant vs dense", passed,
        f"max relative error {worst:.3e}",
    )


def check_improper_limit(seed: int = 303, cases: int = 20) -> CheckResult:
    """Proper scores with a huge prior variance against the flat-prior
    closed form."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        n = int(rng.integers(2, 16))
        p = int(rng.integers(1, min(5, n) + 1))
        sigma2 = float(rng.uniform(0.5, 4.0))
        X = rng.standard_normal((n, p))
        y = rng.standard_normal(n)
        flat = multivariate_score(LinearModelSpec(X, sigma2, IMPROPER_FLAT), y)
        near = multivariate_score(
            LinearModelSpec(X, sigma2, ProperGaussian.isotropic(p, 1e12, sigma2)), y
        )
        worst = max(worst, abs(near - flat) / (1.0 + abs(flat)))
    passed = worst < 1e-3
    return CheckResult(
        "flat-prior limit of the proper score", passed,
        f"max relative gap {worst:.3e}",
    )


def check_chain_rule(seed: int = 404) -> CheckResult:
    """One-step predictive log densities summed against joint marginals,
    for the linear model and all three conjugate families."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(5):
        n = int(rng.integers(3, 12))
        p = int(rng.integers(0, 4))
        sigma2 = float(rng.uniform(0.5, 3.0))
        X = rng.standard_normal((n, p))
        spec = LinearModelSpec(
            X, sigma2, ProperGaussian(rng.standard_normal(p), _random_spd(rng, p))
        )
        y = rng.standard_normal(n)
        chained = prequential_log_density_linear(spec, y)
        joint = log_marginal_likelihood(spec, y)
        worst = max(worst, _relative(abs(chained - joint), joint))
    cases = [
        (families.NormalKnownVar(1.2, 0.3, 0.9),
         sample(SamplerSpec(Normal(0.5, 1.0), seed + 1), 8)),
        (families.GammaKnownShape(2.0, 1.0, 1.0),
         sample(SamplerSpec(Gamma(2.0, 1.0), seed + 2), 8)),
        (families.ParetoKnownScale(1.0, 1.0, 1.0),
         sample(SamplerSpec(Pareto(1.0, 3.0), seed + 3), 8)),
    ]
    for fam, data in cases:
        chained = families.log_marginal(fam, data)
        joint = families.log_marginal_closed_form(fam, data)
        worst = max(worst, _relative(abs(chained - joint), joint))
    passed = worst < 1e-8
    return CheckResult(
        "chain rule vs joint marginals", passed, f"max relative error {worst:.3e}"
    )


def check_flat_projector(seed: int = 505, cases: int = 20) -> CheckResult:
    """Flat-prior precision: idempotence after scaling, annihilation of the
    design, and agreement with the dense projector formula."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        n = int(rng.integers(2, 16))
        p = int(rng.integers(1, min(6, n) + 1))
        sigma2 = float(rng.uniform(0.5, 4.0))
        X = rng.standard_normal((n, p))
        m = marginal_improper(LinearModelSpec(X, sigma2, IMPROPER_FLAT))
        scaled = sigma2 * m.precision
        worst = max(worst, float(np.max(np.abs(scaled @ scaled - scaled))))
        worst = max(worst, float(np.max(np.abs(m.precision @ X))))
        dense = (np.eye(n) - X @ np.linalg.solve(X.T @ X, X.T)) / sigma2
        worst = max(worst, float(np.max(np.abs(m.precision - dense))))
    passed = worst < 1e-8
    return CheckResult(
        "flat-prior projector identities", passed, f"max deviation {worst:.3e}"
    )


def run_all_checks(gaussian_score_offset: float = 0.0) -> list[CheckResult]:
    return [
        check_finite_differences(gaussian_score_offset=gaussian_score_offset),
        check_woodbury(),
        check_improper_limit(),
        check_chain_rule(),
        check_flat_projector(),
    ]
