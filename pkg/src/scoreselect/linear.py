"""Gaussian linear models with proper Gaussian or flat improper priors.

Model: y | theta ~ N(X theta, sigma2 I) with a known noise variance and a
prior on the p coefficients that is either proper Gaussian N(m, V) or flat.
Integrating theta out leaves a Gaussian marginal for the n-vector y whose
precision matrix is assembled from p x p factorizations only:

    proper:  K = I/sigma2 - X (V^-1 + X'X/sigma2)^-1 X' / sigma2^2
    flat:    K = (I - P) / sigma2,  P the orthogonal projector onto col(X)

(the low-rank inversion identity for the proper case; its limit as the
prior variance grows without bound for the flat case).  The flat-prior K is
singular with rank n - p.  The derivative-based score tolerates that, while
the marginal likelihood does not exist: requesting it raises
ImproperPriorHasNoMarginalMass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .errors import (
    DimensionMismatch,
    ImproperPriorHasNoMarginalMass,
    InsufficientBurnIn,
    InvalidParameters,
    NonSPDPrior,
    RankDeficientDesign,
)
from .scoring import hyvarinen_gaussian


@dataclass(frozen=True)
class ProperGaussian:
    """Proper N(mean, cov) prior on the coefficient vector."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.asarray(self.cov, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise DimensionMismatch("prior covariance must be a square matrix")
        if cov.shape[0] != mean.shape[0]:
            raise DimensionMismatch("prior mean and covariance sizes differ")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @staticmethod
    def isotropic(p: int, c: float, sigma2: float) -> "ProperGaussian":
        """Zero-mean prior with covariance c * sigma2 * I."""
        if c <= 0:
            raise InvalidParameters("prior variance multiplier c must be positive")
        return ProperGaussian(np.zeros(p), c * sigma2 * np.eye(p))


@dataclass(frozen=True)
class ImproperFlat:
    """Flat (Lebesgue) prior on the coefficient vector."""


IMPROPER_FLAT = ImproperFlat()

Prior = ProperGaussian | ImproperFlat


@dataclass(frozen=True)
class LinearModelSpec:
    """Design matrix, known noise variance and coefficient prior.

    ``design`` is n x p; p = 0 encodes a fixed zero-mean model with no
    coefficients.  Under a flat prior the design must have full column rank
    with p <= n (checked when the marginal is formed).
    """

    design: np.ndarray
    sigma2: float
    prior: Prior
    name: str = ""

    def __post_init__(self):
        X = np.asarray(self.design, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise DimensionMismatch("design must be a 2-d array")
        if X.shape[0] < 1:
            raise InvalidParameters("design needs at least one row")
        if self.sigma2 <= 0:
            raise InvalidParameters("sigma2 must be positive")
        if isinstance(self.prior, ProperGaussian) and self.prior.dim != X.shape[1]:
            raise DimensionMismatch(
                f"prior dimension {self.prior.dim} does not match design with "
                f"{X.shape[1]} columns"
            )
        object.__setattr__(self, "design", X)
        object.__setattr__(self, "sigma2", float(self.sigma2))

    @property
    def n_obs(self) -> int:
        return self.design.shape[0]

    @property
    def n_coef(self) -> int:
        return self.design.shape[1]


@dataclass(frozen=True)
class GaussianMarginal:
    """Mean and (possibly singular) precision of a model's marginal for y.

    ``log_det_cov`` is the log determinant of the marginal covariance,
    defined only when the precision has full rank; it is None otherwise.
    """

    mean: np.ndarray
    precision: np.ndarray
    rank: int
    log_det_cov: float | None


def _check_y(spec: LinearModelSpec, y) -> np.ndarray:
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (spec.n_obs,):
        raise DimensionMismatch(
            f"y has shape {y.shape}, expected ({spec.n_obs},)"
        )
    return y


def marginal_proper(spec: LinearModelSpec) -> GaussianMarginal:
    """Marginal of y under a proper prior, via p x p factorizations.

    With A = V^-1 + X'X/sigma2 (factored by Cholesky, never inverted
    densely in n dimensions):

        K = I/sigma2 - X A^-1 X' / sigma2^2
        log det cov = n log sigma2 + log det V + log det A

    the second line being the determinant counterpart of the low-rank
    inversion identity.
    """
    if not isinstance(spec.prior, ProperGaussian):
        raise InvalidParameters("marginal_proper requires a proper Gaussian prior")
    X = spec.design
    n, p = X.shape
    s2 = spec.sigma2
    if p == 0:
        return GaussianMarginal(
            mean=np.zeros(n),
            precision=np.eye(n) / s2,
            rank=n,
            log_det_cov=n * math.log(s2),
        )
    try:
        L_v = np.linalg.cholesky(spec.prior.cov)
    except np.linalg.LinAlgError:
        raise NonSPDPrior("prior covariance is not symmetric positive definite")
    v_inv = cho_solve((L_v, True), np.eye(p))
    A = v_inv + X.T @ X / s2
    A = 0.5 * (A + A.T)
    try:
        L_a = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise NonSPDPrior("posterior precision factorization failed")
    W = solve_triangular(L_a, X.T, lower=True)
    K = (np.eye(n) - W.T @ W / s2) / s2
    K = 0.5 * (K + K.T)
    log_det_cov = (
        n * math.log(s2)
        + 2.0 * float(np.sum(np.log(np.diag(L_v))))
        + 2.0 * float(np.sum(np.log(np.diag(L_a))))
    )
    return GaussianMarginal(
        mean=X @ spec.prior.mean, precision=K, rank=n, log_det_cov=log_det_cov
    )


def marginal_improper(spec: LinearModelSpec) -> GaussianMarginal:
    """Marginal of y under the flat prior: K = (I - P)/sigma2, rank n - p.

    P is built from a thin orthogonal factorization of X rather than normal
    equations, for conditioning on near-collinear designs.
    """
    if not isinstance(spec.prior, ImproperFlat):
        raise InvalidParameters("marginal_improper requires a flat prior")
    X = spec.design
    n, p = X.shape
    s2 = spec.sigma2
    if p == 0:
        # No coefficients to integrate: the marginal is the proper N(0, s2 I).
        return GaussianMarginal(
            mean=np.zeros(n),
            precision=np.eye(n) / s2,
            rank=n,
            log_det_cov=n * math.log(s2),
        )
    if p > n:
        raise RankDeficientDesign(f"flat prior needs p <= n, got p={p}, n={n}")
    Q, R = np.linalg.qr(X)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag.min() <= max(n, p) * np.finfo(float).eps * diag.max():
        raise RankDeficientDesign("design matrix does not have full column rank")
    if p == n:
        # The projector is the identity: the flat prior absorbs y entirely.
        K = np.zeros((n, n))
    else:
        K = (np.eye(n) - Q @ Q.T) / s2
        K = 0.5 * (K + K.T)
    return GaussianMarginal(mean=np.zeros(n), precision=K, rank=n - p, log_det_cov=None)


def marginal(spec: LinearModelSpec) -> GaussianMarginal:
    if isinstance(spec.prior, ProperGaussian):
        return marginal_proper(spec)
    return marginal_improper(spec)


def multivariate_score(spec: LinearModelSpec, y) -> float:
    """Score of the full observation vector under the model's marginal.

    Under the flat prior this reduces to
    -2 (n - p)/sigma2 + ||(I - P) y||^2 / sigma2^2.
    """
    y = _check_y(spec, y)
    m = marginal(spec)
    return hyvarinen_gaussian(m.mean, m.precision, y)


def log_marginal_likelihood(spec: LinearModelSpec, y) -> float:
    """Log density of y after integrating the coefficients out.

    Only defined for proper priors: a flat prior leaves the marginal with an
    arbitrary scale, so Bayes factors against it are meaningless and the
    call raises ImproperPriorHasNoMarginalMass.
    """
    if isinstance(spec.prior, ImproperFlat):
        label = spec.name or "candidate"
        raise ImproperPriorHasNoMarginalMass(
            f"{label}: marginal likelihood is undefined under a flat improper prior"
        )
    y = _check_y(spec, y)
    m = marginal_proper(spec)
    r = y - m.mean
    n = spec.n_obs
    return (
        -0.5 * n * math.log(2.0 * math.pi)
        - 0.5 * m.log_det_cov
        - 0.5 * float(r @ m.precision @ r)
    )


def log_bayes_factor(spec_a: LinearModelSpec, spec_b: LinearModelSpec, y) -> float:
    """log marginal(a) - log marginal(b); positive favors model a."""
    return log_marginal_likelihood(spec_a, y) - log_marginal_likelihood(spec_b, y)


def _one_step_predictives(
    spec: LinearModelSpec, y: np.ndarray, start: int
) -> Iterator[tuple[int, float, float]]:
    """Yield (index, predictive mean, predictive variance) for scored steps.

    The coefficient posterior after i observations has precision
    Lambda = V^-1 + S_i/sigma2 (S_i the running X'X) for the proper prior,
    and Lambda = S_i/sigma2 for the flat prior; the predictive for the next
    observation is N(x' m_post, sigma2 + x' Lambda^-1 x).
    """
    X = spec.design
    n, p = X.shape
    s2 = spec.sigma2
    if p == 0:
        for i in range(start, n):
            yield i, 0.0, s2
        return
    proper = isinstance(spec.prior, ProperGaussian)
    if proper:
        L_v = np.linalg.cholesky(spec.prior.cov)
        lam = cho_solve((L_v, True), np.eye(p))
        b = lam @ spec.prior.mean
    else:
        lam = np.zeros((p, p))
        b = np.zeros(p)
    for j in range(min(start, n)):
        lam = lam + np.outer(X[j], X[j]) / s2
        b = b + X[j] * y[j] / s2
    for i in range(start, n):
        xi = X[i]
        try:
            factor = cho_factor(0.5 * (lam + lam.T))
        except np.linalg.LinAlgError:
            raise RankDeficientDesign(
                f"running design is rank deficient at step {i + 1}"
            )
        theta = cho_solve(factor, b)
        z = cho_solve(factor, xi)
        yield i, float(xi @ theta), s2 + float(xi @ z)
        lam = lam + np.outer(xi, xi) / s2
        b = b + xi * y[i] / s2


def _resolve_start(spec: LinearModelSpec, n: int, start: int | None) -> int:
    p = spec.n_coef
    if isinstance(spec.prior, ImproperFlat) and p > 0:
        burn_in = p if start is None else start
        if burn_in < p:
            raise InsufficientBurnIn(
                f"flat prior needs at least p={p} burn-in observations, got {burn_in}"
            )
        if n <= burn_in:
            raise InsufficientBurnIn(
                f"need more than {burn_in} observations to score, got {n}"
            )
        return burn_in
    resolved = 0 if start is None else start
    if resolved < 0 or resolved >= n:
        raise InvalidParameters(f"start must lie in [0, {n}), got {resolved}")
    return resolved


def prequential_score_linear(
    spec: LinearModelSpec, y, start: int | None = None
) -> float:
    """Sum of one-step-ahead predictive scores along y.

    Each step scores y_i against its Gaussian predictive N(mu_i, v_i),
    contributing -2/v_i + (y_i - mu_i)^2 / v_i^2.  Under a flat prior the
    first p observations have no proper predictive and are excluded; pass
    ``start`` to impose a common index set when comparing candidates with
    different p (sums over different index sets are not comparable).
    """
    y = _check_y(spec, y)
    begin = _resolve_start(spec, y.shape[0], start)
    total = 0.0
    for i, mu, v in _one_step_predictives(spec, y, begin):
        total += -2.0 / v + (y[i] - mu) ** 2 / v**2
    return total


def prequential_log_density_linear(
    spec: LinearModelSpec, y, start: int | None = None
) -> float:
    """Sum of one-step-ahead predictive log densities along y.

    For a proper prior with start 0 this equals the log marginal likelihood
    exactly (probability chain rule); the pair of routes is kept as a
    cross-check.
    """
    y = _check_y(spec, y)
    begin = _resolve_start(spec, y.shape[0], start)
    total = 0.0
    for i, mu, v in _one_step_predictives(spec, y, begin):
        total += -0.5 * math.log(2.0 * math.pi * v) - 0.5 * (y[i] - mu) ** 2 / v
    return total


class Criterion(str, Enum):
    """Model selection criterion: minimize the score or maximize the
    marginal likelihood."""

    MIN_HYVARINEN = "hyvarinen"
    MAX_MARGINAL = "bf"


@dataclass(frozen=True)
class ScoreReport:
    """Per-candidate values, their pairwise differences, and the selection."""

    criterion: str
    scores: tuple[float, ...]
    score_differences: tuple[tuple[float, ...], ...]
    selected: int
    names: tuple[str, ...] = ()

    @staticmethod
    def from_scores(
        criterion: Criterion | str,
        scores,
        names: tuple[str, ...] = (),
    ) -> "ScoreReport":
        crit = Criterion(criterion)
        values = tuple(float(s) for s in scores)
        if not values:
            raise InvalidParameters("cannot report on an empty candidate list")
        diffs = tuple(
            tuple(a - b for b in values) for a in values
        )
        if crit is Criterion.MIN_HYVARINEN:
            selected = int(np.argmin(values))
        else:
            selected = int(np.argmax(values))
        return ScoreReport(
            criterion=crit.value,
            scores=values,
            score_differences=diffs,
            selected=selected,
            names=names,
        )

    def to_dict(self) -> dict:
        out = {
            "criterion": self.criterion,
            "scores": list(self.scores),
            "score_differences": [list(row) for row in self.score_differences],
            "selected": self.selected,
        }
        if self.names:
            out["names"] = list(self.names)
            out["selected_name"] = self.names[self.selected]
        best = self.scores[self.selected]
        out["tie"] = sum(1 for s in self.scores if s == best) > 1
        return out


def select_model(
    candidates: list[LinearModelSpec] | tuple[LinearModelSpec, ...],
    y,
    criterion: Criterion | str,
) -> ScoreReport:
    """Score every candidate on y and pick the winner.

    MIN_HYVARINEN takes the argmin of the full-vector scores, MAX_MARGINAL
    the argmax of the log marginal likelihoods (proper priors only).  Ties
    resolve to the lowest candidate index.
    """
    crit = Criterion(criterion)
    if len(candidates) < 2:
        raise InvalidParameters("model selection needs at least two candidates")
    names = tuple(
        spec.name or f"candidate_{k}" for k, spec in enumerate(candidates)
    )
    if crit is Criterion.MAX_MARGINAL:
        for k, spec in enumerate(candidates):
            if isinstance(spec.prior, ImproperFlat):
                raise ImproperPriorHasNoMarginalMass(
                    f"{names[k]}: marginal likelihood is undefined under a flat "
                    "improper prior"
                )
        scores = [log_marginal_likelihood(spec, y) for spec in candidates]
    else:
        scores = [multivariate_score(spec, y) for spec in candidates]
    return ScoreReport.from_scores(crit, scores, names)


def prefix_joint_statistics(
    X, y, sigma2: float, prior: ProperGaussian
) -> tuple[np.ndarray, np.ndarray]:
    """Full-vector score and log marginal likelihood on every prefix of y.

    Returns (scores, log_marginals), each of length n, where entry i uses
    the first i+1 rows.  Algebraically identical to calling
    multivariate_score and log_marginal_likelihood per prefix, but runs on
    p x p accumulators (S = X'X, u = X'r, q = r'r for residuals r = y - Xm,
    and B = sigma2 V^-1 + S):

        trace K   = (n - trace(B^-1 S)) / sigma2
        ||K r||^2 = (q - 2 u'B^-1 u + (B^-1 u)' S (B^-1 u)) / sigma2^2
        r' K r    = (q - u'B^-1 u) / sigma2
        log det cov = (n - p) log sigma2 + log det V + log det B

    so growing-sample trajectories cost O(p^3) per step instead of O(n^2 p).
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    y = np.asarray(y, dtype=float)
    n_max, p = X.shape
    if y.shape != (n_max,):
        raise DimensionMismatch(f"y has shape {y.shape}, expected ({n_max},)")
    if sigma2 <= 0:
        raise InvalidParameters("sigma2 must be positive")
    if prior.dim != p:
        raise DimensionMismatch("prior dimension does not match design columns")
    scores = np.empty(n_max)
    log_marginals = np.empty(n_max)
    if p == 0:
        q = np.cumsum(y**2)
        ns = np.arange(1, n_max + 1, dtype=float)
        scores[:] = -2.0 * ns / sigma2 + q / sigma2**2
        log_marginals[:] = -0.5 * ns * math.log(2.0 * math.pi * sigma2) - 0.5 * q / sigma2
        return scores, log_marginals
    try:
        L_v = np.linalg.cholesky(prior.cov)
    except np.linalg.LinAlgError:
        raise NonSPDPrior("prior covariance is not symmetric positive definite")
    log_det_v = 2.0 * float(np.sum(np.log(np.diag(L_v))))
    M = sigma2 * cho_solve((L_v, True), np.eye(p))
    r = y - X @ prior.mean
    S = np.zeros((p, p))
    u = np.zeros(p)
    q = 0.0
    for i in range(n_max):
        xi = X[i]
        S += np.outer(xi, xi)
        u += xi * r[i]
        q += r[i] ** 2
        n = i + 1
        B = 0.5 * (M + S + (M + S).T)
        factor = cho_factor(B)
        log_det_b = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
        B_inv_u = cho_solve(factor, u)
        B_inv_S = cho_solve(factor, S)
        trace_K = (n - float(np.trace(B_inv_S))) / sigma2
        K_r_sq = (
            q - 2.0 * float(u @ B_inv_u) + float(B_inv_u @ S @ B_inv_u)
        ) / sigma2**2
        quad = (q - float(u @ B_inv_u)) / sigma2
        log_det_cov = (n - p) * math.log(sigma2) + log_det_v + log_det_b
        scores[i] = -2.0 * trace_K + K_r_sq
        log_marginals[i] = (
            -0.5 * n * math.log(2.0 * math.pi) - 0.5 * log_det_cov - 0.5 * quad
        )
    return scores, log_marginals
