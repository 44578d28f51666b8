"""Seeded Monte Carlo studies over linear and univariate candidate models.

Five named scenarios:

fig1
    Seven nested Gaussian linear models over six coefficient slots
    (intercept plus five standard normal covariates), scored on the full
    observation vector per replication for four different generating
    truths.  Emits one score row per (truth, replication, candidate).

fig2, fig3
    Two-model comparisons along growing sample size: per replication one
    long dataset is drawn and every prefix length n is evaluated with both
    the log Bayes factor and the difference of the full-vector scores, for
    each prior variance multiplier c (prior covariance c * sigma2 * I).
    fig2 compares intercept-only against a single covariate (non-nested,
    intercept-only true); fig3 compares the first three slots against all
    six (nested, the six-slot model true).

gamma-normal, pareto-normal
    Two univariate candidates (the scenario family and a Normal with known
    variance) scored by the accumulated one-step score and by the log
    marginal; data generated from the scenario family.

Replications are independent: each owns a generator seeded by a stable
hash of (master seed, scenario, replication, tag), so results are
bit-identical regardless of thread count or execution order.  Row lists
come out in a canonical order.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from typing import Callable, Iterable, Sequence

import numpy as np

from . import families, samplers
from .errors import InvalidParameters, DegenerateFit, OutOfSupport
from .linear import (
    Criterion,
    IMPROPER_FLAT,
    LinearModelSpec,
    ProperGaussian,
    prefix_joint_statistics,
    multivariate_score,
)

SCENARIOS = ("fig1", "fig2", "fig3", "gamma-normal", "pareto-normal")
TRAJECTORY_SCENARIOS = ("fig2", "fig3")
UNIVARIATE_SCENARIOS = ("gamma-normal", "pareto-normal")

THREADS_ENV_VAR = "SCORE_SELECT_THREADS"

_SCENARIO_DEFAULTS = {
    "fig1": {"n": 100, "reps": 1000},
    "fig2": {"n": 1000, "reps": 20},
    "fig3": {"n": 1000, "reps": 20},
    "gamma-normal": {"n": 100, "reps": 1000},
    "pareto-normal": {"n": 100, "reps": 1000},
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a scenario run depends on; echoed in full to the manifest.

    ``prior`` applies to the fig1 candidates: "improper" or "proper:C".
    ``c_grid`` applies to the trajectory scenarios, whose candidates always
    carry proper priors with covariance c * sigma2 * I.  The remaining
    fields pin the univariate study design: generating parameters, the
    conjugate prior hyperparameters (a, b) of the scenario family, and the
    Normal candidate's known variance, prior mean and prior variance.
    """

    scenario: str
    n: int
    reps: int
    sigma2: float = 10.0
    master_seed: int = 0
    prior: str = "improper"
    c_grid: tuple[float, ...] = (1.0, 10.0, 100.0, 1000.0)
    gamma_shape: float = 2.0
    gamma_rate: float = 1.0
    pareto_x_min: float = 1.0
    pareto_shape: float = 3.0
    normal_sigma2: float = 1.0
    normal_prior_mean: float = 0.0
    normal_prior_var: float = 1.0
    conjugate_a: float = 1.0
    conjugate_b: float = 1.0

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise InvalidParameters(
                f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}"
            )
        if self.reps < 1:
            raise InvalidParameters("reps must be at least 1")
        if self.n < 1:
            raise InvalidParameters("n must be at least 1")
        if self.scenario in TRAJECTORY_SCENARIOS and self.n < 2:
            raise InvalidParameters("trajectory scenarios need n >= 2")
        if self.sigma2 <= 0:
            raise InvalidParameters("sigma2 must be positive")
        _parse_prior_label(self.prior)
        grid = tuple(float(c) for c in self.c_grid)
        if self.scenario in TRAJECTORY_SCENARIOS:
            if not grid:
                raise InvalidParameters("trajectory scenarios need a non-empty c grid")
            if any(c <= 0 for c in grid):
                raise InvalidParameters("prior variance multipliers must be positive")
        object.__setattr__(self, "c_grid", grid)

    @staticmethod
    def for_scenario(scenario: str, **overrides) -> "ExperimentConfig":
        """Config with the scenario's default n and reps unless overridden."""
        base = dict(_SCENARIO_DEFAULTS.get(scenario, {"n": 100, "reps": 100}))
        base.update({k: v for k, v in overrides.items() if v is not None})
        return ExperimentConfig(scenario=scenario, **base)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out


def _parse_prior_label(label: str) -> ProperGaussian | None:
    """Validate a prior label; return None for "improper", the multiplier
    is applied later for "proper:C"."""
    if label == "improper":
        return None
    if label.startswith("proper:"):
        try:
            c = float(label.split(":", 1)[1])
        except ValueError:
            raise InvalidParameters(f"bad prior label {label!r}; use proper:C")
        if c <= 0:
            raise InvalidParameters("prior variance multiplier must be positive")
        return c
    raise InvalidParameters(
        f"bad prior label {label!r}; expected 'improper' or 'proper:C'"
    )


def _prior_for(label: str, p: int, sigma2: float):
    c = _parse_prior_label(label)
    if c is None:
        return IMPROPER_FLAT
    return ProperGaussian.isotropic(p, c, sigma2)


def derive_seed(
    master_seed: int, scenario_tag: str, rep_index: int, extra_tag: str = ""
) -> int:
    """Stable 64-bit stream seed from a hash of the identifying fields.

    Identical inputs always map to the same seed (across runs and
    platforms); changing any field moves to an unrelated stream.
    """
    payload = f"{master_seed}|{scenario_tag}|{rep_index}|{extra_tag}".encode()
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "big")


def resolve_threads(requested: int | None = None) -> int:
    """Worker count: explicit argument, else the SCORE_SELECT_THREADS
    environment variable, with 0 (or unset) meaning one per CPU."""
    if requested is None:
        raw = os.environ.get(THREADS_ENV_VAR, "0")
        try:
            requested = int(raw)
        except ValueError:
            raise InvalidParameters(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}")
    if requested < 0:
        raise InvalidParameters("thread count must be nonnegative")
    if requested == 0:
        requested = os.cpu_count() or 1
    return requested


def _map_tasks(fn: Callable, tasks: Sequence, threads: int | None):
    """Apply fn over tasks, preserving task order in the results."""
    workers = resolve_threads(threads)
    if workers <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


# ----------------------------------------------------------------------
# candidate sets
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class CandidateSet:
    """Candidate supports (column index tuples) over a slot design, with the
    generating truth."""

    labels: tuple[str, ...]
    supports: tuple[tuple[int, ...], ...]
    slot_count: int
    true_index: int

    def __post_init__(self):
        if len(set(self.supports)) != len(self.supports):
            raise InvalidParameters("candidate supports must be distinct")
        if not 0 <= self.true_index < len(self.supports):
            raise InvalidParameters("true model must be one of the candidates")

    @property
    def true_theta(self) -> np.ndarray:
        theta = np.zeros(self.slot_count)
        theta[list(self.supports[self.true_index])] = 1.0
        return theta


FIG1_TRUE_MODELS = ("M1", "M3", "M5", "M7")


def nested_candidates(true_label: str) -> CandidateSet:
    """M1..M6 take the first 1..6 slots; M7 takes none (fixed zero mean)."""
    supports = tuple(tuple(range(k)) for k in range(1, 7)) + ((),)
    labels = tuple(f"M{k}" for k in range(1, 8))
    return CandidateSet(
        labels=labels,
        supports=supports,
        slot_count=6,
        true_index=labels.index(true_label),
    )


def trajectory_candidates(scenario: str) -> CandidateSet:
    """fig2: intercept-only (true) against the lone covariate; fig3: the
    six-slot model (true) against its first three slots."""
    if scenario == "fig2":
        return CandidateSet(
            labels=("M1", "M0"),
            supports=((0,), (1,)),
            slot_count=2,
            true_index=0,
        )
    if scenario == "fig3":
        return CandidateSet(
            labels=("M6", "M3"),
            supports=(tuple(range(6)), (0, 1, 2)),
            slot_count=6,
            true_index=0,
        )
    raise InvalidParameters(f"not a trajectory scenario: {scenario!r}")


def _design_matrix(rng: np.random.Generator, n: int, slots: int) -> np.ndarray:
    """Slot design: column 0 is the intercept, the rest standard normal,
    redrawn per replication."""
    return np.column_stack([np.ones(n), rng.standard_normal((n, slots - 1))])


# ----------------------------------------------------------------------
# fig1: nested-model score table
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class Fig1Row:
    scenario: str
    true_model: str
    rep: int
    candidate: str
    score: float
    selected: str


def draw_fig1_dataset(
    config: ExperimentConfig, true_label: str, rep: int
) -> tuple[np.ndarray, np.ndarray]:
    """The (X, y) pair a fig1 replication scores, drawn from its own stream
    (design first, then noise)."""
    cands = nested_candidates(true_label)
    rng = np.random.default_rng(
        derive_seed(config.master_seed, "fig1", rep, f"true={true_label}")
    )
    X = _design_matrix(rng, config.n, cands.slot_count)
    y = X @ cands.true_theta + np.sqrt(config.sigma2) * rng.standard_normal(config.n)
    return X, y


def fig1_specs(
    config: ExperimentConfig, X: np.ndarray, prior: str | None = None
) -> list[LinearModelSpec]:
    """The seven candidate specs on a drawn design (each candidate sees only
    its own columns)."""
    cands = nested_candidates("M1")
    label = config.prior if prior is None else prior
    return [
        LinearModelSpec(
            design=X[:, list(support)],
            sigma2=config.sigma2,
            prior=_prior_for(label, len(support), config.sigma2),
            name=name,
        )
        for name, support in zip(cands.labels, cands.supports)
    ]


def run_fig1(config: ExperimentConfig, threads: int | None = None) -> list[Fig1Row]:
    """Score all seven candidates per replication for each generating truth.

    Each replication draws a fresh design and observation vector, scores
    every candidate on the full vector, and records the argmin candidate.
    """
    if config.scenario != "fig1":
        raise InvalidParameters("run_fig1 needs a fig1 config")
    labels = nested_candidates("M1").labels

    def one(task: tuple[str, int]) -> list[Fig1Row]:
        true_label, rep = task
        X, y = draw_fig1_dataset(config, true_label, rep)
        specs = fig1_specs(config, X)
        scores = [multivariate_score(spec, y) for spec in specs]
        selected = labels[int(np.argmin(scores))]
        return [
            Fig1Row(
                scenario="fig1",
                true_model=true_label,
                rep=rep,
                candidate=name,
                score=float(score),
                selected=selected,
            )
            for name, score in zip(labels, scores)
        ]

    tasks = [
        (true_label, rep)
        for true_label in FIG1_TRUE_MODELS
        for rep in range(config.reps)
    ]
    blocks = _map_tasks(one, tasks, threads)
    return [row for block in blocks for row in block]


def fig1_selection_frequencies(rows: Iterable[Fig1Row]) -> dict[str, float]:
    """Fraction of replications whose argmin candidate is the truth, per
    generating truth."""
    hits: dict[str, set[int]] = {}
    totals: dict[str, set[int]] = {}
    for row in rows:
        totals.setdefault(row.true_model, set()).add(row.rep)
        if row.selected == row.true_model:
            hits.setdefault(row.true_model, set()).add(row.rep)
    return {
        truth: len(hits.get(truth, set())) / len(reps)
        for truth, reps in totals.items()
    }


# ----------------------------------------------------------------------
# fig2 / fig3: growing-sample trajectories
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class TrajectoryRow:
    """One prefix evaluation; positive log_bf and score_diff both favor the
    true model (score_diff = score(alternative) - score(true))."""

    scenario: str
    c: float
    rep: int
    n: int
    log_bf: float
    score_diff: float


def draw_trajectory_dataset(
    config: ExperimentConfig, rep: int
) -> tuple[np.ndarray, np.ndarray]:
    """The single long (X, y) dataset a trajectory replication slices into
    prefixes; shared by every prior variance multiplier c."""
    cands = trajectory_candidates(config.scenario)
    rng = np.random.default_rng(
        derive_seed(config.master_seed, config.scenario, rep, "data")
    )
    X = _design_matrix(rng, config.n, cands.slot_count)
    y = X @ cands.true_theta + np.sqrt(config.sigma2) * rng.standard_normal(config.n)
    return X, y


def run_trajectory(
    config: ExperimentConfig, threads: int | None = None
) -> list[TrajectoryRow]:
    """Evaluate both statistics on every prefix of one draw per replication.

    Prefixes are nested (never redrawn per n), which is what makes the
    emitted trajectories smooth in n.  Rows come out ordered by
    (c, rep, n).
    """
    if config.scenario not in TRAJECTORY_SCENARIOS:
        raise InvalidParameters("run_trajectory needs a fig2 or fig3 config")
    cands = trajectory_candidates(config.scenario)
    true_cols = list(cands.supports[cands.true_index])
    alt_cols = list(cands.supports[1 - cands.true_index])

    def one(rep: int) -> dict[float, list[TrajectoryRow]]:
        X, y = draw_trajectory_dataset(config, rep)
        by_c: dict[float, list[TrajectoryRow]] = {}
        for c in config.c_grid:
            h_true, lm_true = prefix_joint_statistics(
                X[:, true_cols],
                y,
                config.sigma2,
                ProperGaussian.isotropic(len(true_cols), c, config.sigma2),
            )
            h_alt, lm_alt = prefix_joint_statistics(
                X[:, alt_cols],
                y,
                config.sigma2,
                ProperGaussian.isotropic(len(alt_cols), c, config.sigma2),
            )
            by_c[c] = [
                TrajectoryRow(
                    scenario=config.scenario,
                    c=c,
                    rep=rep,
                    n=i + 1,
                    log_bf=float(lm_true[i] - lm_alt[i]),
                    score_diff=float(h_alt[i] - h_true[i]),
                )
                for i in range(config.n)
            ]
        return by_c

    blocks = _map_tasks(one, list(range(config.reps)), threads)
    rows: list[TrajectoryRow] = []
    for c in config.c_grid:
        for rep in range(config.reps):
            rows.extend(blocks[rep][c])
    return rows


def estimate_slope_ratio(
    rows: Sequence[TrajectoryRow], window: float = 0.5, c: float | None = None
) -> float:
    """Slope of mean log_bf over slope of mean score_diff, fitted by least
    squares against n over the trailing `window` fraction of sample sizes.

    Rows must come from a single prior variance multiplier (pass ``c`` to
    filter); replications are averaged per n first.
    """
    if not 0.0 < window <= 1.0:
        raise InvalidParameters("window must lie in (0, 1]")
    pool = [r for r in rows if c is None or r.c == c]
    if not pool:
        raise InvalidParameters("no rows to fit")
    cs = {r.c for r in pool}
    if len(cs) != 1:
        raise InvalidParameters(
            f"rows span several prior variance multipliers {sorted(cs)}; pass c="
        )
    by_n: dict[int, list[tuple[float, float]]] = {}
    for r in pool:
        by_n.setdefault(r.n, []).append((r.log_bf, r.score_diff))
    ns = np.array(sorted(by_n))
    mean_bf = np.array([np.mean([v[0] for v in by_n[n]]) for n in ns])
    mean_sd = np.array([np.mean([v[1] for v in by_n[n]]) for n in ns])
    k = max(2, int(round(window * len(ns))))
    tail = slice(len(ns) - k, None)
    slope_bf = float(np.polyfit(ns[tail], mean_bf[tail], 1)[0])
    slope_sd = float(np.polyfit(ns[tail], mean_sd[tail], 1)[0])
    if slope_sd <= 0:
        raise DegenerateFit(f"score-difference slope is not positive: {slope_sd}")
    return slope_bf / slope_sd


# ----------------------------------------------------------------------
# gamma-normal / pareto-normal: univariate selection accuracy
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class UnivariateRow:
    scenario: str
    rep: int
    criterion: str
    selected: str
    true_model: str
    correct: int


@dataclass(frozen=True)
class UnivariateDesign:
    """Resolved generating distribution and candidate families of a study."""

    truth_name: str
    generator: samplers.Distribution
    candidate_names: tuple[str, ...]
    candidates: tuple[families.ConjugateFamily, ...]


def univariate_design(config: ExperimentConfig) -> UnivariateDesign:
    normal_candidate = families.NormalKnownVar(
        sigma2=config.normal_sigma2,
        prior_mean=config.normal_prior_mean,
        prior_var=config.normal_prior_var,
    )
    if config.scenario == "gamma-normal":
        return UnivariateDesign(
            truth_name="gamma",
            generator=samplers.Gamma(shape=config.gamma_shape, rate=config.gamma_rate),
            candidate_names=("gamma", "normal"),
            candidates=(
                families.GammaKnownShape(
                    shape=config.gamma_shape, a=config.conjugate_a, b=config.conjugate_b
                ),
                normal_candidate,
            ),
        )
    if config.scenario == "pareto-normal":
        return UnivariateDesign(
            truth_name="pareto",
            generator=samplers.Pareto(
                x_min=config.pareto_x_min, shape=config.pareto_shape
            ),
            candidate_names=("pareto", "normal"),
            candidates=(
                families.ParetoKnownScale(
                    x_min=config.pareto_x_min, a=config.conjugate_a, b=config.conjugate_b
                ),
                normal_candidate,
            ),
        )
    raise InvalidParameters(f"not a univariate scenario: {config.scenario!r}")


def score_univariate_candidates(
    candidates: Sequence[families.ConjugateFamily], data
) -> tuple[list[float], list[float], list[bool]]:
    """Both criteria for every candidate, disqualifying candidates whose
    support excludes any observation (loss +inf, log marginal -inf)."""
    hyv: list[float] = []
    logm: list[float] = []
    disqualified: list[bool] = []
    for fam in candidates:
        try:
            hyv.append(families.prequential_hyvarinen(fam, data))
            logm.append(families.log_marginal(fam, data))
            disqualified.append(False)
        except OutOfSupport:
            hyv.append(float("inf"))
            logm.append(float("-inf"))
            disqualified.append(True)
    return hyv, logm, disqualified


def run_univariate_study(
    config: ExperimentConfig, threads: int | None = None
) -> list[UnivariateRow]:
    """Per replication: sample from the scenario family, score both
    candidates under both criteria, and record both selections."""
    design = univariate_design(config)

    def one(rep: int) -> list[UnivariateRow]:
        seed = derive_seed(config.master_seed, config.scenario, rep, "data")
        data = samplers.sample(samplers.SamplerSpec(design.generator, seed), config.n)
        hyv, logm, _ = score_univariate_candidates(design.candidates, data)
        picks = {
            Criterion.MIN_HYVARINEN.value: design.candidate_names[int(np.argmin(hyv))],
            Criterion.MAX_MARGINAL.value: design.candidate_names[int(np.argmax(logm))],
        }
        return [
            UnivariateRow(
                scenario=config.scenario,
                rep=rep,
                criterion=crit,
                selected=picked,
                true_model=design.truth_name,
                correct=int(picked == design.truth_name),
            )
            for crit, picked in picks.items()
        ]

    blocks = _map_tasks(one, list(range(config.reps)), threads)
    return [row for block in blocks for row in block]


def selection_accuracy(rows: Iterable[UnivariateRow]) -> dict[str, float]:
    """Fraction of correct selections per criterion."""
    counts: dict[str, list[int]] = {}
    for row in rows:
        counts.setdefault(row.criterion, []).append(row.correct)
    return {crit: float(np.mean(vals)) for crit, vals in counts.items()}


def run_scenario(config: ExperimentConfig, threads: int | None = None):
    """Dispatch to the scenario's runner; returns its row list."""
    if config.scenario == "fig1":
        return run_fig1(config, threads)
    if config.scenario in TRAJECTORY_SCENARIOS:
        return run_trajectory(config, threads)
    return run_univariate_study(config, threads)
