"""Command line front end.

Subcommands:
    simulate   run a named study, writing <out>.csv plus <out>.manifest.json
               (and, with --plot, <out>.svg)
    score      score user-supplied data under candidate models from a JSON file
    check      run the numerical cross-check suite
    plot       render an emitted CSV as a static SVG

Exit codes: 0 success; 1 failed checks (check); 2 bad flags, parse or
schema errors; 3 runtime errors, including requesting Bayes factors for a
candidate with a flat improper prior.  Parallelism is capped by the
SCORE_SELECT_THREADS environment variable (0 or unset: one per CPU).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, families, harness, plots, report, samplers
from .errors import (
    ImproperPriorHasNoMarginalMass,
    ScoreSelectError,
)
from .linear import (
    Criterion,
    IMPROPER_FLAT,
    LinearModelSpec,
    ProperGaussian,
    ScoreReport,
    log_marginal_likelihood,
    multivariate_score,
)

_CONFIG_KEYS = ("scenario", "reps", "n", "sigma2", "seed", "prior", "c_grid", "out")


class _UsageError(Exception):
    """Flag, parse, or schema problem: exits with code 2."""


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scoreselect",
        description="Model selection with derivative-based scores and Bayes factors.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a named simulation study")
    sim.add_argument("--scenario", choices=harness.SCENARIOS)
    sim.add_argument("--reps", type=int)
    sim.add_argument("--n", type=int)
    sim.add_argument("--sigma2", type=float)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--prior", type=str, help="improper or proper:C")
    sim.add_argument("--c-grid", dest="c_grid", type=str,
                     help="comma-separated prior variance multipliers")
    sim.add_argument("--out", type=str, help="output path prefix")
    sim.add_argument("--config", type=str, help="JSON file of defaults; flags win")
    sim.add_argument("--plot", action="store_true",
                     help="also render <out>.svg next to the CSV")

    score = sub.add_parser("score", help="score user data under candidate models")
    score.add_argument("--model", required=True, help="candidate description (JSON)")
    score.add_argument("--data", required=True, help="one observation per line")
    score.add_argument("--criterion", required=True,
                       choices=[c.value for c in Criterion])

    chk = sub.add_parser("check", help="run the numerical cross-check suite")
    chk.add_argument("--inject-gaussian-bug", action="store_true",
                     help=argparse.SUPPRESS)

    plot = sub.add_parser("plot", help="render an emitted CSV as SVG")
    plot.add_argument("--in", dest="infile", required=True)
    plot.add_argument("--kind", required=True, choices=["box", "line"])
    plot.add_argument("--out", required=True)
    return parser


# ----------------------------------------------------------------------
# simulate
# ----------------------------------------------------------------------


def _parse_c_grid(raw) -> tuple[float, ...]:
    if isinstance(raw, (list, tuple)):
        values = [float(v) for v in raw]
    else:
        try:
            values = [float(part) for part in str(raw).split(",") if part.strip()]
        except ValueError:
            raise _UsageError(f"bad --c-grid value {raw!r}")
    if not values:
        raise _UsageError("empty --c-grid")
    return tuple(values)


def _resolve_simulate_options(args) -> dict:
    """Layer flag values over config-file values over built-in defaults."""
    options: dict = {}
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise _UsageError(f"cannot read config file {args.config}: {exc}")
        if not isinstance(loaded, dict):
            raise _UsageError("config file must hold a JSON object")
        unknown = set(loaded) - set(_CONFIG_KEYS)
        if unknown:
            raise _UsageError(f"unknown config keys: {sorted(unknown)}")
        options.update(loaded)
    for key in _CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            options[key] = flag
    if "scenario" not in options or options["scenario"] is None:
        raise _UsageError("missing --scenario")
    if options["scenario"] not in harness.SCENARIOS:
        raise _UsageError(f"unknown scenario {options['scenario']!r}")
    if "c_grid" in options and options["c_grid"] is not None:
        options["c_grid"] = _parse_c_grid(options["c_grid"])
    return options


def _cmd_simulate(args) -> int:
    options = _resolve_simulate_options(args)
    scenario = options["scenario"]
    out_prefix = options.get("out") or scenario
    config_kwargs = {
        "reps": options.get("reps"),
        "n": options.get("n"),
        "sigma2": options.get("sigma2"),
        "master_seed": options.get("seed"),
        "prior": options.get("prior"),
        "c_grid": options.get("c_grid"),
    }
    try:
        config = harness.ExperimentConfig.for_scenario(scenario, **config_kwargs)
    except ScoreSelectError as exc:
        raise _UsageError(str(exc))
    rows = harness.run_scenario(config)
    header, encoded = report.encode_rows(rows)
    csv_path = Path(f"{out_prefix}.csv")
    report.write_csv(csv_path, header, encoded)
    outputs = [csv_path]
    if args.plot:
        svg_path = Path(f"{out_prefix}.svg")
        _, parsed = report.read_csv(csv_path)
        if scenario == "fig1":
            plots.render_score_boxplots(parsed, svg_path)
            outputs.append(svg_path)
        elif scenario in harness.TRAJECTORY_SCENARIOS:
            plots.render_trajectory_lines(parsed, svg_path)
            outputs.append(svg_path)
        else:
            print(f"note: no figure defined for scenario {scenario}", file=sys.stderr)
    manifest_path = Path(f"{out_prefix}.manifest.json")
    report.write_manifest(manifest_path, config.to_dict(), outputs, len(rows))
    print(f"wrote {csv_path} ({len(rows)} rows) and {manifest_path}")
    return 0


# ----------------------------------------------------------------------
# score
# ----------------------------------------------------------------------


def _load_data(path: str) -> list[list[float]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _UsageError(f"cannot read data file {path}: {exc}")
    rows: list[list[float]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        try:
            rows.append([float(cell) for cell in stripped.split(",")])
        except ValueError:
            raise _UsageError(f"{path}:{lineno}: cannot parse {stripped!r} as numbers")
    if not rows:
        raise _UsageError(f"{path}: no observations")
    return rows


def _scalar_series(rows: list[list[float]], path: str) -> np.ndarray:
    for k, row in enumerate(rows, start=1):
        if len(row) != 1:
            raise _UsageError(
                f"{path}: line {k} has {len(row)} values; expected one per line"
            )
    return np.array([row[0] for row in rows])


def _linear_prior(entry, p: int, sigma2: float, name: str):
    if entry == "improper":
        return IMPROPER_FLAT
    if isinstance(entry, dict) and entry.get("type") == "proper":
        if "c" in entry:
            return ProperGaussian.isotropic(p, float(entry["c"]), sigma2)
        try:
            return ProperGaussian(
                np.asarray(entry["mean"], dtype=float),
                np.asarray(entry["cov"], dtype=float),
            )
        except KeyError as exc:
            raise _UsageError(f"candidate {name}: proper prior needs {exc} (or c)")
    raise _UsageError(
        f"candidate {name}: prior must be 'improper' or "
        "{'type': 'proper', 'c': ...} or {'type': 'proper', 'mean': ..., 'cov': ...}"
    )


_FAMILY_BUILDERS = {
    "normal-known-var": lambda e: families.NormalKnownVar(
        sigma2=float(e["sigma2"]),
        prior_mean=float(e.get("prior_mean", 0.0)),
        prior_var=float(e.get("prior_var", 1.0)),
    ),
    "gamma-known-shape": lambda e: families.GammaKnownShape(
        shape=float(e["shape"]), a=float(e.get("a", 1.0)), b=float(e.get("b", 1.0))
    ),
    "pareto-known-scale": lambda e: families.ParetoKnownScale(
        x_min=float(e["x_min"]), a=float(e.get("a", 1.0)), b=float(e.get("b", 1.0))
    ),
    "laplace": lambda e: samplers.Laplace(
        loc=float(e.get("loc", 0.0)), scale=float(e.get("scale", 1.0))
    ),
    "poisson": lambda e: samplers.Poisson(rate=float(e.get("rate", 1.0))),
}


def _load_model_file(path: str) -> dict:
    try:
        spec = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise _UsageError(f"cannot read model file {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise _UsageError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}")
    if not isinstance(spec, dict) or spec.get("kind") not in ("linear", "univariate"):
        raise _UsageError(f"{path}: top-level 'kind' must be 'linear' or 'univariate'")
    candidates = spec.get("candidates")
    if not isinstance(candidates, list) or not candidates:
        raise _UsageError(f"{path}: 'candidates' must be a non-empty list")
    return spec


def _score_linear(model: dict, y: np.ndarray, criterion: Criterion) -> ScoreReport:
    sigma2 = float(model.get("sigma2", 1.0))
    specs = []
    for k, entry in enumerate(model["candidates"]):
        name = str(entry.get("name", f"candidate_{k}"))
        design = np.asarray(entry.get("design", []), dtype=float)
        if design.ndim == 1:
            design = design.reshape(-1, 1)
        if design.size == 0:
            design = np.zeros((len(y), 0))
        if design.shape[0] != len(y):
            raise _UsageError(
                f"candidate {name}: design has {design.shape[0]} rows, data has {len(y)}"
            )
        prior = _linear_prior(entry.get("prior", "improper"), design.shape[1],
                              sigma2, name)
        specs.append(LinearModelSpec(design, sigma2, prior, name=name))
    names = tuple(s.name for s in specs)
    if criterion is Criterion.MAX_MARGINAL:
        scores = [log_marginal_likelihood(s, y) for s in specs]
    else:
        scores = [multivariate_score(s, y) for s in specs]
    return ScoreReport.from_scores(criterion, scores, names)


def _score_univariate(model: dict, data: np.ndarray, criterion: Criterion) -> ScoreReport:
    built = []
    for k, entry in enumerate(model["candidates"]):
        name = str(entry.get("name", f"candidate_{k}"))
        kind = entry.get("family")
        if kind not in _FAMILY_BUILDERS:
            raise _UsageError(
                f"candidate {name}: unknown family {kind!r}; expected one of "
                f"{sorted(_FAMILY_BUILDERS)}"
            )
        try:
            built.append((name, _FAMILY_BUILDERS[kind](entry)))
        except KeyError as exc:
            raise _UsageError(f"candidate {name}: missing field {exc}")
    for name, candidate in built:
        families.applicability_check(candidate)
    fams = [candidate for _, candidate in built]
    hyv, logm, _ = harness.score_univariate_candidates(fams, data)
    scores = logm if criterion is Criterion.MAX_MARGINAL else hyv
    return ScoreReport.from_scores(criterion, scores, tuple(n for n, _ in built))


def _report_json(rep: ScoreReport) -> str:
    payload = rep.to_dict()

    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return report.format_float(v)
        if isinstance(v, list):
            return [clean(item) for item in v]
        return v

    return json.dumps({k: clean(v) for k, v in payload.items()}, indent=2)


def _cmd_score(args) -> int:
    model = _load_model_file(args.model)
    rows = _load_data(args.data)
    series = _scalar_series(rows, args.data)
    criterion = Criterion(args.criterion)
    if model["kind"] == "linear":
        rep = _score_linear(model, series, criterion)
    else:
        rep = _score_univariate(model, series, criterion)
    print(_report_json(rep))
    return 0


# ----------------------------------------------------------------------
# check / plot
# ----------------------------------------------------------------------


def _cmd_check(args) -> int:
    from .selfcheck import run_all_checks

    offset = 1e-2 if args.inject_gaussian_bug else 0.0
    results = run_all_checks(gaussian_score_offset=offset)
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.name:<{width}}  {r.detail}")
    return 0 if all(r.passed for r in results) else 1


def _cmd_plot(args) -> int:
    header, rows = report.read_csv(args.infile)
    if not rows:
        raise _UsageError(f"{args.infile}: empty table")
    if args.kind == "box":
        if header != report.FIG1_HEADER:
            raise _UsageError(
                f"{args.infile}: header {header} does not match {report.FIG1_HEADER}"
            )
        plots.render_score_boxplots(rows, args.out)
    else:
        if header != report.TRAJECTORY_HEADER:
            raise _UsageError(
                f"{args.infile}: header {header} does not match "
                f"{report.TRAJECTORY_HEADER}"
            )
        plots.render_trajectory_lines(rows, args.out)
    print(f"wrote {args.out}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else int(exc.code)
    handlers = {
        "simulate": _cmd_simulate,
        "score": _cmd_score,
        "check": _cmd_check,
        "plot": _cmd_plot,
    }
    try:
        return handlers[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ImproperPriorHasNoMarginalMass as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ScoreSelectError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
