"""Delimited output, run manifests, and float serialization.

Every float is written with 17 significant digits, enough to round-trip any
64-bit value exactly, so re-running a configuration reproduces the output
files byte for byte.  Each run also writes a JSON manifest recording the
fully resolved configuration, the master seed, and a content hash per
output file.
"""

from __future__ import annotations

import csv
import datetime
import hashlib
import json
import math
from pathlib import Path

from . import __version__
from .harness import Fig1Row, TrajectoryRow, UnivariateRow

FIG1_HEADER = ("scenario", "true_model", "rep", "candidate", "score", "selected")
TRAJECTORY_HEADER = ("scenario", "c", "rep", "n", "log_bf", "score_diff")
UNIVARIATE_HEADER = ("scenario", "rep", "criterion", "selected", "true_model", "correct")


def format_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def encode_rows(rows) -> tuple[tuple[str, ...], list[tuple[str, ...]]]:
    """Header and string cells for a homogeneous row list."""
    if not rows:
        raise ValueError("no rows to encode")
    first = rows[0]
    if isinstance(first, Fig1Row):
        header = FIG1_HEADER
        encoded = [
            (r.scenario, r.true_model, str(r.rep), r.candidate,
             format_float(r.score), r.selected)
            for r in rows
        ]
    elif isinstance(first, TrajectoryRow):
        header = TRAJECTORY_HEADER
        encoded = [
            (r.scenario, format_float(r.c), str(r.rep), str(r.n),
             format_float(r.log_bf), format_float(r.score_diff))
            for r in rows
        ]
    elif isinstance(first, UnivariateRow):
        header = UNIVARIATE_HEADER
        encoded = [
            (r.scenario, str(r.rep), r.criterion, r.selected,
             r.true_model, str(r.correct))
            for r in rows
        ]
    else:
        raise TypeError(f"unrecognized row type: {type(first).__name__}")
    return header, encoded


def write_csv(path, header, encoded_rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(encoded_rows)


def read_csv(path) -> tuple[tuple[str, ...], list[dict[str, str]]]:
    with Path(path).open("r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = tuple(next(reader))
        except StopIteration:
            return (), []
        rows = [dict(zip(header, row)) for row in reader]
    return header, rows


def sha256_of(path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(path, config_dict: dict, output_paths, row_count: int) -> dict:
    """Write the run manifest next to the outputs and return it."""
    manifest = {
        "tool": "scoreselect",
        "version": __version__,
        "created_utc": datetime.datetime.now(datetime.timezone.utc)
        .replace(microsecond=0)
        .isoformat(),
        "master_seed": config_dict.get("master_seed"),
        "config": config_dict,
        "rows": row_count,
        "outputs": [
            {"file": Path(p).name, "sha256": sha256_of(p)} for p in output_paths
        ],
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return manifest
