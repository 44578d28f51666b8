"""Static SVG figures for the emitted tables.

Rendering is deterministic: a fixed hash salt pins the ids matplotlib
embeds in the SVG and the date metadata is dropped, so identical input
yields identical bytes.  Box statistics are computed here (not inside
matplotlib) so they can be checked independently of the drawing.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_SVG_SALT = "scoreselect"


def boxplot_statistics(values, label: str = "") -> dict:
    """Median, quartiles, whiskers at 1.5 IQR, and outliers for one box."""
    arr = np.sort(np.asarray(values, dtype=float))
    q1, med, q3 = np.percentile(arr, [25.0, 50.0, 75.0])
    iqr = q3 - q1
    lo_fence = q1 - 1.5 * iqr
    hi_fence = q3 + 1.5 * iqr
    inside = arr[(arr >= lo_fence) & (arr <= hi_fence)]
    whislo = float(inside.min()) if inside.size else float(q1)
    whishi = float(inside.max()) if inside.size else float(q3)
    fliers = arr[(arr < whislo) | (arr > whishi)]
    return {
        "label": label,
        "med": float(med),
        "q1": float(q1),
        "q3": float(q3),
        "whislo": whislo,
        "whishi": whishi,
        "fliers": fliers.tolist(),
        "mean": float(arr.mean()),
    }


def _save_svg(fig, out_path) -> None:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context({"svg.hashsalt": _SVG_SALT}):
        fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)


def render_score_boxplots(rows: list[dict[str, str]], out_path) -> None:
    """One panel per generating truth, one box per candidate's scores."""
    truths = sorted({r["true_model"] for r in rows})
    candidates = sorted({r["candidate"] for r in rows})
    ncols = 2 if len(truths) > 1 else 1
    nrows = (len(truths) + ncols - 1) // ncols
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(5.0 * ncols, 3.6 * nrows), squeeze=False
    )
    for k, truth in enumerate(truths):
        ax = axes[k // ncols][k % ncols]
        stats = []
        for cand in candidates:
            scores = [
                float(r["score"])
                for r in rows
                if r["true_model"] == truth and r["candidate"] == cand
            ]
            stats.append(boxplot_statistics(scores, label=cand))
        ax.bxp(stats, showfliers=True)
        ax.set_title(f"true model {truth}")
        ax.set_ylabel("score")
    for k in range(len(truths), nrows * ncols):
        axes[k // ncols][k % ncols].set_axis_off()
    fig.tight_layout()
    _save_svg(fig, out_path)


def render_trajectory_lines(rows: list[dict[str, str]], out_path) -> None:
    """One panel per prior variance multiplier: mean log Bayes factor (red)
    and mean score difference (blue) against sample size."""
    cs = sorted({float(r["c"]) for r in rows})
    ncols = 2 if len(cs) > 1 else 1
    nrows = (len(cs) + ncols - 1) // ncols
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(5.0 * ncols, 3.2 * nrows), squeeze=False
    )
    for k, c in enumerate(cs):
        ax = axes[k // ncols][k % ncols]
        subset = [r for r in rows if float(r["c"]) == c]
        by_n: dict[int, list[tuple[float, float]]] = {}
        for r in subset:
            by_n.setdefault(int(r["n"]), []).append(
                (float(r["log_bf"]), float(r["score_diff"]))
            )
        ns = sorted(by_n)
        mean_bf = [float(np.mean([v[0] for v in by_n[n]])) for n in ns]
        mean_sd = [float(np.mean([v[1] for v in by_n[n]])) for n in ns]
        ax.plot(ns, mean_bf, color="red", label="log Bayes factor")
        ax.plot(ns, mean_sd, color="blue", label="score difference")
        ax.axhline(0.0, color="black", linewidth=0.6)
        ax.set_title(f"c = {c:g}")
        ax.set_xlabel("sample size")
        if k == 0:
            ax.legend(loc="upper left", fontsize=8)
    for k in range(len(cs), nrows * ncols):
        axes[k // ncols][k % ncols].set_axis_off()
    fig.tight_layout()
    _save_svg(fig, out_path)
