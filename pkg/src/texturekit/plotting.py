"""Report figures: confusion matrices and the four-classifier comparison chart.

Rendering uses the non-interactive Agg backend. SVG output is made
reproducible by fixing the hash salt and dropping the date metadata, so the
same report always renders to the same bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .fsutil import atomic_open  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "texturekit",
    "svg.fonttype": "none",
}
METRIC_LABELS = (("sn", "Sensitivity"), ("sp", "Specificity"), ("ac", "Accuracy"))


def save_figure(fig, path) -> Path:
    path = Path(path)
    fmt = path.suffix.lstrip(".").lower() or "svg"
    metadata = {"Date": None} if fmt == "svg" else None
    with atomic_open(path, "wb") as fh:
        fig.savefig(fh, format=fmt, metadata=metadata, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_confusion(confusion: dict, path, title: str = "") -> Path:
    """2x2 matrix; rows are the true class, columns the prediction (stroke first)."""
    grid = np.array([[confusion["tp"], confusion["fn"]],
                     [confusion["fp"], confusion["tn"]]])
    names = ["stroke", "non-stroke"]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.2, 2.8))
        ax.imshow(grid, cmap="Blues", vmin=0, vmax=max(1, grid.max()))
        for (r, c), v in np.ndenumerate(grid):
            ax.text(c, r, str(v), ha="center", va="center",
                    color="white" if v > grid.max() / 2 else "black")
        ax.set_xticks([0, 1], names)
        ax.set_yticks([0, 1], names)
        ax.set_xlabel("predicted")
        ax.set_ylabel("true")
        if title:
            ax.set_title(title)
        return save_figure(fig, path)


def plot_comparison(comparison: list, path, title: str = "LOOCV comparison") -> Path:
    """Grouped bars of SN/SP/AC (percent), one group per comparison column."""
    labels = [c.get("label", c.get("key", "")) for c in comparison]
    x = np.arange(len(comparison))
    width = 0.26
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.2, 3.0))
        for n, (metric, name) in enumerate(METRIC_LABELS):
            vals = [c.get(metric) for c in comparison]
            heights = [np.nan if v is None else v for v in vals]
            bars = ax.bar(x + (n - 1) * width, heights, width, label=name)
            ax.bar_label(bars, labels=["n/a" if v is None else f"{v:.1f}" for v in vals],
                         fontsize=6, padding=1)
        ax.set_xticks(x, labels)
        ax.set_ylim(0, 110)
        ax.set_ylabel("percent")
        ax.set_title(title)
        ax.legend(loc="lower right", ncols=3, frameon=False)
        return save_figure(fig, path)


def plot_scores(records, path, title: str = "Per-sample fusion scores") -> Path:
    """Haralick vs NMF score scatter for multi-level records, colored by truth."""
    pts = [r for r in records if r.get("score_haralick") is not None and r.get("score_nmf") is not None]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.6, 3.4))
        for truth, color, name in ((1, "tab:red", "stroke"), (-1, "tab:blue", "non-stroke")):
            sel = [r for r in pts if int(r["truth"]) == truth]
            ax.scatter([r["score_haralick"] for r in sel], [r["score_nmf"] for r in sel],
                       s=14, c=color, label=name)
        lim = max([1.0] + [abs(r["score_haralick"]) for r in pts] + [abs(r["score_nmf"]) for r in pts])
        ax.plot([-lim, lim], [-lim, lim], color="0.7", lw=0.6)
        ax.plot([-lim, lim], [lim, -lim], color="0.7", lw=0.6)
        ax.axhline(0, color="0.4", lw=0.5)
        ax.axvline(0, color="0.4", lw=0.5)
        ax.set_xlabel("Haralick score")
        ax.set_ylabel("NMF score")
        ax.set_title(title)
        ax.legend(frameon=False)
        return save_figure(fig, path)
