"""Report figures.

Figures are written as SVG with a fixed hash salt and no date stamp, so the
same data always produces the same bytes.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib as mpl

mpl.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

RC = {
    "svg.hashsalt": "hotscore",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 100,
}


def figsize(width: float = 6.0, height: float | None = None) -> tuple[float, float]:
    golden = (math.sqrt(5) - 1.0) / 2.0
    return width, height or width * golden


def new(width: float = 6.0, height: float | None = None, nrows: int = 1, ncols: int = 1):
    with mpl.rc_context(RC):
        return plt.subplots(nrows=nrows, ncols=ncols, figsize=figsize(width, height))


def save(fig, path: str | Path) -> Path:
    path = Path(path).with_suffix(".svg")
    path.parent.mkdir(parents=True, exist_ok=True)
    with mpl.rc_context(RC):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def histogram(values: Sequence[float], path, title: str, xlabel: str, bins: int = 20) -> Path:
    fig, ax = new()
    ax.hist(list(values), bins=bins, color="#4c72b0", edgecolor="white")
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("count")
    return save(fig, path)


def component_boxplot(columns: Mapping[str, Sequence[float]], path, title: str = "Score components") -> Path:
    fig, ax = new(width=7.0)
    names = list(columns)
    ax.boxplot([list(columns[n]) for n in names], tick_labels=names, showfliers=False)
    ax.set_title(title)
    ax.set_ylabel("value")
    return save(fig, path)


def stats_bars(table: Mapping, path, title: str = "Feature means") -> Path:
    """Horizontal bars of each row's mean, log-scaled when values span decades."""
    labels = list(table)
    means = [max(table[k].mean, 0.0) for k in labels]
    fig, ax = new(width=7.0, height=0.35 * len(labels) + 1.0)
    ax.barh(range(len(labels)), means, color="#55a868")
    ax.set_yticks(range(len(labels)))
    ax.set_yticklabels(labels)
    ax.invert_yaxis()
    positive = [m for m in means if m > 0]
    if positive and max(positive) / min(positive) > 100:
        ax.set_xscale("log")
    ax.set_title(title)
    return save(fig, path)
