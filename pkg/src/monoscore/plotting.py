"""Report figures written next to the delimited outputs."""

from __future__ import annotations

import os
from typing import Dict, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

BINS = np.linspace(0.0, 1.0, 51)


class StreamingHistogram:
    """Fixed-bin histograms over [0, 1], one per feature; memory is constant."""

    def __init__(self, features: Sequence[str], bins: np.ndarray = BINS):
        self.bins = bins
        self.counts = {f: np.zeros(len(bins) - 1, dtype=np.int64) for f in features}

    def add(self, values: Dict[str, float]) -> None:
        for feat, v in values.items():
            k = min(max(np.searchsorted(self.bins, v, side="right") - 1, 0), len(self.bins) - 2)
            self.counts[feat][k] += 1


def plot_feature_histograms(hist: StreamingHistogram, path, title: str = "") -> str:
    feats = list(hist.counts)
    fig, axes = plt.subplots(1, len(feats), figsize=(3.2 * len(feats), 3.0), squeeze=False)
    width = np.diff(hist.bins)
    for ax, feat in zip(axes[0], feats):
        ax.bar(hist.bins[:-1], hist.counts[feat], width=width, align="edge",
               color="0.35", edgecolor="none")
        ax.set_title(feat, fontsize=9)
        ax.set_xlim(0, 1)
        ax.set_xlabel("score")
    axes[0][0].set_ylabel("pairs")
    if title:
        fig.suptitle(title, fontsize=10)
    fig.tight_layout()
    _save(fig, path)
    return path


def plot_induction_scores(correct: Sequence[float], wrong: Sequence[float], path,
                          precision: float = float("nan")) -> str:
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    bins = np.linspace(-1, 1, 41)
    if len(correct):
        ax.hist(correct, bins=bins, alpha=0.7, label=f"correct ({len(correct)})", color="tab:blue")
    if len(wrong):
        ax.hist(wrong, bins=bins, alpha=0.7, label=f"wrong ({len(wrong)})", color="tab:red")
    ax.set_xlabel("top-1 cosine")
    ax.set_ylabel("queries")
    ax.set_title(f"precision@1 = {precision:.3f}", fontsize=10)
    ax.legend(fontsize=8, frameon=False)
    fig.tight_layout()
    _save(fig, path)
    return path


def _save(fig, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
