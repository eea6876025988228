"""Report figures written next to the text outputs."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def confusion_figure(cm, path, title="Confusion matrix"):
    counts = np.asarray(cm.counts)
    k = len(cm.classes)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(1.2 + 0.55 * k, 1.0 + 0.5 * k))
        im = ax.imshow(counts, cmap="Blues")
        ax.set_xticks(range(k), cm.classes, rotation=60, ha="right")
        ax.set_yticks(range(k), cm.classes)
        ax.set_xlabel("predicted")
        ax.set_ylabel("actual")
        ax.set_title(title)
        top = counts.max() if counts.size else 0
        for i in range(k):
            for j in range(k):
                ax.text(j, i, str(counts[i, j]), ha="center", va="center",
                        color="white" if counts[i, j] > top / 2 else "black")
        fig.colorbar(im, ax=ax, fraction=0.046, pad=0.04)
        fig.savefig(path)
        plt.close(fig)


def metrics_figure(rep, path):
    """Grouped bars of per-class precision, recall and F1."""
    x = np.arange(len(rep.classes))
    w = 0.27
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(max(4.0, 0.7 * len(x) + 1.5), 3.0))
        ax.bar(x - w, rep.precision, w, label="precision")
        ax.bar(x, rep.recall, w, label="recall")
        ax.bar(x + w, rep.f1, w, label="f1")
        ax.set_xticks(x, rep.classes, rotation=45, ha="right")
        ax.set_ylim(0, 1.05)
        ax.axhline(rep.accuracy, color="k", lw=0.8, ls="--", label=f"accuracy {rep.accuracy:.3f}")
        ax.legend(frameon=False, ncol=4, loc="upper center", bbox_to_anchor=(0.5, 1.18))
        fig.savefig(path)
        plt.close(fig)


def fold_figure(accuracies, path, chance=None):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.5, 2.6))
        folds = np.arange(1, len(accuracies) + 1)
        ax.plot(folds, accuracies, "o-")
        ax.axhline(np.mean(accuracies), color="k", lw=0.8, label="mean")
        if chance is not None:
            ax.axhline(chance, color="grey", lw=0.8, ls=":", label="chance")
        ax.set_xticks(folds)
        ax.set_xlabel("fold")
        ax.set_ylabel("accuracy")
        ax.set_ylim(0, 1.05)
        ax.legend(frameon=False)
        fig.savefig(path)
        plt.close(fig)
