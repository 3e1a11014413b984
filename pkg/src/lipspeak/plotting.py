"""Matplotlib figures written next to experiment reports."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

CURVE_LABELS = {
    "mse": ("epoch", "training MSE"),
    "kmeans_objective": ("Lloyd iteration", "within-cluster SS"),
    "train_error": ("epoch", "training error rate"),
}

plt.rcParams.update({
    "font.size": 9,
    "axes.titlesize": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 120,
})


def _curve(ax, history, title):
    key = next((k for k in CURVE_LABELS if history.get(k)), None)
    if key is None:
        ax.text(0.5, 0.5, "no history", ha="center", va="center", transform=ax.transAxes)
        ax.set_title(title)
        return
    values = np.asarray(history[key], dtype=float)
    ax.plot(np.arange(1, values.size + 1), values, lw=1.2)
    if key != "train_error" and np.all(values > 0):
        ax.set_yscale("log")
    xlabel, ylabel = CURVE_LABELS[key]
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)


def plot_learning_curve(history, path, title="learning curve"):
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    _curve(ax, history, title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def plot_learning_grid(table, path):
    """One panel per compare cell, rows = feature method, cols = classifier."""
    keys = list(table.cells)
    rows = sorted({f for f, _ in keys}, key=[f for f, _ in keys].index)
    cols = sorted({c for _, c in keys}, key=[c for _, c in keys].index)
    fig, axes = plt.subplots(len(rows), len(cols), figsize=(3.4 * len(cols), 2.8 * len(rows)),
                             squeeze=False)
    for i, f in enumerate(rows):
        for j, c in enumerate(cols):
            cell = table.cells[(f, c)]
            title = f"Learning by {f.upper()} along with {c.upper()}"
            if cell.report is None:
                axes[i][j].text(0.5, 0.5, "failed", ha="center", va="center",
                                transform=axes[i][j].transAxes)
                axes[i][j].set_title(title)
            else:
                _curve(axes[i][j], cell.report.history, title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def plot_confusion(confusion, labels, path, title="confusion matrix"):
    cm = np.asarray(confusion)
    fig, ax = plt.subplots(figsize=(0.55 * len(labels) + 2.5, 0.55 * len(labels) + 2.0))
    im = ax.imshow(cm, cmap="Blues")
    ax.set_xticks(range(len(labels)), labels, rotation=45, ha="right")
    ax.set_yticks(range(len(labels)), labels)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    ax.set_title(title)
    thresh = cm.max() / 2.0 if cm.size else 0
    for (i, j), v in np.ndenumerate(cm):
        if v:
            ax.text(j, i, str(v), ha="center", va="center", fontsize=7,
                    color="white" if v > thresh else "black")
    fig.colorbar(im, ax=ax, fraction=0.046, pad=0.04)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def plot_rates(table, path):
    """Grouped bars of recognition rate, one group per classifier."""
    keys = list(table.cells)
    feats = list(dict.fromkeys(f for f, _ in keys))
    clfs = list(dict.fromkeys(c for _, c in keys))
    width = 0.8 / len(feats)
    fig, ax = plt.subplots(figsize=(5, 3.2))
    x = np.arange(len(clfs))
    for k, f in enumerate(feats):
        rates = [table.cells[(f, c)].rate or 0.0 for c in clfs]
        bars = ax.bar(x + (k - (len(feats) - 1) / 2) * width, rates, width, label=f.upper())
        for b, r in zip(bars, rates):
            ax.text(b.get_x() + b.get_width() / 2, r + 0.5, f"{r:.2f}", ha="center",
                    va="bottom", fontsize=7)
    ax.set_xticks(x, [c.upper() for c in clfs])
    ax.set_ylabel("recognition rate (%)")
    ax.set_ylim(0, 105)
    ax.legend(frameon=False, loc="lower right")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def report_figures(report_path, report=None, table=None):
    """Figures named after the report file; returns the written paths."""
    base = Path(report_path)
    stem = base.with_suffix("")
    out = []
    if table is not None:
        out.append(plot_rates(table, f"{stem}_rates.png"))
        out.append(plot_learning_grid(table, f"{stem}_learning.png"))
        best = table.best
        if best is not None:
            out.append(plot_confusion(best.report.confusion, best.report.label_mapping,
                                      f"{stem}_confusion.png",
                                      f"{best.features.upper()} + {best.classifier.upper()}"))
    if report is not None:
        s = report.model_summary
        title = f"Learning by {s['features'].upper()} along with {s['classifier'].upper()}"
        if any(report.history.values()):
            out.append(plot_learning_curve(report.history, f"{stem}_learning.png", title))
        out.append(plot_confusion(report.confusion, report.label_mapping,
                                  f"{stem}_confusion.png", title))
    return out
