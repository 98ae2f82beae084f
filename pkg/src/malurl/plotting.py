"""Report figures: class balance around SMOTE, ROC curve, feature importance.

Uses the non-interactive Agg backend; every function writes one file and
returns its path. The format follows the file suffix (``.svg``, ``.png``).
"""
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# fixed hash salt keeps SVG element ids stable between runs
plt.rcParams["svg.hashsalt"] = "malurl"
plt.rcParams["svg.fonttype"] = "none"


def _save(fig, path, footer=None):
    if footer:
        fig.text(0.99, 0.01, footer, ha="right", va="bottom", fontsize=6, color="0.5")
    path = Path(path)
    fig.savefig(path, metadata={"Date": None} if path.suffix == ".svg" else None)
    plt.close(fig)
    return path


def class_balance(before, after, path, footer=None):
    """Side-by-side class counts before and after resampling."""
    fig, axes = plt.subplots(1, 2, figsize=(7, 3), sharey=True)
    for ax, counts, title in zip(axes, (before, after), ("before SMOTE", "after SMOTE")):
        labels = ["benign (0)", "malicious (1)"]
        values = [counts[0], counts[1]]
        bars = ax.bar(labels, values, color=["#4c72b0", "#c44e52"])
        ax.bar_label(bars)
        ax.set_title(title)
    axes[0].set_ylabel("training rows")
    fig.tight_layout()
    return _save(fig, path, footer)


def roc(curve, auc_value, path, label="HGBC", footer=None):
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.plot(curve.fpr, curve.tpr, drawstyle="default", lw=1.5, label=f"{label} (AUC = {auc_value:.4f})")
    ax.plot([0, 1], [0, 1], ls="--", lw=0.8, color="0.6")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.01)
    ax.set_xlabel("False positive rate (1 - specificity)")
    ax.set_ylabel("True positive rate (sensitivity)")
    ax.legend(loc="lower right")
    fig.tight_layout()
    return _save(fig, path, footer)


def importance(report, path, footer=None):
    order = report.ranking[::-1]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.barh([report.feature_names[i] for i in order], report.importances[order], color="#55a868")
    ax.set_xlabel(f"{report.method} importance")
    ax.set_title("Feature attribution (permutation/gain, not SHAP)", fontsize=9)
    ax.tick_params(axis="y", labelsize=7)
    fig.tight_layout()
    return _save(fig, path, footer)
