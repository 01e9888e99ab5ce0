"""Rendered views of run artifacts: training curves, confusion heatmaps,
ablation and voting charts. Everything writes PNG files next to the JSON/CSV
outputs; no interactive backend is ever touched."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import EvalReport
from .training import TrainHistory


def _style():
    plt.rcParams.update({
        "figure.dpi": 110,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "axes.spines.top": False,
        "axes.spines.right": False,
        "font.size": 9,
    })


def save_training_curves(history: TrainHistory, path: str | Path) -> Path:
    """Loss components and validation scores per epoch, side by side."""
    _style()
    epochs = [r.epoch for r in history.records]
    fig, (ax_loss, ax_val) = plt.subplots(1, 2, figsize=(9, 3.4))

    for key, label in [("total", "total"), ("ce_emotion", "ce emotion"),
                       ("ce_intent", "ce intent"), ("swfc_emotion", "swfc emotion"),
                       ("swfc_intent", "swfc intent")]:
        values = [r.train_loss.get(key) for r in history.records]
        if any(v is not None for v in values):
            ax_loss.plot(epochs, values, label=label, linewidth=1.2)
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("train loss")
    ax_loss.legend(fontsize=7)

    ax_val.plot(epochs, [r.val.jrbm for r in history.records],
                label="val jrbm", linewidth=1.6)
    ax_val.plot(epochs, [r.val.emotion_f1 for r in history.records],
                label="emotion F1", linewidth=1.0, linestyle="--")
    ax_val.plot(epochs, [r.val.intent_f1 for r in history.records],
                label="intent F1", linewidth=1.0, linestyle="--")
    for ckpt in history.checkpoints:
        ax_val.axvline(ckpt.epoch, color="gray", alpha=0.35, linewidth=0.8)
    ax_val.set_xlabel("epoch")
    ax_val.set_ylabel("score")
    ax_val.set_ylim(0, 1.02)
    ax_val.legend(fontsize=7)

    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path)
    plt.close(fig)
    return path


def _heatmap(ax, matrix: np.ndarray, labels: Sequence[str], title: str):
    ax.imshow(matrix, cmap="Blues")
    ax.set_xticks(range(len(labels)), labels, rotation=45, ha="right")
    ax.set_yticks(range(len(labels)), labels)
    ax.set_xlabel("predicted")
    ax.set_ylabel("gold")
    ax.set_title(title)
    ax.grid(False)
    # annotate counts; flip text color on dark cells
    top = matrix.max() if matrix.size else 1
    for r in range(matrix.shape[0]):
        for c in range(matrix.shape[1]):
            color = "white" if matrix[r, c] > 0.6 * max(top, 1) else "black"
            ax.text(c, r, str(int(matrix[r, c])), ha="center", va="center",
                    color=color, fontsize=7)


def save_confusion_heatmaps(report: EvalReport, emotion_labels: Sequence[str],
                            intent_labels: Sequence[str], path: str | Path) -> Path:
    """Both tasks' confusion matrices for one evaluation."""
    _style()
    fig, (ax_e, ax_i) = plt.subplots(1, 2, figsize=(9.5, 4.2))
    _heatmap(ax_e, np.asarray(report.emotion_confusion), emotion_labels,
             f"emotion (macro-F1 {report.emotion_f1:.3f})")
    _heatmap(ax_i, np.asarray(report.intent_confusion), intent_labels,
             f"intent (macro-F1 {report.intent_f1:.3f})")
    fig.suptitle(f"split={report.split}  jrbm={report.jrbm:.3f}", fontsize=10)
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path)
    plt.close(fig)
    return path


def save_ablation_chart(rows: Sequence[dict], path: str | Path) -> Path:
    """Horizontal bars of test jrbm per ablation variant; failed rows hatch."""
    _style()
    fig, ax = plt.subplots(figsize=(6.4, 0.7 * max(len(rows), 2) + 1.2))
    names = [row["name"] for row in rows]
    values = [row.get("test_jrbm") or 0.0 for row in rows]
    bars = ax.barh(range(len(rows)), values, color="#4878a8")
    for k, row in enumerate(rows):
        if row.get("error"):
            bars[k].set_hatch("//")
            bars[k].set_color("#c0c0c0")
            ax.text(0.01, k, "failed", va="center", fontsize=8)
        else:
            ax.text(values[k] + 0.01, k, f"{values[k]:.4f}", va="center", fontsize=8)
    ax.set_yticks(range(len(rows)), names)
    ax.invert_yaxis()
    ax.set_xlabel("test jrbm")
    ax.set_xlim(0, 1.05)
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path)
    plt.close(fig)
    return path


def save_vote_chart(member_scores: Sequence[tuple[str, float]],
                    ensemble_jrbm: float, path: str | Path) -> Path:
    """Standalone member scores next to the voted ensemble score."""
    _style()
    names = [name for name, _ in member_scores] + ["ensemble"]
    values = [score for _, score in member_scores] + [ensemble_jrbm]
    colors = ["#8faccc"] * len(member_scores) + ["#c0504d"]
    fig, ax = plt.subplots(figsize=(1.1 * len(names) + 2.4, 3.2))
    ax.bar(range(len(names)), values, color=colors)
    for k, v in enumerate(values):
        ax.text(k, v + 0.01, f"{v:.4f}", ha="center", fontsize=8)
    ax.set_xticks(range(len(names)), names, rotation=30, ha="right")
    ax.set_ylabel("jrbm")
    ax.set_ylim(0, 1.08)
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path)
    plt.close(fig)
    return path
