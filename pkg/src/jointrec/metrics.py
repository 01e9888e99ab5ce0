"""Evaluation: confusion matrices, macro-F1, and the joint recognition score.

The joint score is the harmonic mean of the two tasks' macro-F1 values, so a
model cannot buy a high score on one task with a collapse on the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch

from .corpus.dataset import Dataset
from .errors import EmptyMatrix, EmptySplit, LabelOutOfRange, LengthMismatch
from .model import JointModel, collate


def confusion(golds: Sequence[int], preds: Sequence[int], num_classes: int) -> np.ndarray:
    """Count matrix m[gold][pred], dtype int64, shape (C, C)."""
    if len(golds) != len(preds):
        raise LengthMismatch(f"{len(golds)} gold labels vs {len(preds)} predictions")
    if num_classes < 1:
        raise ValueError(f"num_classes must be >= 1, got {num_classes}")
    m = np.zeros((num_classes, num_classes), dtype=np.int64)
    for g, p in zip(golds, preds):
        if not 0 <= g < num_classes:
            raise LabelOutOfRange(f"gold label {g} outside [0, {num_classes})")
        if not 0 <= p < num_classes:
            raise LabelOutOfRange(f"predicted label {p} outside [0, {num_classes})")
        m[g, p] += 1
    return m


def macro_f1(conf: np.ndarray) -> tuple[float, np.ndarray]:
    """Macro-averaged F1 over classes that appear at all.

    A class with zero gold occurrences and zero predictions (TP, FP and FN
    all 0) is excluded from the average; its per-class slot is NaN. Returns
    (macro, per_class float64 array).
    """
    if conf.ndim != 2 or conf.shape[0] != conf.shape[1]:
        raise ValueError(f"confusion matrix must be square, got {conf.shape}")
    if int(conf.sum()) == 0:
        raise EmptyMatrix("confusion matrix has no samples")
    c = conf.shape[0]
    per_class = np.full(c, np.nan, dtype=np.float64)
    for k in range(c):
        tp = int(conf[k, k])
        fp = int(conf[:, k].sum()) - tp
        fn = int(conf[k, :].sum()) - tp
        if tp == 0 and fp == 0 and fn == 0:
            continue
        denom = 2 * tp + fp + fn
        per_class[k] = (2.0 * tp / denom) if denom else 0.0
    included = ~np.isnan(per_class)
    return float(per_class[included].mean()), per_class


def jrbm(emotion_f1: float, intent_f1: float) -> float:
    """Harmonic mean of the two task scores; 0 whenever either is 0."""
    if emotion_f1 <= 0.0 or intent_f1 <= 0.0:
        return 0.0
    if emotion_f1 == intent_f1:  # exact, where 2ab/(a+b) may round
        return emotion_f1
    return 2.0 * emotion_f1 * intent_f1 / (emotion_f1 + intent_f1)


@dataclass
class EvalReport:
    split: str
    num_samples: int
    emotion_f1: float
    intent_f1: float
    jrbm: float
    emotion_per_class: list
    intent_per_class: list
    emotion_confusion: list
    intent_confusion: list

    def to_dict(self) -> dict:
        def clean(values):
            return [None if (isinstance(v, float) and math.isnan(v)) else float(v)
                    for v in values]
        return {
            "split": self.split,
            "num_samples": self.num_samples,
            "jrbm": self.jrbm,
            "emotion": {
                "macro_f1": self.emotion_f1,
                "per_class_f1": clean(self.emotion_per_class),
                "confusion": self.emotion_confusion,
            },
            "intent": {
                "macro_f1": self.intent_f1,
                "per_class_f1": clean(self.intent_per_class),
                "confusion": self.intent_confusion,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        def raw(values):
            return [math.nan if v is None else float(v) for v in values]
        return cls(
            split=d["split"],
            num_samples=d["num_samples"],
            emotion_f1=d["emotion"]["macro_f1"],
            intent_f1=d["intent"]["macro_f1"],
            jrbm=d["jrbm"],
            emotion_per_class=raw(d["emotion"]["per_class_f1"]),
            intent_per_class=raw(d["intent"]["per_class_f1"]),
            emotion_confusion=d["emotion"]["confusion"],
            intent_confusion=d["intent"]["confusion"],
        )


def predict(model: JointModel, dataset: Dataset, split: str,
            batch_size: int = 64) -> list[tuple[str, int, int]]:
    """Argmax predictions for every sample in a split, in dataset order.

    Ties in the logits resolve to the lowest class index. Returns
    (sample_id, emotion_index, intent_index) triples.
    """
    samples = dataset.split(split)
    if not samples:
        raise EmptySplit(f"split '{split}' has no samples")
    model.eval()
    out: list[tuple[str, int, int]] = []
    with torch.no_grad():
        for start in range(0, len(samples), batch_size):
            chunk = samples[start:start + batch_size]
            features, masks, _, _ = collate(chunk)
            result = model(features, masks, training=False)
            emo = result.emotion_logits.argmax(dim=1)
            intent = result.intent_logits.argmax(dim=1)
            out.extend((s.id, int(e), int(i))
                       for s, e, i in zip(chunk, emo, intent))
    return out


def evaluate(model: JointModel, dataset: Dataset, split: str,
             batch_size: int = 64) -> EvalReport:
    """Score a model on one split of a dataset."""
    preds = predict(model, dataset, split, batch_size=batch_size)
    samples = dataset.split(split)
    conf_e = confusion([s.emotion for s in samples], [p[1] for p in preds],
                       dataset.vocab.size("emotion"))
    conf_i = confusion([s.intent for s in samples], [p[2] for p in preds],
                       dataset.vocab.size("intent"))
    f1_e, per_e = macro_f1(conf_e)
    f1_i, per_i = macro_f1(conf_i)
    return EvalReport(
        split=split,
        num_samples=len(samples),
        emotion_f1=f1_e,
        intent_f1=f1_i,
        jrbm=jrbm(f1_e, f1_i),
        emotion_per_class=per_e.tolist(),
        intent_per_class=per_i.tolist(),
        emotion_confusion=conf_e.tolist(),
        intent_confusion=conf_i.tolist(),
    )
