"""Feature-space minority oversampling for the train split.

New samples are convex combinations of two existing samples from the same
class on the target task, time-aligned by truncating to the shorter sequence,
plus optional Gaussian jitter. Existing samples are never touched; the
augmented copies are appended with origin="augmented".
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import EmptySplit
from .dataset import MODALITIES, Dataset, Sample


def _mix(a: Sample, b: Sample, alpha: float, jitter_sigma: float,
         rng: np.random.Generator) -> dict[str, np.ndarray]:
    features = {}
    for mod in MODALITIES:
        fa, fb = a.features[mod], b.features[mod]
        t = min(fa.shape[0], fb.shape[0])
        mixed = alpha * fa[:t].astype(np.float64) + (1.0 - alpha) * fb[:t].astype(np.float64)
        if jitter_sigma > 0:
            mixed = mixed + rng.normal(0.0, jitter_sigma, size=mixed.shape)
        features[mod] = mixed.astype(np.float32)
    return features


def oversample_minority(
    dataset: Dataset,
    task: str,
    target_ratio: float,
    jitter_sigma: float,
    seed: int | np.random.Generator,
) -> tuple[Dataset, list[str]]:
    """Grow every minority class of `task` in the train split.

    Classes with fewer than ceil(target_ratio * n_max) train samples are
    topped up to that floor. Parents are drawn from the same class; when
    possible the second parent additionally shares the first parent's label
    on the other task, which keeps that label meaningful for the mix.

    Returns the grown dataset and a list of warnings (singleton classes fall
    back to jitter-only copies; empty classes are skipped).
    """
    if not 0 < target_ratio <= 1:
        raise ValueError(f"target_ratio must be in (0, 1], got {target_ratio}")
    if jitter_sigma < 0:
        raise ValueError(f"jitter_sigma must be >= 0, got {jitter_sigma}")
    train = dataset.split("train")
    if not train:
        raise EmptySplit("train split is empty")

    rng = np.random.default_rng(seed)
    num_classes = dataset.vocab.size(task)
    by_class: list[list[Sample]] = [[] for _ in range(num_classes)]
    for sample in train:
        by_class[dataset.label(sample, task)].append(sample)
    n_max = max(len(members) for members in by_class)
    floor = math.ceil(target_ratio * n_max)

    warnings: list[str] = []
    appended: list[Sample] = []
    counter = 0
    for c in range(num_classes):
        members = by_class[c]
        if not members:
            warnings.append(f"{task} class {c} has no train samples; skipped")
            continue
        deficit = floor - len(members)
        if deficit <= 0:
            continue
        if len(members) == 1:
            warnings.append(
                f"{task} class {c} has a single train sample; using jitter-only copies"
            )
        for _ in range(deficit):
            a = members[int(rng.integers(len(members)))]
            if len(members) == 1:
                b = a
            else:
                # Prefer a co-parent matching both of a's labels.
                pool = [s for s in members
                        if s is not a and s.emotion == a.emotion and s.intent == a.intent]
                if not pool:
                    pool = [s for s in members if s is not a]
                b = pool[int(rng.integers(len(pool)))]
            alpha = float(rng.uniform(0.3, 0.7))
            appended.append(Sample(
                id=f"aug-{task}-{c}-{counter:05d}",
                features=_mix(a, b, alpha, jitter_sigma, rng),
                emotion=a.emotion,
                intent=a.intent,
                split="train",
                origin="augmented",
            ))
            counter += 1
    return dataset.with_samples(appended), warnings
