"""Synthetic dataset generation from a Gaussian mixture over joint classes.

Each (emotion, intent) pair gets one fixed random mean vector per modality;
all pairs within a modality are at least `separation * sigma` apart, so
datasets with a large separation are guaranteed learnable. Sequences are
rows of isotropic Gaussian noise around the pair mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import BadSpec
from .dataset import MODALITIES, SPLITS, Dataset, LabelVocabulary, Sample


@dataclass(frozen=True)
class SynthSpec:
    """Declarative description of a synthetic dataset.

    counts[split] is a num_emotions x num_intents matrix of sample counts
    for each joint class. seq_len is the inclusive (min, max) range of
    sequence lengths drawn per sample.
    """

    emotion_labels: tuple[str, ...]
    intent_labels: tuple[str, ...]
    dims: dict[str, int]
    counts: dict[str, np.ndarray]
    seq_len: tuple[int, int] = (8, 16)
    separation: float = 6.0
    sigma: float = 1.0

    @staticmethod
    def from_dict(raw: dict) -> "SynthSpec":
        counts = {}
        for split, grid in raw.get("counts", {}).items():
            counts[split] = np.asarray(grid, dtype=np.int64)
        return SynthSpec(
            emotion_labels=tuple(raw["emotion_labels"]),
            intent_labels=tuple(raw["intent_labels"]),
            dims=dict(raw["dims"]),
            counts=counts,
            seq_len=tuple(raw.get("seq_len", (8, 16))),
            separation=float(raw.get("separation", 6.0)),
            sigma=float(raw.get("sigma", 1.0)),
        )

    def validate(self) -> None:
        if not self.emotion_labels or not self.intent_labels:
            raise BadSpec("need at least one emotion and one intent class")
        if set(self.dims) != set(MODALITIES):
            raise BadSpec(f"dims must cover {MODALITIES}, got {sorted(self.dims)}")
        if any(d < 1 for d in self.dims.values()):
            raise BadSpec(f"zero feature dims: {self.dims}")
        if not self.counts:
            raise BadSpec("no sample counts declared")
        shape = (len(self.emotion_labels), len(self.intent_labels))
        for split, grid in self.counts.items():
            if split not in SPLITS:
                raise BadSpec(f"unknown split {split!r}")
            if grid.shape != shape:
                raise BadSpec(f"counts[{split}] has shape {grid.shape}, want {shape}")
            if (grid < 0).any():
                raise BadSpec(f"counts[{split}] has negative entries")
        lo, hi = self.seq_len
        if lo < 1 or hi < lo:
            raise BadSpec(f"bad seq_len range {self.seq_len}")
        if self.sigma <= 0 or self.separation < 0:
            raise BadSpec(f"bad separation/sigma: {self.separation}/{self.sigma}")


def _pair_means(spec: SynthSpec, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Draw one mean per (pair, modality), rescaled so every pair of means
    within a modality is at least separation * sigma apart."""
    n_pairs = len(spec.emotion_labels) * len(spec.intent_labels)
    floor = spec.separation * spec.sigma
    means = {}
    for mod in MODALITIES:
        d = spec.dims[mod]
        while True:
            m = rng.standard_normal((n_pairs, d))
            if n_pairs == 1:
                break
            diffs = m[:, None, :] - m[None, :, :]
            dist = np.sqrt((diffs ** 2).sum(-1))
            np.fill_diagonal(dist, np.inf)
            d_min = dist.min()
            if d_min > 0:
                if floor > 0 and d_min < floor:
                    m = m * (floor / d_min)
                break
        means[mod] = m
    return means


def synth_generate(spec: SynthSpec, seed: int) -> Dataset:
    """Generate a dataset matching `spec` exactly; deterministic given seed."""
    spec.validate()
    rng = np.random.default_rng(seed)
    vocab = LabelVocabulary(spec.emotion_labels, spec.intent_labels)
    means = _pair_means(spec, rng)
    n_intents = len(spec.intent_labels)
    lo, hi = spec.seq_len

    samples = []
    for split in SPLITS:
        grid = spec.counts.get(split)
        if grid is None:
            continue
        idx = 0
        for e in range(len(spec.emotion_labels)):
            for i in range(n_intents):
                pair = e * n_intents + i
                for _ in range(int(grid[e, i])):
                    t = int(rng.integers(lo, hi + 1))
                    features = {}
                    for mod in MODALITIES:
                        noise = rng.standard_normal((t, spec.dims[mod]))
                        mat = means[mod][pair] + spec.sigma * noise
                        features[mod] = mat.astype(np.float32)
                    samples.append(Sample(
                        id=f"synth-{split}-{idx:05d}",
                        features=features,
                        emotion=e,
                        intent=i,
                        split=split,
                    ))
                    idx += 1
    return Dataset(samples, vocab)
