"""Datasets of per-utterance multimodal feature sequences with joint labels.

A sample carries one feature matrix per modality (audio, video, text), an
emotion label and an intent label. Datasets are immutable after construction
and safe for concurrent reads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from ..errors import BadLabel, DuplicateId, EmptySplit, MissingFile
from .featfile import read_feature_matrix, write_feature_matrix

MODALITIES = ("audio", "video", "text")
TASKS = ("emotion", "intent")
SPLITS = ("train", "val", "test")
ORIGINS = ("original", "augmented")


@dataclass(frozen=True)
class LabelVocabulary:
    """Ordered label names for both tasks. Label indices refer into these."""

    emotion_labels: tuple[str, ...]
    intent_labels: tuple[str, ...]

    def __post_init__(self):
        for task, names in (("emotion", self.emotion_labels), ("intent", self.intent_labels)):
            if not names:
                raise ValueError(f"{task} label list is empty")
            if len(set(names)) != len(names):
                raise ValueError(f"duplicate {task} label names: {names}")

    def labels(self, task: str) -> tuple[str, ...]:
        return self.emotion_labels if task == "emotion" else self.intent_labels

    def size(self, task: str) -> int:
        return len(self.labels(task))

    def index(self, task: str, name: str) -> int:
        try:
            return self.labels(task).index(name)
        except ValueError:
            raise BadLabel(f"unknown {task} label {name!r}") from None


@dataclass(frozen=True)
class Sample:
    """One utterance: three feature matrices plus joint labels."""

    id: str
    features: Mapping[str, np.ndarray]  # modality -> (T, d) float32
    emotion: int
    intent: int
    split: str
    origin: str = "original"

    def __post_init__(self):
        if set(self.features) != set(MODALITIES):
            raise ValueError(f"sample {self.id}: modalities {sorted(self.features)}")
        if self.split not in SPLITS:
            raise ValueError(f"sample {self.id}: bad split {self.split!r}")
        if self.origin not in ORIGINS:
            raise ValueError(f"sample {self.id}: bad origin {self.origin!r}")
        for mod, mat in self.features.items():
            if mat.ndim != 2 or mat.shape[0] < 1 or mat.shape[1] < 1:
                raise ValueError(f"sample {self.id}: {mod} has shape {mat.shape}")
            if not np.all(np.isfinite(mat)):
                raise ValueError(f"sample {self.id}: {mod} has non-finite values")


class Dataset:
    """Immutable collection of samples plus the label vocabulary."""

    def __init__(self, samples: Iterable[Sample], vocab: LabelVocabulary):
        self.samples: tuple[Sample, ...] = tuple(samples)
        self.vocab = vocab
        seen: set[str] = set()
        by_split: dict[str, list[Sample]] = {s: [] for s in SPLITS}
        for sample in self.samples:
            if sample.id in seen:
                raise DuplicateId(f"duplicate sample id {sample.id!r}")
            seen.add(sample.id)
            if sample.emotion < 0 or sample.emotion >= vocab.size("emotion"):
                raise BadLabel(f"sample {sample.id}: emotion index {sample.emotion}")
            if sample.intent < 0 or sample.intent >= vocab.size("intent"):
                raise BadLabel(f"sample {sample.id}: intent index {sample.intent}")
            by_split[sample.split].append(sample)
        self._by_split = {k: tuple(v) for k, v in by_split.items()}

    def __len__(self) -> int:
        return len(self.samples)

    def split(self, name: str) -> tuple[Sample, ...]:
        return self._by_split[name]

    def label(self, sample: Sample, task: str) -> int:
        return sample.emotion if task == "emotion" else sample.intent

    def with_samples(self, extra: Iterable[Sample]) -> "Dataset":
        """New dataset sharing this one's samples plus `extra` appended."""
        return Dataset(self.samples + tuple(extra), self.vocab)

    def modality_dims(self) -> dict[str, int]:
        if not self.samples:
            raise EmptySplit("cannot infer feature dims from an empty dataset")
        first = self.samples[0]
        return {m: int(first.features[m].shape[1]) for m in MODALITIES}


@dataclass(frozen=True)
class ClassStats:
    """Per-class sample counts for one task on one split."""

    task: str
    counts: tuple[int, ...]
    split: str = "train"

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def num_classes(self) -> int:
        return len(self.counts)


def compute_class_stats(dataset: Dataset, task: str, split: str) -> ClassStats:
    """Tally label counts for `task` over one split."""
    samples = dataset.split(split)
    if not samples:
        raise EmptySplit(f"split {split!r} has no samples")
    counts = [0] * dataset.vocab.size(task)
    for sample in samples:
        counts[dataset.label(sample, task)] += 1
    return ClassStats(task=task, counts=tuple(counts), split=split)


def class_weights(stats: ClassStats, w_max: float = 10.0) -> np.ndarray:
    """Inverse-frequency class weights, clipped at w_max.

    w_c = min(N / (C * n_c), w_max); empty classes get w_max so the weight
    vector stays finite and strictly positive. Under perfectly balanced
    counts every weight is 1.
    """
    if w_max < 1:
        raise ValueError(f"w_max must be >= 1, got {w_max}")
    n = stats.total
    c = stats.num_classes
    weights = np.empty(c, dtype=np.float64)
    for i, count in enumerate(stats.counts):
        weights[i] = w_max if count == 0 else min(n / (c * count), w_max)
    return weights


# --- manifest IO ------------------------------------------------------------

def _parse_header(line: str, path: Path) -> LabelVocabulary:
    header = json.loads(line)
    try:
        return LabelVocabulary(
            emotion_labels=tuple(header["emotion_labels"]),
            intent_labels=tuple(header["intent_labels"]),
        )
    except KeyError as exc:
        raise BadLabel(f"{path}: manifest header is missing {exc}") from None


def load_manifest(manifest_path: str | Path, feature_root: str | Path) -> Dataset:
    """Load a JSONL manifest and all feature files it references.

    Line 1 declares the vocabulary; every later line is one sample with
    feature paths relative to `feature_root`.
    """
    manifest_path = Path(manifest_path)
    feature_root = Path(feature_root)
    if not manifest_path.exists():
        raise MissingFile(f"manifest not found: {manifest_path}")
    lines = [ln for ln in manifest_path.read_text().splitlines() if ln.strip()]
    if not lines:
        raise BadLabel(f"{manifest_path}: empty manifest (header line required)")
    vocab = _parse_header(lines[0], manifest_path)

    samples = []
    seen: set[str] = set()
    for line in lines[1:]:
        row = json.loads(line)
        sid = row["id"]
        if sid in seen:
            raise DuplicateId(f"duplicate sample id {sid!r} in {manifest_path}")
        seen.add(sid)
        features = {}
        for mod in MODALITIES:
            fpath = feature_root / row[mod]
            if not fpath.exists():
                raise MissingFile(f"sample {sid!r}: missing feature file {fpath}")
            features[mod] = read_feature_matrix(fpath)
        try:
            emotion = vocab.index("emotion", row["emotion"])
            intent = vocab.index("intent", row["intent"])
        except BadLabel as exc:
            raise BadLabel(f"sample {sid!r}: {exc}") from None
        samples.append(Sample(
            id=sid,
            features=features,
            emotion=emotion,
            intent=intent,
            split=row["split"],
            origin=row.get("origin", "original"),
        ))
    return Dataset(samples, vocab)


def read_manifest_labels(manifest_path: str | Path) -> tuple[LabelVocabulary, dict[str, tuple[str, str]]]:
    """Read only the vocabulary and id -> (emotion, intent) label names.

    Skips feature files entirely; used for scoring prediction tables.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise MissingFile(f"manifest not found: {manifest_path}")
    lines = [ln for ln in manifest_path.read_text().splitlines() if ln.strip()]
    if not lines:
        raise BadLabel(f"{manifest_path}: empty manifest (header line required)")
    vocab = _parse_header(lines[0], manifest_path)
    golds: dict[str, tuple[str, str]] = {}
    for line in lines[1:]:
        row = json.loads(line)
        if row["id"] in golds:
            raise DuplicateId(f"duplicate sample id {row['id']!r} in {manifest_path}")
        vocab.index("emotion", row["emotion"])
        vocab.index("intent", row["intent"])
        golds[row["id"]] = (row["emotion"], row["intent"])
    return vocab, golds


def save_manifest(dataset: Dataset, manifest_path: str | Path, feature_root: str | Path) -> None:
    """Write the manifest plus one FEA1 file per (sample, modality).

    Feature files land under `feature_root`/features/ with position-based
    names, so ids never need to be filesystem-safe. load_manifest on the
    result reproduces the dataset exactly (metadata and feature bits).
    """
    manifest_path = Path(manifest_path)
    feature_root = Path(feature_root)
    feat_dir = feature_root / "features"
    feat_dir.mkdir(parents=True, exist_ok=True)
    manifest_path.parent.mkdir(parents=True, exist_ok=True)

    with open(manifest_path, "w") as fh:
        header = {
            "emotion_labels": list(dataset.vocab.emotion_labels),
            "intent_labels": list(dataset.vocab.intent_labels),
        }
        fh.write(json.dumps(header) + "\n")
        for i, sample in enumerate(dataset.samples):
            row = {"id": sample.id}
            for mod in MODALITIES:
                rel = f"features/{i:06d}_{mod}.fea"
                write_feature_matrix(feature_root / rel, sample.features[mod])
                row[mod] = rel
            row["emotion"] = dataset.vocab.emotion_labels[sample.emotion]
            row["intent"] = dataset.vocab.intent_labels[sample.intent]
            row["split"] = sample.split
            row["origin"] = sample.origin
            fh.write(json.dumps(row) + "\n")
