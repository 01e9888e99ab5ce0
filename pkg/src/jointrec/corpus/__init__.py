"""Dataset loading, synthesis, statistics, and minority oversampling."""

from .augment import oversample_minority
from .dataset import (
    MODALITIES,
    SPLITS,
    TASKS,
    ClassStats,
    Dataset,
    LabelVocabulary,
    Sample,
    class_weights,
    compute_class_stats,
    load_manifest,
    read_manifest_labels,
    save_manifest,
)
from .featfile import read_feature_matrix, write_feature_matrix
from .synthetic import SynthSpec, synth_generate

__all__ = [
    "MODALITIES",
    "SPLITS",
    "TASKS",
    "ClassStats",
    "Dataset",
    "LabelVocabulary",
    "Sample",
    "SynthSpec",
    "class_weights",
    "compute_class_stats",
    "load_manifest",
    "oversample_minority",
    "read_feature_matrix",
    "read_manifest_labels",
    "save_manifest",
    "synth_generate",
    "write_feature_matrix",
]
