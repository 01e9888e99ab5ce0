"""Joint emotion and intent recognition from multimodal features.

Synthetic data generation, per-modality encoders with transformer fusion,
a focal contrastive training objective, checkpoint voting, and a CLI.
"""

from .config import RunConfig, load_config, parse_config
from .corpus import (MODALITIES, SPLITS, TASKS, ClassStats, Dataset,
                     LabelVocabulary, Sample, SynthSpec, class_weights,
                     compute_class_stats, load_manifest, oversample_minority,
                     read_feature_matrix, read_manifest_labels, save_manifest,
                     synth_generate, write_feature_matrix)
from .ensemble import (PredictionTable, greedy_ensemble, plurality_vote,
                       rank_by_score, score_table)
from .errors import (BadLabel, BadMagic, BadSpec, ConfigError, DimMismatch,
                     DivergedLoss, DuplicateId, EmptyMatrix, EmptySplit,
                     IdSetMismatch, JointrecError, LabelOutOfRange,
                     LengthMismatch, MissingFile, TruncatedFile, ZeroDims)
from .losses import (LossBreakdown, SWFCConfig, swfc_anchor_terms, swfc_loss,
                     total_loss, weighted_cross_entropy)
from .metrics import EvalReport, confusion, evaluate, jrbm, macro_f1, predict
from .model import (EmbeddingPair, ForwardOutput, JointModel, ModelConfig,
                    collate, load_checkpoint, modality_dropout,
                    sample_drop_masks, save_checkpoint)
from .training import (AugmentParams, CheckpointInfo, EpochRecord, LossParams,
                       ModelParams, TrainConfig, TrainHistory, derive_seed,
                       select_checkpoints, train)

__version__ = "0.1.0"

__all__ = [
    "MODALITIES", "SPLITS", "TASKS",
    "ClassStats", "Dataset", "LabelVocabulary", "Sample", "SynthSpec",
    "class_weights", "compute_class_stats", "load_manifest",
    "oversample_minority", "read_feature_matrix", "read_manifest_labels",
    "save_manifest", "synth_generate", "write_feature_matrix",
    "PredictionTable", "greedy_ensemble", "plurality_vote", "rank_by_score",
    "score_table",
    "JointrecError", "MissingFile", "BadLabel", "DuplicateId", "BadMagic",
    "TruncatedFile", "ZeroDims", "BadSpec", "EmptySplit", "DimMismatch",
    "LengthMismatch", "LabelOutOfRange", "EmptyMatrix", "DivergedLoss",
    "IdSetMismatch", "ConfigError",
    "LossBreakdown", "SWFCConfig", "swfc_anchor_terms", "swfc_loss",
    "total_loss", "weighted_cross_entropy",
    "EvalReport", "confusion", "evaluate", "jrbm", "macro_f1", "predict",
    "EmbeddingPair", "ForwardOutput", "JointModel", "ModelConfig", "collate",
    "load_checkpoint", "modality_dropout", "sample_drop_masks",
    "save_checkpoint",
    "AugmentParams", "CheckpointInfo", "EpochRecord", "LossParams",
    "ModelParams", "TrainConfig", "TrainHistory", "derive_seed",
    "select_checkpoints", "train",
    "RunConfig", "load_config", "parse_config",
    "__version__",
]
