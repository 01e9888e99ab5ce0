"""JSON run configuration.

One document with sections {data, model, loss, train, ensemble}. The schema
is strict: unknown keys anywhere are fatal, so a typoed toggle can never
silently fall back to its default. Every key has a default, so `{}` is a
valid (tiny) run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .corpus.dataset import MODALITIES, SPLITS, TASKS
from .corpus.synthetic import SynthSpec
from .errors import BadSpec, ConfigError, MissingFile
from .training import AugmentParams, LossParams, ModelParams, TrainConfig

_DEFAULT_EMOTIONS = ("neutral", "happy", "sad", "angry")
_DEFAULT_INTENTS = ("inform", "question", "complain", "agree")
_DEFAULT_DIMS = {"audio": 24, "video": 20, "text": 16}
_DEFAULT_COUNTS = {"train": 10, "val": 4, "test": 4}


@dataclass(frozen=True)
class RunConfig:
    data_seed: int
    synth: SynthSpec
    train: TrainConfig
    ensemble_top_k: int

    def with_data_seed(self, seed: int) -> "RunConfig":
        return replace(self, data_seed=seed)

    def with_train_seed(self, seed: int) -> "RunConfig":
        return replace(self, train=replace(self.train, seed=seed))


def _dot(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _section(raw: dict, key: str) -> dict:
    value = raw.get(key, {})
    if not isinstance(value, dict):
        raise ConfigError(f"'{key}' must be an object, got {type(value).__name__}")
    return value


def _reject_unknown(section: dict, allowed: set, path: str) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown config key '{_dot(path, key)}'")


def _get_int(section: dict, key: str, path: str, default: int,
             lo: int | None = None) -> int:
    value = section.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"'{_dot(path, key)}' must be an integer, got {value!r}")
    if lo is not None and value < lo:
        raise ConfigError(f"'{_dot(path, key)}' must be >= {lo}, got {value}")
    return value


def _get_float(section: dict, key: str, path: str, default: float) -> float:
    value = section.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{_dot(path, key)}' must be a number, got {value!r}")
    return float(value)


def _get_bool(section: dict, key: str, path: str, default: bool) -> bool:
    value = section.get(key, default)
    if not isinstance(value, bool):
        raise ConfigError(f"'{_dot(path, key)}' must be true or false, got {value!r}")
    return value


def _get_labels(section: dict, key: str, path: str, default: tuple) -> tuple:
    value = section.get(key, default)
    if (not isinstance(value, (list, tuple)) or not value
            or not all(isinstance(v, str) and v for v in value)):
        raise ConfigError(f"'{_dot(path, key)}' must be a non-empty list of names")
    return tuple(value)


def _parse_counts(section: dict, path: str, shape: tuple[int, int]) -> dict:
    raw = section.get("counts", dict(_DEFAULT_COUNTS))
    if not isinstance(raw, dict):
        raise ConfigError(f"'{_dot(path, 'counts')}' must be an object")
    _reject_unknown(raw, set(SPLITS), _dot(path, "counts"))
    counts = {}
    for split, value in raw.items():
        where = f"{_dot(path, 'counts')}.{split}"
        if isinstance(value, bool):
            raise ConfigError(f"'{where}' must be an integer or a matrix")
        if isinstance(value, int):
            if value < 0:
                raise ConfigError(f"'{where}' must be >= 0, got {value}")
            counts[split] = np.full(shape, value, dtype=np.int64)
            continue
        try:
            grid = np.asarray(value, dtype=np.int64)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"'{where}' is not a valid integer matrix: {exc}") from exc
        if grid.ndim != 2:
            raise ConfigError(f"'{where}' must be a 2-D matrix, got shape {grid.shape}")
        counts[split] = grid
    return counts


def _parse_data(raw: dict) -> tuple[int, SynthSpec]:
    section = _section(raw, "data")
    allowed = {"seed", "emotion_labels", "intent_labels", "dims", "seq_len",
               "separation", "sigma", "counts"}
    _reject_unknown(section, allowed, "data")
    seed = _get_int(section, "seed", "data", 0)
    emotions = _get_labels(section, "emotion_labels", "data", _DEFAULT_EMOTIONS)
    intents = _get_labels(section, "intent_labels", "data", _DEFAULT_INTENTS)

    dims_raw = section.get("dims", dict(_DEFAULT_DIMS))
    if not isinstance(dims_raw, dict):
        raise ConfigError("'data.dims' must be an object")
    _reject_unknown(dims_raw, set(MODALITIES), "data.dims")
    dims = {m: _get_int(dims_raw, m, "data.dims", _DEFAULT_DIMS[m], lo=1)
            for m in MODALITIES}

    seq_len = section.get("seq_len", [8, 16])
    if (not isinstance(seq_len, (list, tuple)) or len(seq_len) != 2
            or not all(isinstance(v, int) and not isinstance(v, bool) for v in seq_len)):
        raise ConfigError("'data.seq_len' must be a [min, max] integer pair")

    spec = SynthSpec(
        emotion_labels=emotions,
        intent_labels=intents,
        dims=dims,
        counts=_parse_counts(section, "data", (len(emotions), len(intents))),
        seq_len=(seq_len[0], seq_len[1]),
        separation=_get_float(section, "separation", "data", 6.0),
        sigma=_get_float(section, "sigma", "data", 1.0),
    )
    try:
        spec.validate()
    except BadSpec as exc:
        raise ConfigError(f"data section: {exc}") from exc
    return seed, spec


def _parse_model(raw: dict) -> ModelParams:
    section = _section(raw, "model")
    allowed = {"h", "fusion_layers", "fusion_heads", "interaction_heads", "dropout_p"}
    _reject_unknown(section, allowed, "model")
    params = ModelParams(
        h=_get_int(section, "h", "model", 64, lo=1),
        fusion_layers=_get_int(section, "fusion_layers", "model", 2, lo=1),
        fusion_heads=_get_int(section, "fusion_heads", "model", 4, lo=1),
        interaction_heads=_get_int(section, "interaction_heads", "model", 4, lo=1),
        dropout_p=_get_float(section, "dropout_p", "model", 0.3),
    )
    if not 0.0 <= params.dropout_p <= 1.0:
        raise ConfigError(f"'model.dropout_p' must be in [0, 1], got {params.dropout_p}")
    if params.h % params.fusion_heads or params.h % params.interaction_heads:
        raise ConfigError(
            f"'model.h' ({params.h}) must be divisible by fusion_heads "
            f"({params.fusion_heads}) and interaction_heads ({params.interaction_heads})"
        )
    return params


def _parse_loss(raw: dict) -> LossParams:
    section = _section(raw, "loss")
    allowed = {"gamma", "tau", "w_max", "lambda_ce", "mu_swfc", "weighted_ce"}
    _reject_unknown(section, allowed, "loss")
    params = LossParams(
        gamma=_get_float(section, "gamma", "loss", 2.0),
        tau=_get_float(section, "tau", "loss", 0.1),
        w_max=_get_float(section, "w_max", "loss", 10.0),
        lambda_ce=_get_float(section, "lambda_ce", "loss", 1.0),
        mu_swfc=_get_float(section, "mu_swfc", "loss", 0.5),
        weighted_ce=_get_bool(section, "weighted_ce", "loss", True),
    )
    if params.gamma < 0:
        raise ConfigError(f"'loss.gamma' must be >= 0, got {params.gamma}")
    if params.tau <= 0:
        raise ConfigError(f"'loss.tau' must be > 0, got {params.tau}")
    if params.w_max <= 0:
        raise ConfigError(f"'loss.w_max' must be > 0, got {params.w_max}")
    return params


def _parse_augment(section: dict) -> AugmentParams:
    raw = section.get("augment", {})
    if not isinstance(raw, dict):
        raise ConfigError("'train.augment' must be an object")
    _reject_unknown(raw, {"task", "target_ratio", "jitter_sigma"}, "train.augment")
    task = raw.get("task", "intent")
    if task not in TASKS:
        raise ConfigError(f"'train.augment.task' must be one of {TASKS}, got {task!r}")
    params = AugmentParams(
        task=task,
        target_ratio=_get_float(raw, "target_ratio", "train.augment", 0.5),
        jitter_sigma=_get_float(raw, "jitter_sigma", "train.augment", 0.05),
    )
    if not 0.0 < params.target_ratio <= 1.0:
        raise ConfigError(
            f"'train.augment.target_ratio' must be in (0, 1], got {params.target_ratio}")
    if params.jitter_sigma < 0:
        raise ConfigError(
            f"'train.augment.jitter_sigma' must be >= 0, got {params.jitter_sigma}")
    return params


def parse_config(raw: dict) -> RunConfig:
    """Validate a parsed JSON document and build the typed run config."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    _reject_unknown(raw, {"data", "model", "loss", "train", "ensemble"}, "")

    data_seed, synth = _parse_data(raw)
    model_params = _parse_model(raw)
    loss_params = _parse_loss(raw)

    ens = _section(raw, "ensemble")
    _reject_unknown(ens, {"top_k"}, "ensemble")
    top_k = _get_int(ens, "top_k", "ensemble", 3, lo=1)

    section = _section(raw, "train")
    allowed = {"epochs", "batch_size", "step_size", "seed", "patience",
               "use_augmentation", "use_swfc", "use_modality_dropout",
               "eval_batch_size", "augment"}
    _reject_unknown(section, allowed, "train")
    try:
        train_cfg = TrainConfig(
            epochs=_get_int(section, "epochs", "train", 10, lo=1),
            batch_size=_get_int(section, "batch_size", "train", 16, lo=1),
            step_size=_get_float(section, "step_size", "train", 1e-3),
            seed=_get_int(section, "seed", "train", 0),
            patience=_get_int(section, "patience", "train", 10, lo=1),
            top_k=top_k,
            use_augmentation=_get_bool(section, "use_augmentation", "train", True),
            use_swfc=_get_bool(section, "use_swfc", "train", True),
            use_modality_dropout=_get_bool(section, "use_modality_dropout", "train", True),
            eval_batch_size=_get_int(section, "eval_batch_size", "train", 64, lo=1),
            model=model_params,
            loss=loss_params,
            augment=_parse_augment(section),
        )
    except ValueError as exc:
        raise ConfigError(f"train section: {exc}") from exc

    return RunConfig(data_seed=data_seed, synth=synth, train=train_cfg,
                     ensemble_top_k=top_k)


def load_config(path: str | Path) -> RunConfig:
    """Read and validate a config file."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return parse_config(raw)
