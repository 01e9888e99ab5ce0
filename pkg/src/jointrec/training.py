"""Training loop with validation-driven checkpoint retention.

All randomness is drawn from named streams derived from one master seed
(parameter init, epoch shuffling, modality dropout, augmentation), so runs
are reproducible and the streams stay independent when toggles change.
"""

from __future__ import annotations

import logging
import math
import zlib
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch

from . import losses
from .corpus.augment import oversample_minority
from .corpus.dataset import Dataset, class_weights, compute_class_stats
from .errors import DivergedLoss, EmptySplit
from .metrics import EvalReport, evaluate
from .model import JointModel, ModelConfig, collate, save_checkpoint

logger = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1


def derive_seed(master: int, name: str) -> int:
    """Deterministic per-stream seed from one master seed and a stream name."""
    seq = np.random.SeedSequence([master & _MASK64, zlib.crc32(name.encode())])
    return int(seq.generate_state(1, dtype=np.uint32)[0])


@dataclass(frozen=True)
class ModelParams:
    h: int = 64
    fusion_layers: int = 2
    fusion_heads: int = 4
    interaction_heads: int = 4
    dropout_p: float = 0.3


@dataclass(frozen=True)
class LossParams:
    gamma: float = 2.0
    tau: float = 0.1
    w_max: float = 10.0
    lambda_ce: float = 1.0
    mu_swfc: float = 0.5
    weighted_ce: bool = True


@dataclass(frozen=True)
class AugmentParams:
    task: str = "intent"
    target_ratio: float = 0.5
    jitter_sigma: float = 0.05


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    batch_size: int
    step_size: float = 1e-3
    seed: int = 0
    patience: int = 10
    top_k: int = 3
    use_augmentation: bool = True
    use_swfc: bool = True
    use_modality_dropout: bool = True
    eval_batch_size: int = 64
    model: ModelParams = field(default_factory=ModelParams)
    loss: LossParams = field(default_factory=LossParams)
    augment: AugmentParams = field(default_factory=AugmentParams)

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.patience < 1:
            raise ValueError("epochs, batch_size and patience must be >= 1")
        if self.step_size <= 0:
            raise ValueError(f"step_size must be > 0, got {self.step_size}")
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")
        if self.use_swfc and self.batch_size < 2:
            raise ValueError("batch_size must be >= 2 when use_swfc is on "
                             "(the contrastive term needs pairs)")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: dict
    val: EvalReport

    def to_dict(self) -> dict:
        return {"epoch": self.epoch, "train_loss": dict(self.train_loss),
                "val": self.val.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "EpochRecord":
        return cls(epoch=d["epoch"], train_loss=dict(d["train_loss"]),
                   val=EvalReport.from_dict(d["val"]))


@dataclass
class CheckpointInfo:
    epoch: int
    val_jrbm: float
    path: str  # relative to the run's out dir; "" when not persisted

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "CheckpointInfo":
        return cls(epoch=d["epoch"], val_jrbm=d["val_jrbm"], path=d["path"])


@dataclass
class TrainHistory:
    config: dict
    records: list
    checkpoints: list  # best first: val jrbm descending, ties to earlier epoch
    best_epoch: int
    stopped_epoch: int

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "records": [r.to_dict() for r in self.records],
            "checkpoints": [c.to_dict() for c in self.checkpoints],
            "best_epoch": self.best_epoch,
            "stopped_epoch": self.stopped_epoch,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainHistory":
        return cls(
            config=d["config"],
            records=[EpochRecord.from_dict(r) for r in d["records"]],
            checkpoints=[CheckpointInfo.from_dict(c) for c in d["checkpoints"]],
            best_epoch=d["best_epoch"],
            stopped_epoch=d["stopped_epoch"],
        )

    def best_checkpoint(self) -> CheckpointInfo:
        if not self.checkpoints:
            raise ValueError("history has no checkpoints")
        return self.checkpoints[0]


def _rank(entries: Sequence[tuple[int, float]]) -> list[tuple[int, float]]:
    """Sort (epoch, jrbm) pairs: jrbm descending, ties to the earlier epoch."""
    return sorted(entries, key=lambda e: (-e[1], e[0]))


def select_checkpoints(history: TrainHistory, k: int) -> list[CheckpointInfo]:
    """Top-k epochs by validation jrbm, best first; k is clipped."""
    if not history.records:
        raise ValueError("history has no records")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    ranked = _rank([(r.epoch, r.val.jrbm) for r in history.records])[:k]
    by_epoch = {c.epoch: c.path for c in history.checkpoints}
    return [CheckpointInfo(epoch=e, val_jrbm=j, path=by_epoch.get(e, ""))
            for e, j in ranked]


def _loss_configs(dataset: Dataset, cfg: TrainConfig) -> tuple[losses.SWFCConfig,
                                                               losses.SWFCConfig]:
    out = []
    for task in ("emotion", "intent"):
        stats = compute_class_stats(dataset, task, "train")
        w = class_weights(stats, w_max=cfg.loss.w_max)
        out.append(losses.SWFCConfig(
            weights=torch.from_numpy(w).to(torch.float32),
            gamma=cfg.loss.gamma, tau=cfg.loss.tau))
    return out[0], out[1]


def train(cfg: TrainConfig, dataset: Dataset,
          out_dir: str | Path | None = None) -> TrainHistory:
    """Run the full training loop and return its history.

    When out_dir is given, the top-k checkpoints are persisted under
    out_dir/ckpt/ and the history JSON is the caller's to write. Checkpoint
    paths in the history are relative to out_dir.
    """
    if not dataset.split("train"):
        raise EmptySplit("train split is empty")
    if not dataset.split("val"):
        raise EmptySplit("val split is empty")

    if cfg.use_augmentation:
        dataset, notes = oversample_minority(
            dataset, cfg.augment.task, cfg.augment.target_ratio,
            cfg.augment.jitter_sigma, seed=derive_seed(cfg.seed, "augment"))
        for note in notes:
            logger.warning("augmentation: %s", note)

    # class weights reflect the train distribution the model actually sees
    emotion_cfg, intent_cfg = _loss_configs(dataset, cfg)

    dims = dataset.modality_dims()
    mcfg = ModelConfig(
        d_audio=dims["audio"], d_video=dims["video"], d_text=dims["text"],
        num_emotions=dataset.vocab.size("emotion"),
        num_intents=dataset.vocab.size("intent"),
        h=cfg.model.h, fusion_layers=cfg.model.fusion_layers,
        fusion_heads=cfg.model.fusion_heads,
        interaction_heads=cfg.model.interaction_heads,
        dropout_p=cfg.model.dropout_p,
    )
    model = JointModel(mcfg, seed=derive_seed(cfg.seed, "init"))
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.step_size,
                                 betas=(0.9, 0.999))
    shuffle_rng = np.random.default_rng(derive_seed(cfg.seed, "shuffle"))
    dropout_gen = torch.Generator().manual_seed(derive_seed(cfg.seed, "dropout"))

    mu = cfg.loss.mu_swfc if cfg.use_swfc else 0.0
    drop_p = cfg.model.dropout_p if cfg.use_modality_dropout else 0.0
    train_samples = dataset.split("train")
    ckpt_dir = None if out_dir is None else Path(out_dir) / "ckpt"

    records: list[EpochRecord] = []
    retained: dict[int, tuple[float, Path]] = {}
    best_jrbm = -1.0
    best_epoch = 0
    since_improvement = 0

    for epoch in range(1, cfg.epochs + 1):
        model.train()
        order = shuffle_rng.permutation(len(train_samples))
        sums: dict[str, float] = {}
        seen = 0
        for batch_index, start in enumerate(range(0, len(order), cfg.batch_size)):
            batch = [train_samples[i] for i in order[start:start + cfg.batch_size]]
            features, masks, emo_labels, int_labels = collate(batch)
            out = model(features, masks, training=True,
                        rng=dropout_gen if drop_p > 0 else None,
                        dropout_p=drop_p)
            breakdown = losses.total_loss(
                out, emo_labels, int_labels, emotion_cfg, intent_cfg,
                lambda_ce=cfg.loss.lambda_ce, mu_swfc=mu,
                weighted_ce=cfg.loss.weighted_ce)
            scalars = breakdown.scalars()
            if not math.isfinite(scalars["total"]):
                raise DivergedLoss(epoch=epoch, batch_index=batch_index)
            optimizer.zero_grad()
            breakdown.total.backward()
            optimizer.step()
            for key, value in scalars.items():
                sums[key] = sums.get(key, 0.0) + value * len(batch)
            seen += len(batch)

        means = {key: value / seen for key, value in sums.items()}
        report = evaluate(model, dataset, "val", batch_size=cfg.eval_batch_size)
        records.append(EpochRecord(epoch=epoch, train_loss=means, val=report))
        logger.info("epoch %d: train loss %.4f, val jrbm %.4f",
                    epoch, means["total"], report.jrbm)

        # retention: recompute the top-k set including this epoch, persist or
        # evict as needed (old epochs never re-enter the set)
        candidates = [(e, j) for e, (j, _) in retained.items()]
        candidates.append((epoch, report.jrbm))
        keep = {e for e, _ in _rank(candidates)[:cfg.top_k]}
        if epoch in keep and ckpt_dir is not None:
            path = ckpt_dir / f"epoch_{epoch:03d}.bin"
            save_checkpoint(model, path, seed=cfg.seed,
                            extra={"epoch": epoch, "val_jrbm": report.jrbm})
            retained[epoch] = (report.jrbm, path)
        elif epoch in keep:
            retained[epoch] = (report.jrbm, Path(""))
        for old in [e for e in retained if e not in keep]:
            _, old_path = retained.pop(old)
            if old_path != Path(""):
                old_path.unlink(missing_ok=True)
                old_path.with_suffix(".json").unlink(missing_ok=True)

        if report.jrbm > best_jrbm:
            best_jrbm = report.jrbm
            best_epoch = epoch
            since_improvement = 0
        else:
            since_improvement += 1
            if since_improvement >= cfg.patience:
                logger.info("early stop at epoch %d (no val improvement in %d)",
                            epoch, cfg.patience)
                break

    checkpoints = []
    for e, j in _rank([(e, j) for e, (j, _) in retained.items()]):
        path = retained[e][1]
        rel = "" if path == Path("") else str(path.relative_to(out_dir))
        checkpoints.append(CheckpointInfo(epoch=e, val_jrbm=j, path=rel))

    return TrainHistory(
        config=asdict(cfg),
        records=records,
        checkpoints=checkpoints,
        best_epoch=best_epoch,
        stopped_epoch=records[-1].epoch,
    )
