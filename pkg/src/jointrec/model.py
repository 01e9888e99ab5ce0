"""Forward computation for joint emotion/intent recognition.

Pipeline per sample: dedicated per-task sequence encoders for each modality,
modality dropout, one transformer fusion stack per task over the three pooled
modality embeddings, a bidirectional emotion/intent interaction stage, and
two linear classifier heads.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Mapping, NamedTuple, Sequence

import numpy as np
import torch
from torch import Tensor, nn

from .corpus.dataset import MODALITIES, TASKS, Sample
from .errors import DimMismatch


@dataclass(frozen=True)
class ModelConfig:
    d_audio: int
    d_video: int
    d_text: int
    num_emotions: int
    num_intents: int
    h: int = 64
    fusion_layers: int = 2
    fusion_heads: int = 4
    interaction_heads: int = 4
    dropout_p: float = 0.3

    def __post_init__(self):
        dims = (self.d_audio, self.d_video, self.d_text, self.h,
                self.fusion_layers, self.fusion_heads, self.interaction_heads,
                self.num_emotions, self.num_intents)
        if any(d < 1 for d in dims):
            raise ValueError(f"all dims and counts must be >= 1: {self}")
        if self.h % self.fusion_heads or self.h % self.interaction_heads:
            raise ValueError(
                f"h={self.h} must be divisible by fusion_heads={self.fusion_heads} "
                f"and interaction_heads={self.interaction_heads}"
            )
        if not 0.0 <= self.dropout_p <= 1.0:
            raise ValueError(f"dropout_p must be in [0, 1], got {self.dropout_p}")

    def input_dim(self, modality: str) -> int:
        return {"audio": self.d_audio, "video": self.d_video, "text": self.d_text}[modality]

    def num_classes(self, task: str) -> int:
        return self.num_emotions if task == "emotion" else self.num_intents


class EmbeddingPair(NamedTuple):
    """One modality's task-specific embeddings."""

    emotion: Tensor  # (h,)
    intent: Tensor   # (h,)


class ForwardOutput(NamedTuple):
    """Logits plus the post-interaction representations feeding the heads."""

    emotion_logits: Tensor
    intent_logits: Tensor
    emotion_rep: Tensor
    intent_rep: Tensor


# --- modality dropout -------------------------------------------------------

def sample_drop_masks(n: int, p: float, rng: torch.Generator) -> tuple[Tensor, Tensor]:
    """Draw per-sample modality drop decisions.

    Returns (raw, final) boolean masks of shape (n, 3), True = drop, with
    columns ordered (audio, video, text). `raw` is the plain u < p outcome;
    `final` restores one uniformly chosen modality in rows where all three
    were dropped, so at least one modality always survives.
    """
    u = torch.rand(n, len(MODALITIES), generator=rng)
    raw = u < p
    final = raw.clone()
    all_dropped = final.all(dim=1)
    if bool(all_dropped.any()):
        rows = all_dropped.nonzero(as_tuple=True)[0]
        pick = torch.rand(len(rows), generator=rng).mul(len(MODALITIES)).long()
        final[rows, pick.clamp(max=len(MODALITIES) - 1)] = False
    return raw, final


def modality_dropout(
    embs: Mapping[str, EmbeddingPair],
    p: float,
    training: bool,
    rng: torch.Generator | None = None,
    draws: Sequence[float] | None = None,
) -> dict[str, EmbeddingPair]:
    """Zero whole modalities at random during training.

    Each modality is dropped independently when its uniform draw is < p; a
    dropped modality has both task embeddings zeroed. If all three drop, one
    modality chosen uniformly is restored. Survivors are not rescaled. With
    training=False or p=0 this is the identity.

    `draws` lets callers supply the three uniforms (audio, video, text)
    directly instead of sampling from `rng`.
    """
    if set(embs) != set(MODALITIES):
        raise ValueError(f"expected modalities {MODALITIES}, got {sorted(embs)}")
    if not training or p <= 0:
        return dict(embs)
    if draws is None:
        if rng is None:
            raise ValueError("modality_dropout needs rng (or explicit draws) in training mode")
        draws = torch.rand(len(MODALITIES), generator=rng).tolist()
    dropped = [u < p for u in draws]
    if all(dropped):
        if rng is None:
            raise ValueError("keep-one fallback needs rng")
        keep = min(int(torch.rand((), generator=rng).item() * len(MODALITIES)),
                   len(MODALITIES) - 1)
        dropped[keep] = False
    out = {}
    for mod, drop in zip(MODALITIES, dropped):
        pair = embs[mod]
        if drop:
            out[mod] = EmbeddingPair(torch.zeros_like(pair.emotion),
                                     torch.zeros_like(pair.intent))
        else:
            out[mod] = pair
    return out


# --- building blocks --------------------------------------------------------

class SequenceEncoder(nn.Module):
    """Project a (T, d) sequence to width h, mix it with one self-attention
    layer, then masked-mean-pool over valid positions."""

    def __init__(self, input_dim: int, h: int, heads: int):
        super().__init__()
        self.proj = nn.Linear(input_dim, h)
        self.attn = nn.MultiheadAttention(h, heads, batch_first=True)

    def forward(self, x: Tensor, mask: Tensor | None = None) -> Tensor:
        """x: (B, T, d); mask: (B, T) bool, True = valid. Returns (B, h)."""
        tokens = self.proj(x)
        pad = None if mask is None else ~mask
        mixed, _ = self.attn(tokens, tokens, tokens,
                             key_padding_mask=pad, need_weights=False)
        tokens = tokens + mixed
        if mask is None:
            return tokens.mean(dim=1)
        w = mask.to(tokens.dtype)
        return (tokens * w.unsqueeze(-1)).sum(dim=1) / w.sum(dim=1, keepdim=True)


class FusionBlock(nn.Module):
    """Pre-norm self-attention + feed-forward block."""

    def __init__(self, h: int, heads: int):
        super().__init__()
        self.norm1 = nn.LayerNorm(h)
        self.attn = nn.MultiheadAttention(h, heads, batch_first=True)
        self.norm2 = nn.LayerNorm(h)
        self.ff = nn.Sequential(nn.Linear(h, 2 * h), nn.GELU(), nn.Linear(2 * h, h))

    def forward(self, x: Tensor) -> Tensor:
        y = self.norm1(x)
        mixed, _ = self.attn(y, y, y, need_weights=False)
        x = x + mixed
        return x + self.ff(self.norm2(x))


class FusionStack(nn.Module):
    """Fuse the three modality embeddings into one vector for a task.

    The embeddings form a 3-token set joined by a learned aggregation token;
    no positional encoding is added, so the output is invariant to modality
    token order. The aggregation token's final state is the fused vector.
    """

    def __init__(self, h: int, heads: int, layers: int):
        super().__init__()
        self.agg_token = nn.Parameter(torch.empty(1, h))
        self.blocks = nn.ModuleList(FusionBlock(h, heads) for _ in range(layers))

    def forward(self, embs: Tensor) -> Tensor:
        """embs: (B, 3, h) -> (B, h)."""
        agg = self.agg_token.expand(embs.shape[0], 1, -1).to(embs.dtype)
        x = torch.cat([agg, embs], dim=1)
        for block in self.blocks:
            x = block(x)
        return x[:, 0]


class InteractionEncoder(nn.Module):
    """Bidirectional cross-attention between the two task streams.

    Each stream attends to the other's pre-interaction state, adds the
    result residually, then passes through its own feed-forward block. The
    two directions have separate parameters.
    """

    def __init__(self, h: int, heads: int):
        super().__init__()
        self.norm_e = nn.LayerNorm(h)
        self.norm_i = nn.LayerNorm(h)
        self.e_from_i = nn.MultiheadAttention(h, heads, batch_first=True)
        self.i_from_e = nn.MultiheadAttention(h, heads, batch_first=True)
        self.ff_e = nn.Sequential(nn.LayerNorm(h), nn.Linear(h, 2 * h),
                                  nn.GELU(), nn.Linear(2 * h, h))
        self.ff_i = nn.Sequential(nn.LayerNorm(h), nn.Linear(h, 2 * h),
                                  nn.GELU(), nn.Linear(2 * h, h))

    def forward(self, e: Tensor, i: Tensor) -> tuple[Tensor, Tensor]:
        """e, i: (B, h) -> updated (B, h) pair."""
        eq = self.norm_e(e).unsqueeze(1)
        iq = self.norm_i(i).unsqueeze(1)
        e_ctx, _ = self.e_from_i(eq, iq, iq, need_weights=False)
        i_ctx, _ = self.i_from_e(iq, eq, eq, need_weights=False)
        e = e + e_ctx.squeeze(1)
        i = i + i_ctx.squeeze(1)
        return e + self.ff_e(e), i + self.ff_i(i)


# --- full model ---------------------------------------------------------------

class JointModel(nn.Module):
    """The complete two-task network. Parameters are deterministic given seed."""

    def __init__(self, config: ModelConfig, seed: int = 0):
        super().__init__()
        self.config = config
        self.encoders = nn.ModuleDict({
            f"{task}_{mod}": SequenceEncoder(config.input_dim(mod), config.h,
                                             config.fusion_heads)
            for task in TASKS for mod in MODALITIES
        })
        self.fusion = nn.ModuleDict({
            task: FusionStack(config.h, config.fusion_heads, config.fusion_layers)
            for task in TASKS
        })
        self.interaction = InteractionEncoder(config.h, config.interaction_heads)
        self.heads = nn.ModuleDict({
            task: nn.Linear(config.h, config.num_classes(task)) for task in TASKS
        })
        self.reset_parameters(seed)

    def reset_parameters(self, seed: int) -> None:
        """Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases,
        unit norm scales. One generator pass, so init is seed-reproducible."""
        gen = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            for name, param in self.named_parameters():
                if param.dim() >= 2:
                    bound = 1.0 / math.sqrt(param.shape[-1])
                    param.uniform_(-bound, bound, generator=gen)
                elif name.endswith("weight"):
                    param.fill_(1.0)
                else:
                    param.fill_(0.0)

    # --- spec-level single-sample operations ---

    def encode_modality(self, modality: str, x: Tensor | np.ndarray,
                        mask: Tensor | None = None) -> EmbeddingPair:
        """Encode one (T, d) feature matrix into its two task embeddings."""
        if isinstance(x, np.ndarray):
            x = torch.from_numpy(np.ascontiguousarray(x, dtype=np.float32))
        expected = self.config.input_dim(modality)
        if x.ndim != 2 or x.shape[1] != expected:
            raise DimMismatch(
                f"{modality}: expected (T, {expected}), got {tuple(x.shape)}"
            )
        xb = x.unsqueeze(0)
        mb = None if mask is None else mask.unsqueeze(0)
        emo = self.encoders[f"emotion_{modality}"](xb, mb)[0]
        intent = self.encoders[f"intent_{modality}"](xb, mb)[0]
        return EmbeddingPair(emo, intent)

    def fuse(self, embs: Mapping[str, Tensor], task: str) -> Tensor:
        """Fuse three (h,) modality embeddings for one task into one (h,)."""
        stacked = torch.stack([embs[m] for m in MODALITIES], dim=0).unsqueeze(0)
        return self.fusion[task](stacked)[0]

    def interact(self, e: Tensor, i: Tensor) -> tuple[Tensor, Tensor]:
        """Cross-condition the two task vectors; (h,) x (h,) -> (h,) x (h,)."""
        e2, i2 = self.interaction(e.unsqueeze(0), i.unsqueeze(0))
        return e2[0], i2[0]

    def forward_sample(self, sample: Sample, training: bool = False,
                       rng: torch.Generator | None = None) -> ForwardOutput:
        """Run one sample end to end; returns unbatched vectors."""
        features, masks, _, _ = collate([sample])
        out = self.forward(features, masks, training=training, rng=rng)
        return ForwardOutput(*(t[0] for t in out))

    # --- batched forward ---

    def forward(self, features: Mapping[str, Tensor],
                masks: Mapping[str, Tensor] | None = None,
                training: bool = False,
                rng: torch.Generator | None = None,
                dropout_p: float | None = None) -> ForwardOutput:
        """features[m]: (B, T_m, d_m); masks[m]: (B, T_m) bool, True = valid.

        Modality dropout runs only when training=True and the effective p
        (dropout_p or the configured default) is positive; it needs `rng`.
        """
        for mod in MODALITIES:
            expected = self.config.input_dim(mod)
            if features[mod].shape[-1] != expected:
                raise DimMismatch(
                    f"{mod}: expected feature dim {expected}, "
                    f"got {features[mod].shape[-1]}"
                )
        per_task = {}
        for task in TASKS:
            embs = [
                self.encoders[f"{task}_{mod}"](
                    features[mod], None if masks is None else masks[mod])
                for mod in MODALITIES
            ]
            per_task[task] = torch.stack(embs, dim=1)  # (B, 3, h)

        p = self.config.dropout_p if dropout_p is None else dropout_p
        if training and p > 0:
            if rng is None:
                raise ValueError("training forward with dropout needs rng")
            batch = per_task["emotion"].shape[0]
            _, drop = sample_drop_masks(batch, p, rng)
            keep = (~drop).to(per_task["emotion"].dtype).unsqueeze(-1)
            per_task = {task: embs * keep for task, embs in per_task.items()}

        fused_e = self.fusion["emotion"](per_task["emotion"])
        fused_i = self.fusion["intent"](per_task["intent"])
        e_rep, i_rep = self.interaction(fused_e, fused_i)
        return ForwardOutput(
            emotion_logits=self.heads["emotion"](e_rep),
            intent_logits=self.heads["intent"](i_rep),
            emotion_rep=e_rep,
            intent_rep=i_rep,
        )


# --- batching ----------------------------------------------------------------

def collate(samples: Sequence[Sample]) -> tuple[dict[str, Tensor], dict[str, Tensor],
                                                Tensor, Tensor]:
    """Pad a list of samples into per-modality batches.

    Returns (features, masks, emotion_labels, intent_labels); masks mark
    valid (non-padded) positions.
    """
    features: dict[str, Tensor] = {}
    masks: dict[str, Tensor] = {}
    for mod in MODALITIES:
        lengths = [s.features[mod].shape[0] for s in samples]
        t_max = max(lengths)
        d = samples[0].features[mod].shape[1]
        feat = torch.zeros(len(samples), t_max, d)
        mask = torch.zeros(len(samples), t_max, dtype=torch.bool)
        for row, s in enumerate(samples):
            mat = torch.from_numpy(np.ascontiguousarray(s.features[mod], dtype=np.float32))
            feat[row, :mat.shape[0]] = mat
            mask[row, :mat.shape[0]] = True
        features[mod] = feat
        masks[mod] = mask
    emotions = torch.tensor([s.emotion for s in samples], dtype=torch.long)
    intents = torch.tensor([s.intent for s in samples], dtype=torch.long)
    return features, masks, emotions, intents


# --- checkpoints ---------------------------------------------------------------

def save_checkpoint(model: JointModel, path: str | Path, seed: int,
                    extra: dict | None = None) -> None:
    """Persist parameters as a named-array archive plus a JSON sidecar.

    Arrays are stored as little-endian float32 with their shapes, keyed by
    parameter name; the sidecar holds the model config, the training seed,
    and any `extra` metadata. Round-trips are bit-exact.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays = {name: tensor.detach().cpu().numpy().astype("<f4")
              for name, tensor in model.state_dict().items()}
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    sidecar = {"model_config": asdict(model.config), "seed": seed}
    sidecar.update(extra or {})
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2) + "\n")


def load_checkpoint(path: str | Path) -> tuple[JointModel, dict]:
    """Rebuild a model from save_checkpoint output. Returns (model, sidecar)."""
    path = Path(path)
    sidecar = json.loads(path.with_suffix(".json").read_text())
    model = JointModel(ModelConfig(**sidecar["model_config"]), seed=0)
    with np.load(path) as archive:
        state = {name: torch.from_numpy(archive[name].copy())
                 for name in archive.files}
    model.load_state_dict(state)
    model.eval()
    return model, sidecar
