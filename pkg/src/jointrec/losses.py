"""Training objectives.

Two pieces per task: a class-weighted cross-entropy on the logits, and a
sample-weighted focal contrastive term on the L2-normalized representations
that sharpens attention on hard positives and rare classes. The combined
objective is lambda_ce * (ce_e + ce_i) + mu_swfc * (swfc_e + swfc_i).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import Tensor

from .model import ForwardOutput

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SWFCConfig:
    """Knobs for one task's contrastive term.

    weights holds one positive multiplier per class (typically inverse
    frequency, capped). gamma=0 with unit weights recovers plain supervised
    contrastive loss.
    """

    weights: Tensor
    gamma: float = 2.0
    tau: float = 0.1

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.tau <= 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if self.weights.ndim != 1 or self.weights.numel() == 0:
            raise ValueError("weights must be a non-empty 1-D tensor")
        if bool((self.weights <= 0).any()):
            raise ValueError("class weights must be positive")


def swfc_anchor_terms(embeddings: Tensor, labels: Tensor,
                      cfg: SWFCConfig) -> tuple[Tensor, Tensor]:
    """Per-anchor focal contrastive terms.

    embeddings: (N, h) raw representations, normalized internally;
    labels: (N,) ints. Returns (terms, active) where terms[i] is

        -(w[y_i] / |P(i)|) * sum_{p in P(i)} (1 - q_ip)^gamma * log q_ip

    with q_ip the temperature-scaled softmax of anchor i over all other
    samples, P(i) the other samples sharing i's label, and active[i] marks
    anchors with at least one positive. Anchors without positives get 0.
    """
    n = embeddings.shape[0]
    if n < 2:
        raise ValueError(f"contrastive term needs at least 2 samples, got {n}")
    if int(labels.max()) >= cfg.weights.numel():
        raise ValueError(
            f"label {int(labels.max())} out of range for {cfg.weights.numel()} weights"
        )

    norms = embeddings.norm(dim=1, keepdim=True)
    zero = norms.squeeze(1) == 0
    if bool(zero.any()):
        logger.warning("replacing %d zero-norm embedding(s) with a fixed unit vector",
                       int(zero.sum()))
        basis = torch.zeros_like(embeddings)
        basis[:, 0] = 1.0
        z = torch.where(zero.unsqueeze(1), basis, embeddings / norms.clamp_min(1e-30))
    else:
        z = embeddings / norms

    sim = (z @ z.T) / cfg.tau
    eye = torch.eye(n, dtype=torch.bool, device=sim.device)
    sim = sim.masked_fill(eye, float("-inf"))
    log_q = sim - torch.logsumexp(sim, dim=1, keepdim=True)
    q = log_q.exp()

    pos = (labels.unsqueeze(0) == labels.unsqueeze(1)) & ~eye
    # keep -inf log-probs out of the arithmetic; they live only off-positives
    safe_logq = torch.where(pos, log_q, torch.zeros_like(log_q))
    pair_terms = (1.0 - q) ** cfg.gamma * safe_logq

    pos_count = pos.sum(dim=1)
    active = pos_count > 0
    w = cfg.weights.to(embeddings.dtype)[labels]
    denom = pos_count.clamp(min=1).to(embeddings.dtype)
    terms = -(w / denom) * pair_terms.sum(dim=1)
    return torch.where(active, terms, torch.zeros_like(terms)), active


def swfc_loss(embeddings: Tensor, labels: Tensor, cfg: SWFCConfig) -> Tensor:
    """Mean of the per-anchor terms over anchors that have positives.

    Batches where no anchor has a positive return exactly 0.
    """
    terms, active = swfc_anchor_terms(embeddings, labels, cfg)
    return terms.sum() / max(1, int(active.sum()))


def weighted_cross_entropy(logits: Tensor, labels: Tensor,
                           weights: Tensor | None = None) -> Tensor:
    """Cross-entropy averaged over the batch, each sample scaled by its
    class weight. The divisor is the batch size, not the weight sum."""
    log_probs = F.log_softmax(logits, dim=1)
    picked = log_probs.gather(1, labels.unsqueeze(1)).squeeze(1)
    if weights is not None:
        picked = picked * weights.to(logits.dtype)[labels]
    return -picked.mean()


@dataclass
class LossBreakdown:
    total: Tensor
    ce_emotion: Tensor
    ce_intent: Tensor
    swfc_emotion: Tensor
    swfc_intent: Tensor
    lambda_ce: float
    mu_swfc: float

    def scalars(self) -> dict[str, float]:
        return {
            "total": float(self.total.item()),
            "ce_emotion": float(self.ce_emotion.item()),
            "ce_intent": float(self.ce_intent.item()),
            "swfc_emotion": float(self.swfc_emotion.item()),
            "swfc_intent": float(self.swfc_intent.item()),
        }


def total_loss(out: ForwardOutput, emotion_labels: Tensor, intent_labels: Tensor,
               emotion_cfg: SWFCConfig, intent_cfg: SWFCConfig,
               lambda_ce: float = 1.0, mu_swfc: float = 0.5,
               weighted_ce: bool = True) -> LossBreakdown:
    """Combine both tasks' objectives for one batch.

    The contrastive terms are skipped (contribute exactly 0) when mu_swfc
    is 0 or the batch has fewer than 2 samples.
    """
    ce_w_e = emotion_cfg.weights if weighted_ce else None
    ce_w_i = intent_cfg.weights if weighted_ce else None
    ce_e = weighted_cross_entropy(out.emotion_logits, emotion_labels, ce_w_e)
    ce_i = weighted_cross_entropy(out.intent_logits, intent_labels, ce_w_i)

    if mu_swfc != 0.0 and emotion_labels.shape[0] >= 2:
        swfc_e = swfc_loss(out.emotion_rep, emotion_labels, emotion_cfg)
        swfc_i = swfc_loss(out.intent_rep, intent_labels, intent_cfg)
    else:
        swfc_e = out.emotion_rep.sum() * 0.0
        swfc_i = out.intent_rep.sum() * 0.0

    total = lambda_ce * (ce_e + ce_i) + mu_swfc * (swfc_e + swfc_i)
    return LossBreakdown(total=total, ce_emotion=ce_e, ce_intent=ce_i,
                         swfc_emotion=swfc_e, swfc_intent=swfc_i,
                         lambda_ce=lambda_ce, mu_swfc=mu_swfc)
