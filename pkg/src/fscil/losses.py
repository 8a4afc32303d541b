"""Training objectives for the cosine classifier heads.

The stochastic head draws sampled weights mu_hat = mu + eps * sigma once
per Monte Carlo draw; one sampled head scores the whole batch and, in the
joint objective, the prototype term too.  Gradients reach mu unchanged and
sigma through the elementwise eps factor of the reparameterization.

All losses return (scalar loss, gradient) pairs; stochastic variants
return a GradientPair (d_mu, d_sigma), deterministic variants a single
weight-matrix gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import EmbeddingSet, PrototypeSet
from .numerics import (
    GradientPair,
    batch_cosine_ce,
    cosine_to_rows,
    sample_stochastic_weights_with_noise,
    softmax,
)
from .optim import OptimizerConfig
from .rng import SplitMix64

PROTOTYPE_SOFTMAX_MODES = ("per-prototype", "paired")


@dataclass(frozen=True)
class TrainingConfig:
    """Knobs for head training.

    lam weights the prototype-anchoring term of the joint objective.
    logit_scale multiplies every cosine before the softmax (1.0 keeps the
    raw cosine range; larger values sharpen gradients).  prototype_softmax
    selects how stored prototypes are scored: "per-prototype" scores each
    prototype against every class weight; "paired" builds one softmax from
    the matched prototype/weight diagonal only.
    """

    lam: float = 0.9
    logit_scale: float = 1.0
    epochs: int = 50
    incremental_epochs: int = 100
    mc_samples_per_step: int = 1
    sigma_init: float = 0.1
    train_sigma: bool = True
    prototype_softmax: str = "per-prototype"
    episode_loss_on_support: bool = False
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lam must lie in [0, 1], got {self.lam}")
        if self.logit_scale <= 0:
            raise ValueError("logit_scale must be positive")
        if self.epochs < 0 or self.incremental_epochs < 0:
            raise ValueError("epoch counts must be non-negative")
        if self.mc_samples_per_step < 1:
            raise ValueError("mc_samples_per_step must be at least 1")
        if self.prototype_softmax not in PROTOTYPE_SOFTMAX_MODES:
            raise ValueError(
                f"prototype_softmax must be one of {PROTOTYPE_SOFTMAX_MODES}"
            )


def _label_positions(class_ids, labels) -> np.ndarray:
    lookup = {int(c): i for i, c in enumerate(class_ids)}
    try:
        return np.array([lookup[int(c)] for c in labels], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"label {exc.args[0]} not present in the head") from None


def _base_term(batch: EmbeddingSet, class_ids, weights, scale):
    targets = _label_positions(class_ids, batch.labels)
    return batch_cosine_ce(batch.vectors, targets, weights, scale)


def _prototype_term(protos: PrototypeSet, class_ids, weights, scale, mode):
    """Mean prototype loss against one weight matrix, and its gradient."""
    if len(protos) == 0:
        raise ValueError("prototype set is empty")
    order = protos.class_ids()
    targets = _label_positions(class_ids, order)
    pmat = protos.matrix(order)
    if mode == "per-prototype":
        # each prototype is scored against every class weight
        return batch_cosine_ce(pmat, targets, weights, scale)
    # paired: one softmax over matched prototype/weight cosines; only
    # classes with a stored prototype enter the denominator
    rows = weights[targets]
    z = np.array(
        [scale * cosine_to_rows(pmat[j], rows[j : j + 1])[0] for j in range(len(order))]
    )
    m = np.max(z)
    lse = m + np.log(np.sum(np.exp(z - m)))
    loss = max(0.0, float(lse - np.mean(z)))
    g = softmax(z) - 1.0 / len(order)
    d_w = np.zeros_like(weights)
    nw = np.linalg.norm(rows, axis=1)
    np_ = np.linalg.norm(pmat, axis=1)
    cos = z / scale
    for j, h in enumerate(targets):
        d_w[h] += (scale * g[j]) * (
            pmat[j] / (np_[j] * nw[j]) - cos[j] * rows[j] / nw[j] ** 2
        )
    return loss, d_w


def _mc_average(head, rng: SplitMix64, cfg: TrainingConfig, term_fn):
    """Average a weight-matrix term over fresh sampled heads."""
    total_loss = 0.0
    total_mu = np.zeros_like(head.mu)
    total_sigma = np.zeros_like(head.sigma)
    for _ in range(cfg.mc_samples_per_step):
        weights, eps = sample_stochastic_weights_with_noise(head.mu, head.sigma, rng)
        loss, d_w = term_fn(weights)
        total_loss += loss
        total_mu += d_w
        total_sigma += eps * d_w
    k = cfg.mc_samples_per_step
    return total_loss / k, GradientPair(total_mu / k, total_sigma / k)


# -- stochastic head ---------------------------------------------------------


def base_loss(embedding, label, head, rng: SplitMix64, cfg: TrainingConfig):
    """Cross-entropy of one embedding against sampled class weights."""
    single = EmbeddingSet(
        np.array([0]), np.array([int(label)]), np.asarray(embedding, dtype=np.float64)[None, :]
    )
    return batch_base_loss(single, head, rng, cfg)


def batch_base_loss(batch: EmbeddingSet, head, rng: SplitMix64, cfg: TrainingConfig):
    """Mean embedding cross-entropy; one sampled head per draw scores the batch."""
    return _mc_average(
        head, rng, cfg,
        lambda w: _base_term(batch, head.class_ids, w, cfg.logit_scale),
    )


def prototype_loss(protos: PrototypeSet, head, rng: SplitMix64, cfg: TrainingConfig):
    """Mean anchoring loss of stored prototypes against sampled weights."""
    return _mc_average(
        head, rng, cfg,
        lambda w: _prototype_term(
            protos, head.class_ids, w, cfg.logit_scale, cfg.prototype_softmax
        ),
    )


def joint_loss(batch: EmbeddingSet, protos: PrototypeSet, head, rng, cfg: TrainingConfig):
    """(1 - lam) * embedding term + lam * prototype term, one shared draw each."""

    def term(weights):
        base_l, base_g = _base_term(batch, head.class_ids, weights, cfg.logit_scale)
        proto_l, proto_g = _prototype_term(
            protos, head.class_ids, weights, cfg.logit_scale, cfg.prototype_softmax
        )
        return (
            (1.0 - cfg.lam) * base_l + cfg.lam * proto_l,
            (1.0 - cfg.lam) * base_g + cfg.lam * proto_g,
        )

    return _mc_average(head, rng, cfg, term)


# -- deterministic head ------------------------------------------------------


def det_base_loss(embedding, label, head, cfg: TrainingConfig):
    single = EmbeddingSet(
        np.array([0]), np.array([int(label)]), np.asarray(embedding, dtype=np.float64)[None, :]
    )
    return det_batch_base_loss(single, head, cfg)


def det_batch_base_loss(batch: EmbeddingSet, head, cfg: TrainingConfig):
    return _base_term(batch, head.class_ids, head.weights, cfg.logit_scale)


def det_prototype_loss(protos: PrototypeSet, head, cfg: TrainingConfig):
    return _prototype_term(
        protos, head.class_ids, head.weights, cfg.logit_scale, cfg.prototype_softmax
    )


def det_joint_loss(batch: EmbeddingSet, protos: PrototypeSet, head, cfg: TrainingConfig):
    base_l, base_g = det_batch_base_loss(batch, head, cfg)
    proto_l, proto_g = det_prototype_loss(protos, head, cfg)
    return (
        (1.0 - cfg.lam) * base_l + cfg.lam * proto_l,
        (1.0 - cfg.lam) * base_g + cfg.lam * proto_g,
    )
