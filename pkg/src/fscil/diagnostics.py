"""Randomized numerical diagnostics: finite-difference gradient checks for
every training objective, and the zero-spread agreement check between the
stochastic and deterministic heads.

Sampled weights are frozen per instance by re-running losses from a copied
stream position, so the objective is a smooth function of (mu, sigma) and
central differences apply.
"""

from __future__ import annotations

import numpy as np

from .data import EmbeddingSet, PrototypeSet
from .heads import DeterministicHead, StochasticHead
from .losses import (
    TrainingConfig,
    batch_base_loss,
    det_batch_base_loss,
    det_joint_loss,
    det_prototype_loss,
    joint_loss,
    prototype_loss,
)
from .numerics import finite_difference_gradient
from .rng import SplitMix64

LOSS_KINDS = ("base", "proto", "joint-0", "joint-0.6", "joint-0.9", "joint-1")


def gradient_agreement(analytic: np.ndarray, fd: np.ndarray,
                       rtol: float = 1e-5, atol: float = 1e-8) -> float:
    """Worst relative disagreement between two gradients.

    Each coordinate is measured as |a - f| / max(|a|, atol/rtol), which
    equals the plain relative error for meaningful coordinates and an
    absolute comparison at atol for coordinates below it.  Agreement
    passes when the result is <= rtol.
    """
    denom = np.maximum(np.abs(analytic), atol / rtol)
    return float(np.max(np.abs(analytic - fd) / denom)) if analytic.size else 0.0


def _random_instance(rng: SplitMix64, max_dim: int, max_classes: int):
    dim = 2 + int(rng.integers(1, max_dim - 1)[0])
    n_classes = 2 + int(rng.integers(1, max_classes - 1)[0])
    mu = rng.normal_matrix((n_classes, dim))
    mu /= np.linalg.norm(mu, axis=1, keepdims=True)
    sigma = 0.5 * rng.normal_matrix((n_classes, dim))  # signed spreads on purpose
    head = StochasticHead(np.arange(n_classes), mu, sigma)

    batch_n = 1 + int(rng.integers(1, 3)[0])
    X = rng.normal_matrix((batch_n, dim))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    y = rng.integers(batch_n, n_classes)
    batch = EmbeddingSet(np.arange(batch_n), y, X)

    n_protos = 1 + int(rng.integers(1, n_classes)[0])
    proto_classes = rng.choice(np.arange(n_classes), n_protos)
    pvecs = rng.normal_matrix((n_protos, dim))
    pvecs /= np.linalg.norm(pvecs, axis=1, keepdims=True)
    protos = PrototypeSet({int(c): pvecs[i] for i, c in enumerate(proto_classes)})

    scale = float([1.0, 4.0, 16.0][int(rng.integers(1, 3)[0])])
    return head, batch, protos, scale


def _loss_callable(kind: str, batch, protos, cfg: TrainingConfig):
    if kind == "base":
        return lambda head, rng: batch_base_loss(batch, head, rng, cfg)
    if kind == "proto":
        return lambda head, rng: prototype_loss(protos, head, rng, cfg)
    return lambda head, rng: joint_loss(batch, protos, head, rng, cfg)


def _plain_mean_ce(X, targets, weights, scale):
    # direct transcription of the objective, kept separate from the
    # analytic implementation on purpose
    ne = np.sqrt(np.sum(X * X, axis=1))
    nw = np.sqrt(np.sum(weights * weights, axis=1))
    z = scale * (X @ weights.T) / np.outer(ne, nw)
    m = z.max(axis=1)
    lse = m + np.log(np.sum(np.exp(z - m[:, None]), axis=1))
    return float(np.mean(lse - z[np.arange(len(X)), targets]))


def _plain_loss(kind: str, batch, protos, head_class_ids, lam, scale, mode):
    """Loss as a plain function of the sampled weight matrix."""
    pos = {int(c): i for i, c in enumerate(head_class_ids)}
    batch_targets = np.array([pos[int(c)] for c in batch.labels])
    proto_order = protos.class_ids()
    proto_targets = np.array([pos[c] for c in proto_order])
    pmat = protos.matrix(proto_order)

    def proto_part(w):
        if mode == "per-prototype":
            return _plain_mean_ce(pmat, proto_targets, w, scale)
        rows = w[proto_targets]
        z = scale * np.sum(pmat * rows, axis=1) / (
            np.sqrt(np.sum(pmat * pmat, axis=1)) * np.sqrt(np.sum(rows * rows, axis=1))
        )
        m = z.max()
        lse = m + np.log(np.sum(np.exp(z - m)))
        return float(lse - np.mean(z))

    def base_part(w):
        return _plain_mean_ce(batch.vectors, batch_targets, w, scale)

    if kind == "base":
        return base_part
    if kind == "proto":
        return proto_part
    return lambda w: (1.0 - lam) * base_part(w) + lam * proto_part(w)


def check_one_instance(kind: str, head, batch, protos, cfg: TrainingConfig,
                       noise: SplitMix64, h: float = 1e-6) -> float:
    """Worst gradient disagreement over mu and sigma for one loss instance.

    Analytic gradients come from the public loss functions; the
    finite-difference side re-derives the objective from scratch with the
    same frozen weight noise.
    """
    _, grads = _loss_callable(kind, batch, protos, cfg)(head, noise.copy())
    eps = noise.copy().normal_matrix(head.mu.shape)  # the draw the loss used
    plain = _plain_loss(
        kind, batch, protos, head.class_ids, cfg.lam, cfg.logit_scale,
        cfg.prototype_softmax,
    )
    fd_mu = finite_difference_gradient(lambda mu: plain(mu + eps * head.sigma), head.mu, h)
    fd_sigma = finite_difference_gradient(lambda s: plain(head.mu + eps * s), head.sigma, h)
    return max(
        gradient_agreement(grads.d_mu, fd_mu),
        gradient_agreement(grads.d_sigma, fd_sigma),
    )


def run_gradient_suite(
    n_instances: int = 1000,
    seed: int = 0,
    max_dim: int = 16,
    max_classes: int = 8,
    tol: float = 1e-5,
    h: float = 1e-6,
) -> dict:
    """Cycle random instances through every objective; collect worst errors.

    Returns {"worst": {kind: err}, "passed": bool, "tol": tol,
    "instances": n}.
    """
    rng = SplitMix64(seed).spawn("gradcheck")
    worst = {kind: 0.0 for kind in LOSS_KINDS}
    for i in range(n_instances):
        kind = LOSS_KINDS[i % len(LOSS_KINDS)]
        head, batch, protos, scale = _random_instance(rng, max_dim, max_classes)
        lam = 0.9 if "joint" not in kind else float(kind.split("-")[1])
        cfg = TrainingConfig(lam=lam, logit_scale=scale)
        err = check_one_instance(kind, head, batch, protos, cfg, rng.spawn(f"noise-{i}"), h)
        worst[kind] = max(worst[kind], err)
    return {
        "worst": worst,
        "passed": all(v <= tol for v in worst.values()),
        "tol": tol,
        "instances": n_instances,
    }


def run_sigma_zero_suite(
    n_instances: int = 100, seed: int = 0, max_dim: int = 16, max_classes: int = 8,
    tol: float = 1e-12,
) -> dict:
    """Zero-spread reduction: stochastic and deterministic paths must agree.

    With sigma identically zero the sampled weights equal the means, so
    losses and mean-gradients of the two heads must match to 1e-12.
    """
    rng = SplitMix64(seed).spawn("sigma-zero")
    worst_loss, worst_grad = 0.0, 0.0
    for i in range(n_instances):
        head, batch, protos, scale = _random_instance(rng, max_dim, max_classes)
        head = StochasticHead(head.class_ids, head.mu, np.zeros_like(head.sigma))
        det = DeterministicHead(head.class_ids, head.mu.copy())
        cfg = TrainingConfig(lam=0.6, logit_scale=scale)
        noise = rng.spawn(f"noise-{i}")
        for s_fn, d_fn in (
            (batch_base_loss, det_batch_base_loss),
            (prototype_loss, det_prototype_loss),
            (joint_loss, det_joint_loss),
        ):
            if s_fn is batch_base_loss:
                s_loss, s_grads = s_fn(batch, head, noise.copy(), cfg)
                d_loss, d_grad = d_fn(batch, det, cfg)
            elif s_fn is prototype_loss:
                s_loss, s_grads = s_fn(protos, head, noise.copy(), cfg)
                d_loss, d_grad = d_fn(protos, det, cfg)
            else:
                s_loss, s_grads = s_fn(batch, protos, head, noise.copy(), cfg)
                d_loss, d_grad = d_fn(batch, protos, det, cfg)
            worst_loss = max(worst_loss, abs(s_loss - d_loss))
            worst_grad = max(worst_grad, float(np.max(np.abs(s_grads.d_mu - d_grad))))
    return {
        "worst_loss_gap": worst_loss,
        "worst_mu_grad_gap": worst_grad,
        "passed": worst_loss <= tol and worst_grad <= tol,
        "tol": tol,
        "instances": n_instances,
    }
