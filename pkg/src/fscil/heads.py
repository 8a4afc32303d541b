"""Classifier head state and the training loops that fit it.

A head is per-class rows of weights: the stochastic head keeps a mean and
a spread row per class and samples its effective weights during training;
the deterministic head keeps plain weight rows.  Inference always scores
by cosine against the mean rows, so both heads predict identically when
their weights coincide.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .data import EmbeddingSet, PrototypeSet
from .episodes import epoch_episodes
from .exceptions import (
    DegenerateInputError,
    LabelOverlapError,
    ShapeMismatchError,
    TrainingDivergenceError,
)
from .losses import TrainingConfig, batch_base_loss, det_batch_base_loss, det_joint_loss, joint_loss
from .numerics import cosine_matrix
from .optim import OptimizerState, optimizer_step
from .rng import SplitMix64
from .validation import check_matrix

log = logging.getLogger(__name__)


def _check_rows(class_ids, rows, name):
    if len(class_ids) != rows.shape[0]:
        raise ShapeMismatchError(f"{len(class_ids)} class ids for {rows.shape[0]} {name} rows")
    if len(set(class_ids.tolist())) != len(class_ids):
        raise ValueError("duplicate class ids in head")
    if np.any(np.linalg.norm(rows, axis=1) == 0.0):
        raise DegenerateInputError(f"{name} contains a zero-norm row")


@dataclass
class StochasticHead:
    """Per-class mean and spread rows; sampling uses mu + eps * sigma."""

    class_ids: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        self.class_ids = np.asarray(self.class_ids, dtype=np.int64)
        self.mu = check_matrix(self.mu, "mu")
        self.sigma = check_matrix(self.sigma, "sigma")
        _check_rows(self.class_ids, self.mu, "mu")
        if self.sigma.shape != self.mu.shape:
            raise ShapeMismatchError("sigma shape differs from mu shape")

    @property
    def dim(self) -> int:
        return self.mu.shape[1]

    @property
    def inference_weights(self) -> np.ndarray:
        return self.mu

    def copy(self) -> "StochasticHead":
        return StochasticHead(self.class_ids.copy(), self.mu.copy(), self.sigma.copy())


@dataclass
class DeterministicHead:
    """Per-class fixed weight rows; the ablation baseline."""

    class_ids: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.class_ids = np.asarray(self.class_ids, dtype=np.int64)
        self.weights = check_matrix(self.weights, "weights")
        _check_rows(self.class_ids, self.weights, "weights")

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    @property
    def inference_weights(self) -> np.ndarray:
        return self.weights

    def copy(self) -> "DeterministicHead":
        return DeterministicHead(self.class_ids.copy(), self.weights.copy())


def _class_mean_rows(embeddings: EmbeddingSet):
    if len(embeddings) == 0:
        raise ValueError("cannot initialize a head from an empty embedding set")
    means = embeddings.class_means()
    class_ids = np.array(sorted(means), dtype=np.int64)
    rows = np.vstack([means[int(c)] for c in class_ids])
    if np.any(np.linalg.norm(rows, axis=1) == 0.0):
        raise DegenerateInputError("a class mean has zero norm")
    return class_ids, rows


def stochastic_head_from_means(embeddings: EmbeddingSet, sigma_init: float = 0.1) -> StochasticHead:
    """Head with mu rows set to per-class embedding means, sigma constant."""
    class_ids, rows = _class_mean_rows(embeddings)
    return StochasticHead(class_ids, rows, np.full_like(rows, sigma_init))


def deterministic_head_from_means(embeddings: EmbeddingSet) -> DeterministicHead:
    class_ids, rows = _class_mean_rows(embeddings)
    return DeterministicHead(class_ids, rows)


def _expand_rows(head_ids, new_means: dict[int, np.ndarray], dim: int):
    if not new_means:
        return np.empty(0, dtype=np.int64), np.empty((0, dim))
    overlap = set(head_ids.tolist()) & set(int(c) for c in new_means)
    if overlap:
        raise LabelOverlapError(f"classes already present: {sorted(overlap)}")
    new_ids = np.array(sorted(int(c) for c in new_means), dtype=np.int64)
    rows = np.vstack([np.asarray(new_means[int(c)], dtype=np.float64) for c in new_ids])
    if rows.shape[1] != dim:
        raise ShapeMismatchError(f"new class means have dim {rows.shape[1]}, head has {dim}")
    if np.any(np.linalg.norm(rows, axis=1) == 0.0):
        raise DegenerateInputError("a new class mean has zero norm")
    return new_ids, rows


def expand_stochastic(
    head: StochasticHead, new_means: dict[int, np.ndarray], sigma_init: float = 0.1
) -> StochasticHead:
    """Append one (mu, sigma) row per new class; existing rows untouched."""
    new_ids, rows = _expand_rows(head.class_ids, new_means, head.dim)
    if len(new_ids) == 0:
        return head.copy()
    return StochasticHead(
        np.concatenate([head.class_ids, new_ids]),
        np.vstack([head.mu, rows]),
        np.vstack([head.sigma, np.full_like(rows, sigma_init)]),
    )


def expand_deterministic(
    head: DeterministicHead, new_means: dict[int, np.ndarray]
) -> DeterministicHead:
    new_ids, rows = _expand_rows(head.class_ids, new_means, head.dim)
    if len(new_ids) == 0:
        return head.copy()
    return DeterministicHead(
        np.concatenate([head.class_ids, new_ids]), np.vstack([head.weights, rows])
    )


def predict_labels(embeddings, head) -> np.ndarray:
    """Cosine argmax against the head's mean rows; ties go to the lowest row."""
    X = check_matrix(np.atleast_2d(np.asarray(embeddings, dtype=np.float64)), "embeddings")
    scores = cosine_matrix(X, head.inference_weights)
    return head.class_ids[np.argmax(scores, axis=1)]


def prototypes_from_head(head) -> PrototypeSet:
    """Snapshot the head's mean rows as the stored prototypes."""
    weights = head.inference_weights
    return PrototypeSet(
        {int(c): weights[i].copy() for i, c in enumerate(head.class_ids)}
    )


def _check_step(loss: float, step: int) -> None:
    if not np.isfinite(loss):
        raise TrainingDivergenceError(f"loss became non-finite at step {step}", step=step)


def train_base(
    head: StochasticHead,
    data: EmbeddingSet,
    cfg: TrainingConfig,
    n_way: int,
    k_shot: int,
    rng: SplitMix64,
) -> tuple[StochasticHead, list[float]]:
    """Episodic training on the embedding loss; one step per episode.

    Each epoch re-tiles the data into fresh episodes; by default the loss
    sees the query sets only.
    """
    head = head.copy()
    rng_ep, rng_noise = rng.spawn("episodes"), rng.spawn("noise")
    st_mu, st_sigma = OptimizerState(head.mu.shape), OptimizerState(head.sigma.shape)
    trace = []
    for _ in range(cfg.epochs):
        for episode in epoch_episodes(data, n_way, k_shot, rng_ep):
            batch = episode.query
            if cfg.episode_loss_on_support:
                batch = EmbeddingSet.concat([episode.support, episode.query])
            loss, grads = batch_base_loss(batch, head, rng_noise, cfg)
            _check_step(loss, len(trace))
            head.mu = optimizer_step(head.mu, grads.d_mu, st_mu, cfg.optimizer)
            if cfg.train_sigma:
                head.sigma = optimizer_step(head.sigma, grads.d_sigma, st_sigma, cfg.optimizer)
            trace.append(loss)
    return head, trace


def train_incremental(
    head: StochasticHead,
    support: EmbeddingSet,
    protos: PrototypeSet,
    cfg: TrainingConfig,
    rng: SplitMix64,
) -> tuple[StochasticHead, list[float]]:
    """Joint-objective training: one full-batch step per incremental epoch."""
    head = head.copy()
    rng_noise = rng.spawn("noise")
    st_mu, st_sigma = OptimizerState(head.mu.shape), OptimizerState(head.sigma.shape)
    trace = []
    for step in range(cfg.incremental_epochs):
        loss, grads = joint_loss(support, protos, head, rng_noise, cfg)
        _check_step(loss, step)
        head.mu = optimizer_step(head.mu, grads.d_mu, st_mu, cfg.optimizer)
        if cfg.train_sigma:
            head.sigma = optimizer_step(head.sigma, grads.d_sigma, st_sigma, cfg.optimizer)
        trace.append(loss)
    return head, trace


def det_train_base(
    head: DeterministicHead,
    data: EmbeddingSet,
    cfg: TrainingConfig,
    n_way: int,
    k_shot: int,
    rng: SplitMix64,
) -> tuple[DeterministicHead, list[float]]:
    head = head.copy()
    rng_ep = rng.spawn("episodes")
    state = OptimizerState(head.weights.shape)
    trace = []
    for _ in range(cfg.epochs):
        for episode in epoch_episodes(data, n_way, k_shot, rng_ep):
            batch = episode.query
            if cfg.episode_loss_on_support:
                batch = EmbeddingSet.concat([episode.support, episode.query])
            loss, d_w = det_batch_base_loss(batch, head, cfg)
            _check_step(loss, len(trace))
            head.weights = optimizer_step(head.weights, d_w, state, cfg.optimizer)
            trace.append(loss)
    return head, trace


def det_train_incremental(
    head: DeterministicHead,
    support: EmbeddingSet,
    protos: PrototypeSet,
    cfg: TrainingConfig,
    rng: SplitMix64,
) -> tuple[DeterministicHead, list[float]]:
    head = head.copy()
    state = OptimizerState(head.weights.shape)
    trace = []
    for step in range(cfg.incremental_epochs):
        loss, d_w = det_joint_loss(support, protos, head, cfg)
        _check_step(loss, step)
        head.weights = optimizer_step(head.weights, d_w, state, cfg.optimizer)
        trace.append(loss)
    return head, trace
