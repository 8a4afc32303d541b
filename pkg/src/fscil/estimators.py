"""Scikit-learn style estimators around the cosine classifier heads.

``fit(X, y)`` runs the abundant-data phase: per-class mean initialization
followed by episodic training of the head.  ``expand_fit(X, y)`` admits a
batch of previously unseen classes: their mean rows are appended and the
whole head is retrained under the joint objective, anchored to the stored
prototypes of the classes seen so far.  ``predict`` scores by cosine
against the mean rows.

Both estimators are plain sklearn estimators (get_params/set_params,
clone-safe, ClassifierMixin scoring); ``classes_`` lists classes in
admission order: base classes ascending, then each expansion batch
ascending.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .data import EmbeddingSet
from .exceptions import LabelOverlapError, ShapeMismatchError
from .heads import (
    det_train_base,
    det_train_incremental,
    deterministic_head_from_means,
    expand_deterministic,
    expand_stochastic,
    predict_labels,
    prototypes_from_head,
    stochastic_head_from_means,
    train_base,
    train_incremental,
)
from .losses import TrainingConfig
from .numerics import cosine_matrix
from .optim import OptimizerConfig
from .rng import SplitMix64, ensure_rng
from .validation import check_X_y, check_matrix


class _CosineClassifierBase(BaseEstimator, ClassifierMixin):
    def _optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(
            method=self.optimizer,
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            beta1=self.beta1,
            beta2=self.beta2,
            eps=self.adam_eps,
        )

    def _session_rng(self, rng: SplitMix64 | None) -> SplitMix64:
        if rng is not None:
            return rng
        return ensure_rng(self.random_state).spawn(f"session-{self._n_sessions}")

    def _as_embedding_set(self, X, y) -> EmbeddingSet:
        X, y = check_X_y(X, y)
        return EmbeddingSet(np.arange(len(y)), y, X)

    def _check_expand_inputs(self, X, y):
        check_is_fitted(self, "head_")
        X, y = check_X_y(X, y)
        if X.shape[1] != self.n_features_in_:
            raise ShapeMismatchError(
                f"expected {self.n_features_in_} features, got {X.shape[1]}"
            )
        seen = set(self.classes_.tolist())
        overlap = seen & set(np.unique(y).tolist())
        if overlap:
            raise LabelOverlapError(f"classes already fitted: {sorted(overlap)[:5]}")
        return X, y

    def _finish_session(self, head, trace):
        self.head_ = head
        self.classes_ = head.class_ids
        self.prototypes_ = prototypes_from_head(head)
        self.loss_traces_.append(trace)
        self._n_sessions += 1
        return self

    def decision_function(self, X):
        """Cosine similarity of each sample to each class row."""
        check_is_fitted(self, "head_")
        X = check_matrix(np.atleast_2d(np.asarray(X, dtype=np.float64)), "X")
        return cosine_matrix(X, self.head_.inference_weights)

    def predict(self, X):
        check_is_fitted(self, "head_")
        return predict_labels(X, self.head_)


class StochasticCosineClassifier(_CosineClassifierBase):
    """Cosine classifier whose class weights are sampled during training.

    Each training step draws effective weights ``mu + eps * sigma`` with
    eps standard normal, so every class row carries a trainable spread
    around its mean; inference uses the means alone.

    Parameters
    ----------
    epochs : int
        Episodic passes over the data in ``fit``.  0 leaves the head at
        its class-mean initialization.
    incremental_epochs : int
        Full-batch joint-objective steps per ``expand_fit`` call.
    n_way, k_shot : int
        Episode shape used during ``fit``.
    lam : float in [0, 1]
        Weight of the prototype-anchoring term in ``expand_fit``.
    logit_scale : float
        Multiplier applied to cosines before the softmax.
    sigma_init : float
        Initial value of every spread entry.
    mc_samples : int
        Weight draws averaged per training step.
    train_sigma : bool
        Whether spread rows receive updates.
    prototype_softmax : {"per-prototype", "paired"}
        How stored prototypes are scored during ``expand_fit``.
    episode_loss_on_support : bool
        Include episode support sets in the training loss (queries only
        by default).
    optimizer : {"sgd", "momentum", "adam"}
    random_state : int, SplitMix64 or None
        Root of all sampling; fits are reproducible given equal roots.

    Attributes
    ----------
    head_ : StochasticHead
    classes_ : ndarray of admitted class ids, in admission order
    prototypes_ : PrototypeSet refreshed from the means after each session
    loss_traces_ : list of per-session step-loss lists
    """

    def __init__(
        self,
        epochs=50,
        incremental_epochs=100,
        n_way=5,
        k_shot=5,
        lam=0.9,
        logit_scale=1.0,
        sigma_init=0.1,
        mc_samples=1,
        train_sigma=True,
        prototype_softmax="per-prototype",
        episode_loss_on_support=False,
        optimizer="sgd",
        learning_rate=0.01,
        momentum=0.9,
        beta1=0.9,
        beta2=0.999,
        adam_eps=1e-8,
        random_state=None,
    ):
        self.epochs = epochs
        self.incremental_epochs = incremental_epochs
        self.n_way = n_way
        self.k_shot = k_shot
        self.lam = lam
        self.logit_scale = logit_scale
        self.sigma_init = sigma_init
        self.mc_samples = mc_samples
        self.train_sigma = train_sigma
        self.prototype_softmax = prototype_softmax
        self.episode_loss_on_support = episode_loss_on_support
        self.optimizer = optimizer
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.beta1 = beta1
        self.beta2 = beta2
        self.adam_eps = adam_eps
        self.random_state = random_state

    def _training_config(self) -> TrainingConfig:
        return TrainingConfig(
            lam=self.lam,
            logit_scale=self.logit_scale,
            epochs=self.epochs,
            incremental_epochs=self.incremental_epochs,
            mc_samples_per_step=self.mc_samples,
            sigma_init=self.sigma_init,
            train_sigma=self.train_sigma,
            prototype_softmax=self.prototype_softmax,
            episode_loss_on_support=self.episode_loss_on_support,
            optimizer=self._optimizer_config(),
        )

    def fit(self, X, y, rng: SplitMix64 | None = None):
        """Initialize from class means and train episodically."""
        data = self._as_embedding_set(X, y)
        cfg = self._training_config()
        self.n_features_in_ = data.dim
        self.loss_traces_ = []
        self._n_sessions = 0
        head = stochastic_head_from_means(data, cfg.sigma_init)
        head, trace = train_base(
            head, data, cfg, self.n_way, self.k_shot, self._session_rng(rng)
        )
        return self._finish_session(head, trace)

    def expand_fit(self, X, y, rng: SplitMix64 | None = None):
        """Admit new classes from a small support batch.

        New rows start at the support class means; the whole head then
        trains under the joint objective against the prototypes stored
        for the previously seen classes, and the prototype registry is
        refreshed from the resulting means.
        """
        X, y = self._check_expand_inputs(X, y)
        support = EmbeddingSet(np.arange(len(y)), y, X)
        cfg = self._training_config()
        stream = self._session_rng(rng)
        head = expand_stochastic(self.head_, support.class_means(), cfg.sigma_init)
        head, trace = train_incremental(head, support, self.prototypes_, cfg, stream)
        return self._finish_session(head, trace)


class DeterministicCosineClassifier(_CosineClassifierBase):
    """Ablation baseline: identical pipeline with fixed class weights.

    See StochasticCosineClassifier for the shared parameters; there is no
    weight sampling, so the spread-related knobs do not exist here.
    """

    def __init__(
        self,
        epochs=50,
        incremental_epochs=100,
        n_way=5,
        k_shot=5,
        lam=0.9,
        logit_scale=1.0,
        prototype_softmax="per-prototype",
        episode_loss_on_support=False,
        optimizer="sgd",
        learning_rate=0.01,
        momentum=0.9,
        beta1=0.9,
        beta2=0.999,
        adam_eps=1e-8,
        random_state=None,
    ):
        self.epochs = epochs
        self.incremental_epochs = incremental_epochs
        self.n_way = n_way
        self.k_shot = k_shot
        self.lam = lam
        self.logit_scale = logit_scale
        self.prototype_softmax = prototype_softmax
        self.episode_loss_on_support = episode_loss_on_support
        self.optimizer = optimizer
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.beta1 = beta1
        self.beta2 = beta2
        self.adam_eps = adam_eps
        self.random_state = random_state

    def _training_config(self) -> TrainingConfig:
        return TrainingConfig(
            lam=self.lam,
            logit_scale=self.logit_scale,
            epochs=self.epochs,
            incremental_epochs=self.incremental_epochs,
            prototype_softmax=self.prototype_softmax,
            episode_loss_on_support=self.episode_loss_on_support,
            optimizer=self._optimizer_config(),
        )

    def fit(self, X, y, rng: SplitMix64 | None = None):
        """Initialize from class means and train episodically."""
        data = self._as_embedding_set(X, y)
        cfg = self._training_config()
        self.n_features_in_ = data.dim
        self.loss_traces_ = []
        self._n_sessions = 0
        head = deterministic_head_from_means(data)
        head, trace = det_train_base(
            head, data, cfg, self.n_way, self.k_shot, self._session_rng(rng)
        )
        return self._finish_session(head, trace)

    def expand_fit(self, X, y, rng: SplitMix64 | None = None):
        """Admit new classes; identical flow with plain weights."""
        X, y = self._check_expand_inputs(X, y)
        support = EmbeddingSet(np.arange(len(y)), y, X)
        cfg = self._training_config()
        stream = self._session_rng(rng)
        head = expand_deterministic(self.head_, support.class_means())
        head, trace = det_train_incremental(head, support, self.prototypes_, cfg, stream)
        return self._finish_session(head, trace)
