"""Few-shot class-incremental classification engine.

A stochastic cosine classifier head over pluggable embedding vectors:
episodic base-session training, incremental expansion over N-way K-shot
sessions, prototype-anchored joint training, and cumulative evaluation
with average-accuracy / performance-drop reporting.
"""

from .archive import ArchiveManifest, read_archive, write_archive
from .data import EmbeddingSet, PrototypeSet
from .episodes import Episode, epoch_episodes, sample_episode
from .estimators import DeterministicCosineClassifier, StochasticCosineClassifier
from .heads import (
    DeterministicHead,
    StochasticHead,
    deterministic_head_from_means,
    expand_deterministic,
    expand_stochastic,
    predict_labels,
    prototypes_from_head,
    stochastic_head_from_means,
    train_base,
    train_incremental,
)
from .losses import (
    TrainingConfig,
    base_loss,
    batch_base_loss,
    det_base_loss,
    det_batch_base_loss,
    det_joint_loss,
    det_prototype_loss,
    joint_loss,
    prototype_loss,
)
from .metrics import (
    RunReport,
    SessionAccuracyRecord,
    accuracy,
    average_accuracy,
    build_report,
    emit_report,
    performance_dropping,
)
from .numerics import (
    GradientPair,
    cosine_similarity,
    finite_difference_gradient,
    grad_cosine_ce,
    log_softmax_ce,
    sample_stochastic_weights,
)
from .optim import OptimizerConfig, OptimizerState, optimizer_step
from .protocol import (
    SessionPlan,
    SessionState,
    evaluate_session,
    plan_from_manifest,
    run_base_session,
    run_full_protocol,
    run_incremental_session,
)
from .rng import SplitMix64, ensure_rng
from .synthetic import SyntheticSpec, generate_synthetic

__version__ = "0.1.0"

__all__ = [
    "ArchiveManifest",
    "DeterministicCosineClassifier",
    "DeterministicHead",
    "EmbeddingSet",
    "Episode",
    "GradientPair",
    "OptimizerConfig",
    "OptimizerState",
    "PrototypeSet",
    "RunReport",
    "SessionAccuracyRecord",
    "SessionPlan",
    "SessionState",
    "SplitMix64",
    "StochasticCosineClassifier",
    "StochasticHead",
    "SyntheticSpec",
    "TrainingConfig",
    "accuracy",
    "average_accuracy",
    "base_loss",
    "batch_base_loss",
    "build_report",
    "cosine_similarity",
    "det_base_loss",
    "det_batch_base_loss",
    "det_joint_loss",
    "det_prototype_loss",
    "deterministic_head_from_means",
    "emit_report",
    "ensure_rng",
    "epoch_episodes",
    "evaluate_session",
    "expand_deterministic",
    "expand_stochastic",
    "finite_difference_gradient",
    "generate_synthetic",
    "grad_cosine_ce",
    "joint_loss",
    "log_softmax_ce",
    "optimizer_step",
    "performance_dropping",
    "plan_from_manifest",
    "predict_labels",
    "prototype_loss",
    "prototypes_from_head",
    "read_archive",
    "run_base_session",
    "run_full_protocol",
    "run_incremental_session",
    "sample_episode",
    "sample_stochastic_weights",
    "stochastic_head_from_means",
    "train_base",
    "train_incremental",
    "write_archive",
]
