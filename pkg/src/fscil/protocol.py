"""Multi-session run orchestration: base training, incremental expansion,
cumulative evaluation, and report assembly.

A run walks an ordered schedule of disjoint class groups.  Session 0
trains the head on abundant data; each later session contributes exactly
n_way new classes with k_shot support samples each.  After every session
the model is scored on the union of all test sets seen so far, split into
base / incremental / all groups.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .archive import ArchiveManifest
from .data import EmbeddingSet
from .estimators import DeterministicCosineClassifier, StochasticCosineClassifier
from .exceptions import LabelOverlapError, PlanViolationError
from .losses import TrainingConfig
from .metrics import RunReport, SessionAccuracyRecord, accuracy, build_report
from .rng import SplitMix64

CLASSIFIER_KINDS = ("stochastic", "deterministic")


@dataclass(frozen=True)
class SessionPlan:
    """The session schedule: class groups, episode shape, training knobs."""

    base_label_set: tuple[int, ...]
    incremental_label_sets: tuple[tuple[int, ...], ...]
    n_way: int
    k_shot: int
    training: TrainingConfig = field(default_factory=TrainingConfig)

    def __post_init__(self):
        if not self.base_label_set:
            raise PlanViolationError("base label set is empty")
        if self.n_way < 1 or self.k_shot < 1:
            raise PlanViolationError("n_way and k_shot must be positive")
        groups = [set(self.base_label_set)] + [set(g) for g in self.incremental_label_sets]
        for i, g in enumerate(groups):
            sizes = len(self.base_label_set) if i == 0 else len(self.incremental_label_sets[i - 1])
            if len(g) != sizes:
                raise PlanViolationError(f"duplicate labels inside session {i}")
        for a in range(len(groups)):
            for b in range(a + 1, len(groups)):
                overlap = groups[a] & groups[b]
                if overlap:
                    raise LabelOverlapError(
                        f"sessions {a} and {b} share classes {sorted(overlap)[:5]}"
                    )
        for m, g in enumerate(self.incremental_label_sets, start=1):
            if len(g) != self.n_way:
                raise PlanViolationError(
                    f"session {m} has {len(g)} classes, plan says {self.n_way}-way"
                )

    @property
    def num_sessions(self) -> int:
        return 1 + len(self.incremental_label_sets)

    def label_set(self, m: int) -> set[int]:
        return set(self.base_label_set if m == 0 else self.incremental_label_sets[m - 1])

    def seen_labels(self, m: int) -> set[int]:
        seen = set(self.base_label_set)
        for g in self.incremental_label_sets[:m]:
            seen |= set(g)
        return seen


@dataclass
class SessionState:
    session: int
    classifier: object
    plan: SessionPlan
    records: list[SessionAccuracyRecord] = field(default_factory=list)

    @property
    def prototypes(self):
        return self.classifier.prototypes_


def _make_classifier(plan: SessionPlan, kind: str):
    t = plan.training
    common = dict(
        epochs=t.epochs,
        incremental_epochs=t.incremental_epochs,
        n_way=plan.n_way,
        k_shot=plan.k_shot,
        lam=t.lam,
        logit_scale=t.logit_scale,
        prototype_softmax=t.prototype_softmax,
        episode_loss_on_support=t.episode_loss_on_support,
        optimizer=t.optimizer.method,
        learning_rate=t.optimizer.learning_rate,
        momentum=t.optimizer.momentum,
        beta1=t.optimizer.beta1,
        beta2=t.optimizer.beta2,
        adam_eps=t.optimizer.eps,
    )
    if kind == "stochastic":
        return StochasticCosineClassifier(
            sigma_init=t.sigma_init,
            mc_samples=t.mc_samples_per_step,
            train_sigma=t.train_sigma,
            **common,
        )
    if kind == "deterministic":
        return DeterministicCosineClassifier(**common)
    raise ValueError(f"unknown classifier kind {kind!r}")


def _check_session_data(data: EmbeddingSet, expected: set[int], m: int, min_per_class: int,
                        exact: bool) -> None:
    found = set(int(c) for c in data.classes())
    if found != expected:
        raise PlanViolationError(
            f"session {m} data covers classes {sorted(found)[:8]}..., "
            f"plan expects {sorted(expected)[:8]}..."
        )
    for c, idx in data.class_indices().items():
        n = len(idx)
        if exact and n != min_per_class:
            raise PlanViolationError(
                f"session {m} class {c} has {n} samples, plan requires exactly {min_per_class}"
            )
        if not exact and n < min_per_class:
            raise PlanViolationError(
                f"session {m} class {c} has {n} samples, plan requires at least {min_per_class}"
            )


def run_base_session(
    train: EmbeddingSet, plan: SessionPlan, rng: SplitMix64, classifier: str = "stochastic"
) -> SessionState:
    """Session 0: class-mean init, episodic training, prototype snapshot."""
    _check_session_data(train, plan.label_set(0), 0, 2 * plan.k_shot, exact=False)
    model = _make_classifier(plan, classifier)
    model.fit(train.vectors, train.labels, rng=rng.spawn("session-0"))
    return SessionState(session=0, classifier=model, plan=plan)


def run_incremental_session(
    state: SessionState, support: EmbeddingSet, rng: SplitMix64
) -> SessionState:
    """Session m: expand with support means, retrain under the joint objective."""
    m = state.session + 1
    if m >= state.plan.num_sessions:
        raise PlanViolationError(f"plan has no session {m}")
    _check_session_data(support, state.plan.label_set(m), m, state.plan.k_shot, exact=True)
    state.classifier.expand_fit(
        support.vectors, support.labels, rng=rng.spawn(f"session-{m}")
    )
    state.session = m
    return state


def evaluate_session(
    state: SessionState, test_sets: list[EmbeddingSet]
) -> SessionAccuracyRecord:
    """Score the cumulative test union, split base / incremental / all."""
    m = state.session
    if len(test_sets) < m + 1:
        raise PlanViolationError(f"need test sets for sessions 0..{m}, got {len(test_sets)}")
    union = EmbeddingSet.concat(test_sets[: m + 1])
    seen = state.plan.seen_labels(m)
    unseen = set(int(c) for c in union.classes()) - seen
    if unseen:
        raise ValueError(f"test samples carry unseen classes {sorted(unseen)[:5]}")
    preds = state.classifier.predict(union.vectors)
    truths = union.labels
    base_mask = np.isin(truths, list(state.plan.base_label_set))
    record = SessionAccuracyRecord(
        session=m,
        base_acc=accuracy(preds[base_mask], truths[base_mask]),
        incr_acc=(
            accuracy(preds[~base_mask], truths[~base_mask]) if m > 0 else None
        ),
        all_acc=accuracy(preds, truths),
    )
    state.records.append(record)
    return record


def run_full_protocol(
    plan: SessionPlan,
    train_sets: list[EmbeddingSet],
    test_sets: list[EmbeddingSet],
    rng: SplitMix64,
    classifier: str = "stochastic",
    config_echo: dict | None = None,
    trace_sink: list | None = None,
) -> RunReport:
    """Execute every session, evaluating after each, and build the report.

    trace_sink, when given, receives one per-session list of step losses.
    """
    if len(train_sets) != plan.num_sessions or len(test_sets) != plan.num_sessions:
        raise PlanViolationError(
            f"plan has {plan.num_sessions} sessions; got {len(train_sets)} train "
            f"and {len(test_sets)} test sets"
        )
    state = run_base_session(train_sets[0], plan, rng, classifier)
    evaluate_session(state, test_sets)
    for m in range(1, plan.num_sessions):
        run_incremental_session(state, train_sets[m], rng)
        evaluate_session(state, test_sets)
    echo = dict(config_echo or {})
    echo.setdefault("classifier", classifier)
    echo.setdefault("n_way", plan.n_way)
    echo.setdefault("k_shot", plan.k_shot)
    echo.setdefault("num_sessions", plan.num_sessions)
    echo.setdefault("base_classes", len(plan.base_label_set))
    if trace_sink is not None:
        trace_sink.extend(list(t) for t in state.classifier.loss_traces_)
    return build_report(state.records, config=echo, seed=rng.seed)


def plan_from_manifest(
    manifest: ArchiveManifest,
    embeddings: EmbeddingSet,
    training: TrainingConfig,
    n_way: int | None = None,
    k_shot: int | None = None,
) -> tuple[SessionPlan, list[EmbeddingSet], list[EmbeddingSet]]:
    """Derive the plan and per-session train/test sets from an archive split.

    Episode shape comes from the incremental sessions themselves; for a
    base-only archive the caller must supply n_way and k_shot (defaults
    5/5 at the command line).  Explicit values that contradict the
    archive are rejected.
    """
    train_sets = [
        embeddings.by_sample_ids(manifest.session_train_ids(m))
        for m in range(manifest.num_sessions())
    ]
    test_sets = [
        embeddings.by_sample_ids(manifest.session_test_ids(m))
        for m in range(manifest.num_sessions())
    ]
    label_sets = [tuple(int(c) for c in s.classes()) for s in train_sets]

    if manifest.num_sessions() > 1:
        ways = {len(g) for g in label_sets[1:]}
        if len(ways) != 1:
            raise PlanViolationError(f"incremental sessions have mixed way counts {sorted(ways)}")
        derived_n = ways.pop()
        shots = {
            len(idx)
            for s in train_sets[1:]
            for idx in s.class_indices().values()
        }
        if len(shots) != 1:
            raise PlanViolationError(f"incremental sessions have mixed shot counts {sorted(shots)}")
        derived_k = shots.pop()
        if n_way is not None and n_way != derived_n:
            raise PlanViolationError(f"archive is {derived_n}-way but {n_way} was requested")
        if k_shot is not None and k_shot != derived_k:
            raise PlanViolationError(f"archive is {derived_k}-shot but {k_shot} was requested")
        n_way, k_shot = derived_n, derived_k
    else:
        n_way = 5 if n_way is None else n_way
        k_shot = 5 if k_shot is None else k_shot

    plan = SessionPlan(
        base_label_set=label_sets[0],
        incremental_label_sets=tuple(label_sets[1:]),
        n_way=n_way,
        k_shot=k_shot,
        training=training,
    )
    return plan, train_sets, test_sets
