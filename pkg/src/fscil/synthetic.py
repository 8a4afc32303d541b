"""Synthetic embedding archives for desk-scale oracle runs.

Class centers are unit vectors (a standard-basis row per class under the
"orthogonal" rule, or random unit vectors kept pairwise below cosine 0.5
under the "random" rule); samples are centers plus isotropic Gaussian
noise, renormalized to unit length.  Everything is a pure function of the
spec, so identical specs produce byte-identical archives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .archive import ArchiveManifest
from .data import EmbeddingSet
from .exceptions import GenerationError
from .rng import SplitMix64

CENTER_RULES = ("random", "orthogonal")
_MAX_REDRAWS = 1000


@dataclass(frozen=True)
class SyntheticSpec:
    num_classes: int
    samples_per_class: int
    dim: int
    noise: float
    seed: int
    center_rule: str = "random"
    base_classes: int | None = None
    n_way: int = 5
    k_shot: int = 5
    test_per_class: int | None = None

    def __post_init__(self):
        if self.num_classes < 1 or self.samples_per_class < 1 or self.dim < 1:
            raise GenerationError("num_classes, samples_per_class and dim must be positive")
        if not np.isfinite(self.noise) or self.noise < 0:
            raise GenerationError("noise must be a finite non-negative value")
        if self.center_rule not in CENTER_RULES:
            raise GenerationError(f"center rule must be one of {CENTER_RULES}")
        if self.center_rule == "orthogonal" and self.num_classes > self.dim:
            raise GenerationError(
                f"orthogonal rule needs dim >= classes ({self.dim} < {self.num_classes})"
            )
        if self.resolved_test_per_class() >= self.samples_per_class:
            raise GenerationError("test_per_class must leave at least one training sample")
        base = self.resolved_base_classes()
        if not 1 <= base <= self.num_classes:
            raise GenerationError(f"base_classes {base} outside 1..{self.num_classes}")
        leftover = self.num_classes - base
        if leftover:
            if self.n_way < 1 or leftover % self.n_way:
                raise GenerationError(
                    f"{leftover} non-base classes do not split into {self.n_way}-way sessions"
                )
            if self.k_shot < 1:
                raise GenerationError("k_shot must be positive")
            if self.k_shot + self.resolved_test_per_class() > self.samples_per_class:
                raise GenerationError(
                    "samples_per_class too small for k_shot support plus test split"
                )

    def resolved_base_classes(self) -> int:
        return self.num_classes if self.base_classes is None else self.base_classes

    def resolved_test_per_class(self) -> int:
        if self.test_per_class is not None:
            return self.test_per_class
        return max(1, self.samples_per_class // 4)

    def num_sessions(self) -> int:
        return 1 + (self.num_classes - self.resolved_base_classes()) // self.n_way


def _draw_centers(spec: SyntheticSpec, rng: SplitMix64) -> np.ndarray:
    if spec.center_rule == "orthogonal":
        return np.eye(spec.dim)[: spec.num_classes]
    centers = []
    for c in range(spec.num_classes):
        for _ in range(_MAX_REDRAWS):
            v = rng.normal(spec.dim)
            norm = np.linalg.norm(v)
            if norm == 0.0:
                continue
            v = v / norm
            if all(float(np.dot(v, u)) < 0.5 for u in centers):
                centers.append(v)
                break
        else:
            raise GenerationError(
                f"could not place center {c} below pairwise cosine 0.5 in dim {spec.dim}"
            )
    return np.vstack(centers)


def generate_synthetic(spec: SyntheticSpec) -> tuple[EmbeddingSet, ArchiveManifest]:
    """Embeddings plus a session-split manifest, deterministic under the seed."""
    root = SplitMix64(spec.seed)
    centers = _draw_centers(spec, root.spawn("centers"))
    noise_rng = root.spawn("sample-noise")

    vectors = np.empty((spec.num_classes * spec.samples_per_class, spec.dim))
    labels = np.repeat(np.arange(spec.num_classes), spec.samples_per_class)
    sample_ids = np.arange(len(labels))
    for c in range(spec.num_classes):
        block = slice(c * spec.samples_per_class, (c + 1) * spec.samples_per_class)
        if spec.noise == 0.0:
            vectors[block] = centers[c]
        else:
            jitter = noise_rng.normal_matrix((spec.samples_per_class, spec.dim))
            raw = centers[c][None, :] + spec.noise * jitter
            vectors[block] = raw / np.linalg.norm(raw, axis=1, keepdims=True)

    test_n = spec.resolved_test_per_class()
    base = spec.resolved_base_classes()

    def class_ids_of(c: int) -> np.ndarray:
        return sample_ids[c * spec.samples_per_class : (c + 1) * spec.samples_per_class]

    sessions = []
    base_split = {"train": [], "test": []}
    for c in range(base):
        ids = class_ids_of(c)
        base_split["train"].extend(int(i) for i in ids[: spec.samples_per_class - test_n])
        base_split["test"].extend(int(i) for i in ids[spec.samples_per_class - test_n :])
    sessions.append(base_split)
    for start in range(base, spec.num_classes, spec.n_way):
        split = {"train": [], "test": []}
        for c in range(start, start + spec.n_way):
            ids = class_ids_of(c)
            split["train"].extend(int(i) for i in ids[: spec.k_shot])
            split["test"].extend(int(i) for i in ids[spec.samples_per_class - test_n :])
        sessions.append(split)

    embeddings = EmbeddingSet(sample_ids, labels, vectors)
    manifest = ArchiveManifest(
        dim=spec.dim,
        classes={c: f"class_{c}" for c in range(spec.num_classes)},
        sessions=sessions,
        provenance=(
            f"synthetic rule={spec.center_rule} classes={spec.num_classes} "
            f"per_class={spec.samples_per_class} dim={spec.dim} "
            f"noise={spec.noise} seed={spec.seed}"
        ),
    )
    return embeddings, manifest
