"""Labeled embedding collections, the engine's universal input."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ShapeMismatchError
from .validation import check_labels, check_matrix


@dataclass
class EmbeddingSet:
    """Dense vectors with integer sample ids and class labels.

    vectors is (n, dim) float64; sample_ids and labels are parallel int64
    arrays.  Sample ids must be unique; vectors must be finite.
    """

    sample_ids: np.ndarray
    labels: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        self.vectors = check_matrix(self.vectors, "vectors")
        self.sample_ids = check_labels(self.sample_ids)
        self.labels = check_labels(self.labels)
        n = self.vectors.shape[0]
        if len(self.sample_ids) != n or len(self.labels) != n:
            raise ShapeMismatchError(
                f"{n} vectors but {len(self.sample_ids)} ids / {len(self.labels)} labels"
            )
        if len(np.unique(self.sample_ids)) != n:
            raise ValueError("sample_ids contain duplicates")

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def classes(self) -> np.ndarray:
        """Distinct labels, ascending."""
        return np.unique(self.labels)

    def take(self, indices) -> "EmbeddingSet":
        idx = np.asarray(indices, dtype=np.int64)
        return EmbeddingSet(self.sample_ids[idx], self.labels[idx], self.vectors[idx])

    def by_sample_ids(self, ids) -> "EmbeddingSet":
        ids = np.asarray(ids, dtype=np.int64)
        pos = {int(s): i for i, s in enumerate(self.sample_ids)}
        missing = [int(s) for s in ids if int(s) not in pos]
        if missing:
            raise KeyError(f"sample ids not present: {missing[:5]}")
        return self.take([pos[int(s)] for s in ids])

    def class_indices(self) -> dict[int, np.ndarray]:
        """Label -> row indices, labels ascending."""
        return {int(c): np.flatnonzero(self.labels == c) for c in self.classes()}

    def class_means(self) -> dict[int, np.ndarray]:
        """Label -> arithmetic mean of that class's vectors, labels ascending."""
        return {
            c: self.vectors[idx].mean(axis=0) for c, idx in self.class_indices().items()
        }

    @staticmethod
    def concat(parts: list["EmbeddingSet"]) -> "EmbeddingSet":
        if not parts:
            raise ValueError("nothing to concatenate")
        return EmbeddingSet(
            np.concatenate([p.sample_ids for p in parts]),
            np.concatenate([p.labels for p in parts]),
            np.vstack([p.vectors for p in parts]),
        )


@dataclass
class PrototypeSet:
    """One stored vector per class seen so far, uniform dimension."""

    entries: dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.entries = {int(c): np.asarray(v, dtype=np.float64) for c, v in self.entries.items()}
        dims = {v.shape for v in self.entries.values()}
        if len(dims) > 1:
            raise ShapeMismatchError(f"prototype dimensions differ: {sorted(dims)}")

    def __len__(self) -> int:
        return len(self.entries)

    def class_ids(self) -> list[int]:
        return sorted(self.entries)

    def matrix(self, order: list[int] | None = None) -> np.ndarray:
        """Prototypes stacked in the given class order (sorted by default)."""
        order = self.class_ids() if order is None else order
        return np.vstack([self.entries[c] for c in order])

    def replace_all(self, class_ids, vectors: np.ndarray) -> None:
        """Overwrite the registry with one row per class id."""
        self.entries = {int(c): np.array(vectors[i]) for i, c in enumerate(class_ids)}
