"""Input validation helpers shared by the estimators and the functional core."""

from __future__ import annotations

import numpy as np

from .exceptions import DegenerateInputError, ShapeMismatchError


def check_vector(v, name: str = "vector") -> np.ndarray:
    """Coerce to a finite 1-D float64 array with at least one entry."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeMismatchError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ShapeMismatchError(f"{name} must have at least one entry")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float64 array."""
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeMismatchError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_same_shape(a: np.ndarray, b: np.ndarray, names: str = "operands") -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"{names} have mismatched shapes {a.shape} vs {b.shape}")


def check_nonzero_norm(v: np.ndarray, name: str = "vector") -> float:
    """Return the Euclidean norm, rejecting zero-norm input."""
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise DegenerateInputError(f"{name} has zero norm")
    return norm


def check_nonzero_rows(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Return row norms, rejecting any zero-norm row."""
    norms = np.linalg.norm(m, axis=1)
    if np.any(norms == 0.0):
        bad = int(np.flatnonzero(norms == 0.0)[0])
        raise DegenerateInputError(f"{name} row {bad} has zero norm")
    return norms


def check_labels(y, n_samples: int | None = None) -> np.ndarray:
    """Coerce labels to a 1-D int64 array, optionally checking the length."""
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise ShapeMismatchError(f"labels must be 1-D, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        cast = arr.astype(np.int64)
        if not np.array_equal(cast, arr):
            raise ValueError("labels must be integers")
        arr = cast
    if n_samples is not None and len(arr) != n_samples:
        raise ShapeMismatchError(f"got {len(arr)} labels for {n_samples} samples")
    return arr.astype(np.int64)


def check_X_y(X, y):
    """Validate an (embeddings, labels) pair the sklearn way."""
    X = check_matrix(X, "X")
    y = check_labels(y, n_samples=X.shape[0])
    return X, y
