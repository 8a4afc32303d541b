import numpy as np
import pytest

from fscil.data import EmbeddingSet
from fscil.rng import SplitMix64


def unit_noise_samples(center, n, noise, rng):
    """Center plus isotropic noise, renormalized; matches the generator's rule."""
    if noise == 0.0:
        return np.tile(center, (n, 1))
    raw = center[None, :] + noise * rng.normal_matrix((n, len(center)))
    return raw / np.linalg.norm(raw, axis=1, keepdims=True)


def make_separable_set(n_classes, per_class, dim, noise, seed, start_class=0, start_id=0):
    """Orthogonal class centers, small within-class noise."""
    assert start_class + n_classes <= dim
    rng = SplitMix64(seed)
    vecs, labels = [], []
    for c in range(n_classes):
        center = np.zeros(dim)
        center[start_class + c] = 1.0
        vecs.append(unit_noise_samples(center, per_class, noise, rng))
        labels.extend([start_class + c] * per_class)
    n = n_classes * per_class
    return EmbeddingSet(
        np.arange(start_id, start_id + n), np.array(labels), np.vstack(vecs)
    )


def nearest_class_mean_predict(train: EmbeddingSet, X):
    """Independent oracle: cosine to per-class training means, argmax."""
    classes = sorted(int(c) for c in np.unique(train.labels))
    means = np.vstack([train.vectors[train.labels == c].mean(axis=0) for c in classes])
    means = means / np.linalg.norm(means, axis=1, keepdims=True)
    Xn = X / np.linalg.norm(X, axis=1, keepdims=True)
    return np.array(classes)[np.argmax(Xn @ means.T, axis=1)]


@pytest.fixture
def rng():
    return SplitMix64(12345)
