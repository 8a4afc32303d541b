"""Dense-vector math: cosine similarity, stable cross-entropy, reparameterized
weight sampling, analytic gradients, and a finite-difference oracle.

All training math runs in float64.  Functions are pure; randomness enters
only through an explicit SplitMix64 stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ContractViolationError, DegenerateInputError, ShapeMismatchError
from .rng import SplitMix64
from .validation import check_nonzero_norm, check_nonzero_rows, check_same_shape, check_vector


@dataclass
class GradientPair:
    """Gradients of a loss with respect to the head's mean and spread matrices."""

    d_mu: np.ndarray
    d_sigma: np.ndarray

    def __add__(self, other: "GradientPair") -> "GradientPair":
        return GradientPair(self.d_mu + other.d_mu, self.d_sigma + other.d_sigma)

    def scaled(self, factor: float) -> "GradientPair":
        return GradientPair(self.d_mu * factor, self.d_sigma * factor)


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two vectors, clamped to [-1, 1].

    Rejects dimension mismatches and zero-norm inputs outright; a silent
    0 for a zero vector would mask initialization bugs upstream.
    """
    a = check_vector(a, "a")
    b = check_vector(b, "b")
    if a.shape != b.shape:
        raise ShapeMismatchError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    na = check_nonzero_norm(a, "a")
    nb = check_nonzero_norm(b, "b")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def cosine_to_rows(embedding: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Cosines of one embedding against every row of a weight matrix."""
    if embedding.shape[0] != weights.shape[1]:
        raise ShapeMismatchError(
            f"embedding dim {embedding.shape[0]} vs weight dim {weights.shape[1]}"
        )
    ne = check_nonzero_norm(embedding, "embedding")
    nw = check_nonzero_rows(weights, "weights")
    return np.clip(weights @ embedding / (ne * nw), -1.0, 1.0)


def cosine_matrix(embeddings: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Pairwise cosines, one row per embedding, one column per weight row."""
    if embeddings.shape[1] != weights.shape[1]:
        raise ShapeMismatchError(
            f"embedding dim {embeddings.shape[1]} vs weight dim {weights.shape[1]}"
        )
    ne = check_nonzero_rows(embeddings, "embeddings")
    nw = check_nonzero_rows(weights, "weights")
    return np.clip(embeddings @ weights.T / np.outer(ne, nw), -1.0, 1.0)


def log_softmax_ce(logits, target_index: int) -> float:
    """Cross-entropy -log softmax(logits)[target], max-shifted for stability."""
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 1 or z.size == 0:
        raise ValueError("logits must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(z)):
        raise ValueError("logits contain non-finite entries")
    if not 0 <= target_index < z.size:
        raise IndexError(f"target index {target_index} out of range for {z.size} logits")
    m = np.max(z)
    lse = m + np.log(np.sum(np.exp(z - m)))
    return max(0.0, float(lse - z[target_index]))


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def sample_stochastic_weights_with_noise(
    mu: np.ndarray, sigma: np.ndarray, rng: SplitMix64
) -> tuple[np.ndarray, np.ndarray]:
    """Draw sampled weights mu + eps * sigma; returns (weights, eps).

    eps entries are i.i.d. standard normal, consumed from the stream in
    row-major order.
    """
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    check_same_shape(mu, sigma, "mu and sigma")
    eps = rng.normal_matrix(mu.shape)
    return mu + eps * sigma, eps


def sample_stochastic_weights(mu, sigma, rng: SplitMix64) -> np.ndarray:
    """Sampled weight matrix mu + N(0,1) * sigma (elementwise)."""
    weights, _ = sample_stochastic_weights_with_noise(mu, sigma, rng)
    return weights


def cosine_ce(
    embedding: np.ndarray, target_index: int, weights: np.ndarray, scale: float = 1.0
) -> tuple[float, np.ndarray]:
    """Cross-entropy over scaled cosine logits and its weight-matrix gradient.

    Returns (loss, d_weights) where the logit for row h is
    scale * cos(embedding, weights[h]).  The cosine gradient with respect
    to a weight row w is e/(|e||w|) - cos(e, w) * w/|w|^2.
    """
    cos = cosine_to_rows(embedding, weights)
    logits = scale * cos
    loss = log_softmax_ce(logits, target_index)
    g = softmax(logits)
    g[target_index] -= 1.0
    ne = np.linalg.norm(embedding)
    nw = np.linalg.norm(weights, axis=1)
    d_w = (scale * g)[:, None] * (
        embedding[None, :] / (ne * nw)[:, None] - (cos / nw**2)[:, None] * weights
    )
    return loss, d_w


def batch_cosine_ce(
    embeddings: np.ndarray,
    target_indices: np.ndarray,
    weights: np.ndarray,
    scale: float = 1.0,
) -> tuple[float, np.ndarray]:
    """Mean cosine cross-entropy over a batch, with the mean weight gradient."""
    n = embeddings.shape[0]
    cos = cosine_matrix(embeddings, weights)
    logits = scale * cos
    m = np.max(logits, axis=1)
    lse = m + np.log(np.sum(np.exp(logits - m[:, None]), axis=1))
    per_sample = np.maximum(0.0, lse - logits[np.arange(n), target_indices])
    loss = float(np.mean(per_sample))

    g = softmax(logits)
    g[np.arange(n), target_indices] -= 1.0
    ne = np.linalg.norm(embeddings, axis=1)
    nw = np.linalg.norm(weights, axis=1)
    unit_e = embeddings / ne[:, None]
    # d_w[h] = (scale/n) * sum_i g[i,h] * (e_i/(|e_i||w_h|) - cos[i,h] w_h/|w_h|^2)
    term1 = (g.T @ unit_e) / nw[:, None]
    term2 = (np.sum(g * cos, axis=0) / nw**2)[:, None] * weights
    d_w = (scale / n) * (term1 - term2)
    return loss, d_w


def grad_cosine_ce(
    embedding: np.ndarray,
    target_index: int,
    mu_hat: np.ndarray,
    mu: np.ndarray,
    sigma: np.ndarray,
    epsilon: np.ndarray,
    scale: float = 1.0,
) -> tuple[float, GradientPair]:
    """Loss and (d_mu, d_sigma) for one embedding against sampled weights.

    mu_hat must equal mu + epsilon * sigma to within 1e-12; the gradient
    through the reparameterization flows unchanged to mu and elementwise
    times epsilon to sigma.
    """
    mu_hat = np.asarray(mu_hat, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    epsilon = np.asarray(epsilon, dtype=np.float64)
    check_same_shape(mu, sigma, "mu and sigma")
    check_same_shape(mu, epsilon, "mu and epsilon")
    check_same_shape(mu, mu_hat, "mu and mu_hat")
    drift = np.max(np.abs(mu_hat - (mu + epsilon * sigma)))
    if drift > 1e-12:
        raise ContractViolationError(
            f"mu_hat deviates from mu + epsilon*sigma by {drift:.3e}"
        )
    loss, d_w = cosine_ce(embedding, target_index, mu_hat, scale)
    return loss, GradientPair(d_mu=d_w, d_sigma=epsilon * d_w)


def finite_difference_gradient(loss_fn, point: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar function of an array.

    (f(x + h e_k) - f(x - h e_k)) / 2h per entry; the probe array is
    restored after each evaluation.
    """
    if h <= 0:
        raise ValueError("step size h must be positive")
    point = np.array(point, dtype=np.float64)
    grad = np.empty_like(point)
    flat = point.reshape(-1)
    gflat = grad.reshape(-1)
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + h
        up = loss_fn(point)
        flat[k] = orig - h
        down = loss_fn(point)
        flat[k] = orig
        if not (np.isfinite(up) and np.isfinite(down)):
            raise ValueError(f"non-finite loss during finite differencing at entry {k}")
        gflat[k] = (up - down) / (2.0 * h)
    return grad
