"""First-order optimizers for the classifier head.

Plain gradient descent is the default; momentum and adaptive-moment
updates are available through the same step interface.  State lives in a
small per-parameter object so the two head matrices can be updated
independently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ShapeMismatchError, TrainingDivergenceError

_METHODS = ("sgd", "momentum", "adam")


@dataclass(frozen=True)
class OptimizerConfig:
    method: str = "sgd"
    learning_rate: float = 0.01
    momentum: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ValueError(f"unknown optimizer {self.method!r}, expected one of {_METHODS}")
        if self.learning_rate < 0:
            raise ValueError("learning rate must be non-negative")


class OptimizerState(object):
    """Per-parameter slots: velocity for momentum, first/second moments for adam."""

    def __init__(self, shape: tuple[int, ...]):
        self.shape = tuple(shape)
        self.velocity = np.zeros(shape)
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.t = 0


def optimizer_step(
    params: np.ndarray,
    grads: np.ndarray,
    state: OptimizerState,
    cfg: OptimizerConfig,
) -> np.ndarray:
    """Return updated parameters; mutates state in place.

    A non-finite gradient aborts with the offending coordinate named, so
    divergence surfaces at the step that produced it.
    """
    if params.shape != grads.shape or params.shape != state.shape:
        raise ShapeMismatchError(
            f"params {params.shape}, grads {grads.shape}, state {state.shape} must agree"
        )
    if not np.all(np.isfinite(grads)):
        flat = int(np.flatnonzero(~np.isfinite(grads.reshape(-1)))[0])
        bad = tuple(int(i) for i in np.unravel_index(flat, grads.shape))
        raise TrainingDivergenceError(f"non-finite gradient at coordinate {bad}")
    lr = cfg.learning_rate
    if cfg.method == "sgd":
        return params - lr * grads
    if cfg.method == "momentum":
        state.velocity = cfg.momentum * state.velocity + grads
        return params - lr * state.velocity
    # adam
    state.t += 1
    state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grads
    state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grads**2
    m_hat = state.m / (1.0 - cfg.beta1**state.t)
    v_hat = state.v / (1.0 - cfg.beta2**state.t)
    return params - lr * m_hat / (np.sqrt(v_hat) + cfg.eps)
