"""N-way K-shot episode construction.

An episode pairs a support set and a query set over the same N classes,
K samples per class per side, with no sample shared between the sides.
Within one epoch no sample is reused across episodes; classes stay
eligible for re-selection while they still hold 2K unused samples.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .data import EmbeddingSet
from .exceptions import EpisodeExhausted
from .rng import SplitMix64

log = logging.getLogger(__name__)


@dataclass
class Episode:
    support: EmbeddingSet
    query: EmbeddingSet
    way_classes: np.ndarray

    def __post_init__(self):
        s, q = set(self.support.sample_ids.tolist()), set(self.query.sample_ids.tolist())
        if s & q:
            raise ValueError("support and query share samples")
        if set(self.support.labels.tolist()) != set(self.query.labels.tolist()):
            raise ValueError("support and query cover different classes")


def _draw(data, class_pool, unused, n_way, k_shot, rng, prefer_fullest):
    """One episode from the unused-sample pools; None when infeasible."""
    eligible = [c for c in class_pool if len(unused[c]) >= 2 * k_shot]
    if len(eligible) < n_way:
        return None
    if prefer_fullest:
        # fullest-first keeps tail classes from being stranded; ties random
        shuffled = rng.shuffled(np.array(eligible, dtype=np.int64))
        order = sorted(shuffled.tolist(), key=lambda c: -len(unused[c]))
        chosen = order[:n_way]
    else:
        chosen = rng.choice(np.array(eligible, dtype=np.int64), n_way).tolist()
    support_idx, query_idx = [], []
    for c in chosen:
        picks = rng.choice(np.array(sorted(unused[c]), dtype=np.int64), 2 * k_shot)
        support_idx.extend(picks[:k_shot].tolist())
        query_idx.extend(picks[k_shot:].tolist())
        unused[c] -= set(picks.tolist())
    return Episode(
        support=data.take(support_idx),
        query=data.take(query_idx),
        way_classes=np.array(sorted(chosen), dtype=np.int64),
    )


def _unused_pools(data: EmbeddingSet) -> dict[int, set]:
    return {c: set(idx.tolist()) for c, idx in data.class_indices().items()}


def sample_episode(data: EmbeddingSet, n_way: int, k_shot: int, rng: SplitMix64) -> Episode:
    """One episode with uniformly chosen classes and samples.

    Raises EpisodeExhausted when fewer than n_way classes have 2*k_shot
    samples available.
    """
    if n_way < 1 or k_shot < 1:
        raise ValueError("n_way and k_shot must be positive")
    unused = _unused_pools(data)
    episode = _draw(data, sorted(unused), unused, n_way, k_shot, rng, prefer_fullest=False)
    if episode is None:
        raise EpisodeExhausted(
            f"need {n_way} classes with {2 * k_shot} samples each"
        )
    return episode


def epoch_episodes(
    data: EmbeddingSet, n_way: int, k_shot: int, rng: SplitMix64
) -> list[Episode]:
    """Episodes tiling one pass over the data without sample reuse.

    Classes with the most unused samples are drawn first so every class
    lands in at least one episode whenever the data permits; leftover
    samples that cannot fill another episode are skipped and logged.
    """
    if n_way < 1 or k_shot < 1:
        raise ValueError("n_way and k_shot must be positive")
    unused = _unused_pools(data)
    class_pool = sorted(unused)
    episodes = []
    while True:
        episode = _draw(data, class_pool, unused, n_way, k_shot, rng, prefer_fullest=True)
        if episode is None:
            break
        episodes.append(episode)
    remainder = sum(len(v) for v in unused.values())
    if remainder:
        log.debug(
            "epoch left %d of %d samples unused (cannot fill another %d-way %d-shot episode)",
            remainder, len(data), n_way, k_shot,
        )
    return episodes
