"""Nucleus filtering and single-draw categorical sampling.

All randomness in the package flows through ``rng.random()`` one uniform at
a time, so a scripted stand-in with the same method can replay a search
decision by decision.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np


def top_p_filter(dist: np.ndarray, p: float) -> np.ndarray:
    """Smallest set of ids whose mass reaches ``p``, as ascending ids.

    Candidates are taken in descending probability order with ties at the
    cut broken toward the lower id.  Always returns at least one id; with
    ``p >= 1`` every id with nonzero mass survives.
    """
    order = np.argsort(-dist, kind="stable")  # stable: equal probs keep lower id first
    order = order[dist[order] > 0.0]
    if order.size == 0:
        raise ValueError("distribution has no positive mass")
    cum = np.cumsum(dist[order])
    cut = int(np.searchsorted(cum, p, side="left")) + 1
    return np.sort(order[: min(cut, order.size)])


def sample_index(rng, probs: np.ndarray) -> int:
    """Draw one index proportional to ``probs`` using a single uniform."""
    cum = np.cumsum(probs)
    total = cum[-1]
    if total <= 0.0:
        raise ValueError("cannot sample from all-zero weights")
    u = rng.random() * total
    return min(int(np.searchsorted(cum, u, side="right")), len(probs) - 1)


def sample_from(rng, ids: Sequence[int], probs: np.ndarray) -> int:
    return int(ids[sample_index(rng, probs)])
