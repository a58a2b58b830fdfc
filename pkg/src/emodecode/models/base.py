"""Shared model interfaces: policies, evaluators and the call budget.

Policies map a grammar-valid prefix of token ids to a full distribution over
the vocabulary with zero mass on illegal successors.  Evaluators score whole
sequences; every successful evaluation bumps the shared budget counter by
exactly one, which is what the search budget accounting relies on.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..emotion import check_distribution
from ..errors import GrammarError, SequenceTooShort
from ..remi.tokens import Vocabulary, complete_bar_prefix


@dataclass
class EvaluatorBudget:
    """Counters of emotion-model and discriminator calls."""

    e_calls: int = 0
    d_calls: int = 0

    def snapshot(self) -> tuple[int, int]:
        return (self.e_calls, self.d_calls)


class Policy:
    """Base next-token model over a token-id vocabulary."""

    vocab: Vocabulary

    def next_distribution(self, prefix: Sequence[int]) -> np.ndarray:
        """Distribution over the full vocabulary given ``prefix``."""
        raise NotImplementedError

    def _legal(self, prefix: Sequence[int]) -> np.ndarray:
        if not prefix:
            raise GrammarError(0, "empty prefix")
        return self.vocab.successors(prefix[-1])


def policy_next(policy: Policy, prefix: Sequence[int]) -> np.ndarray:
    """Checked form of Policy.next_distribution.

    Validates the prefix against the grammar (GrammarError on failure) and
    asserts the distribution invariants before returning it.
    """
    err = policy.vocab.validate_ids(prefix)
    if err is not None:
        raise err
    dist = policy.next_distribution(prefix)
    total = float(dist.sum())
    if abs(total - 1.0) > 1e-9 or np.any(dist < 0.0):
        raise AssertionError(f"policy distribution must sum to 1, got {total}")
    illegal = np.ones(len(dist), dtype=bool)
    illegal[policy.vocab.successors(prefix[-1])] = False
    if dist[illegal].any():
        raise AssertionError("policy put mass on grammar-illegal successors")
    return dist


class EmotionClassifier:
    """Maps a sequence with at least one complete bar to 4 quadrant probs."""

    def distribution(self, seq: Sequence[int], budget: EvaluatorBudget) -> np.ndarray:
        vec = check_distribution(self._evaluate(self._prepare(seq)))
        budget.e_calls += 1
        return vec

    def _prepare(self, seq: Sequence[int]) -> list[int]:
        return list(seq)

    def _evaluate(self, seq: list[int]) -> np.ndarray:
        raise NotImplementedError


class Discriminator:
    """Maps a sequence with at least one complete bar to P(human-composed)."""

    def realness(self, seq: Sequence[int], budget: EvaluatorBudget) -> float:
        value = float(self._evaluate(self._prepare(seq)))
        if not 0.0 <= value <= 1.0:
            raise AssertionError(f"realness {value} outside [0, 1]")
        budget.d_calls += 1
        return value

    def _prepare(self, seq: Sequence[int]) -> list[int]:
        return list(seq)

    def _evaluate(self, seq: list[int]) -> float:
        raise NotImplementedError


class BarPrefixMixin:
    """Evaluate only whole bars: truncate at the last closed bar line."""

    vocab: Vocabulary

    def _prepare(self, seq: Sequence[int]) -> list[int]:
        prefix = complete_bar_prefix(seq, self.vocab)
        if prefix is None:
            raise SequenceTooShort("no completed bar to evaluate")
        return prefix


def classify_emotion(classifier: EmotionClassifier, seq: Sequence[int], budget: EvaluatorBudget) -> np.ndarray:
    return classifier.distribution(seq, budget)


def discriminate(discriminator: Discriminator, seq: Sequence[int], budget: EvaluatorBudget) -> float:
    return discriminator.realness(seq, budget)
