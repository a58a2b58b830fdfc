"""Count-based n-gram policy with add-k smoothing and short-context backoff."""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..emotion import EmotionQuadrant
from ..errors import EmptyCorpus, NotFitted
from ..remi.tokens import Vocabulary
from .base import Policy

FORMAT_TAG = "ngram-policy-v1"


class NGramPolicy(Policy):
    """Backoff n-gram over token ids, masked to grammar-legal successors.

    The longest context seen in training wins; an unseen context backs off
    one order at a time down to a uniform distribution over the legal set.
    Smoothing adds ``add_k`` to every legal successor of a seen context
    before renormalizing.
    """

    def __init__(self, vocab: Vocabulary, order: int = 3, add_k: float = 0.01):
        if not 2 <= order <= 4:
            raise ValueError("order must be between 2 and 4")
        if add_k <= 0.0:
            raise ValueError("add_k must be positive")
        self.vocab = vocab
        self.order = order
        self.add_k = add_k
        self.counts_: dict[int, dict[tuple[int, ...], dict[int, int]]] | None = None
        self._cache: dict[tuple[int, ...], np.ndarray] = {}

    def get_params(self) -> dict:
        return {"order": self.order, "add_k": self.add_k}

    def fit(self, sequences: Iterable[Sequence[int]]) -> "NGramPolicy":
        counts: dict[int, dict[tuple[int, ...], dict[int, int]]] = {
            o: {} for o in range(1, self.order + 1)
        }
        n_seqs = 0
        for seq in sequences:
            n_seqs += 1
            for i in range(1, len(seq)):
                tok = int(seq[i])
                for o in range(1, self.order + 1):
                    if i - (o - 1) < 0:
                        continue
                    ctx = tuple(int(t) for t in seq[i - (o - 1) : i])
                    row = counts[o].setdefault(ctx, {})
                    row[tok] = row.get(tok, 0) + 1
        if n_seqs == 0:
            raise EmptyCorpus("cannot train on zero sequences")
        self.counts_ = counts
        self._cache = {}
        return self

    def _require_fitted(self) -> dict:
        if self.counts_ is None:
            raise NotFitted("NGramPolicy must be fit() or load()ed before use")
        return self.counts_

    def seen(self, token_id: int) -> bool:
        """Whether the token ever occurred as a prediction target."""
        counts = self._require_fitted()
        return counts[1].get((), {}).get(int(token_id), 0) > 0

    def next_distribution(self, prefix: Sequence[int]) -> np.ndarray:
        counts = self._require_fitted()
        legal = self._legal(prefix)
        key = tuple(int(t) for t in prefix[-(self.order - 1) :]) if self.order > 1 else ()
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        weights = None
        for o in range(self.order, 0, -1):
            if len(prefix) < o - 1:
                continue
            ctx = key[len(key) - (o - 1) :] if o > 1 else ()
            row = counts[o].get(ctx)
            if row:
                weights = np.array([row.get(int(i), 0) for i in legal], dtype=np.float64)
                weights += self.add_k
                break
        if weights is None:
            weights = np.ones(legal.size, dtype=np.float64)
        dist = np.zeros(self.vocab.vocab_size, dtype=np.float64)
        dist[legal] = weights / weights.sum()
        self._cache[key] = dist
        return dist

    def save(self, path: str | Path) -> None:
        counts = self._require_fitted()
        payload = {
            "format": FORMAT_TAG,
            "order": self.order,
            "add_k": self.add_k,
            "vocab_size": self.vocab.vocab_size,
            "counts": {
                str(o): {
                    ",".join(map(str, ctx)): {str(t): n for t, n in sorted(row.items())}
                    for ctx, row in sorted(table.items())
                }
                for o, table in counts.items()
            },
        }
        Path(path).write_text(json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n")

    @classmethod
    def load(cls, path: str | Path, vocab: Vocabulary) -> "NGramPolicy":
        payload = json.loads(Path(path).read_text())
        if payload.get("format") != FORMAT_TAG:
            raise ValueError(f"not a {FORMAT_TAG} file: {path}")
        if payload["vocab_size"] != vocab.vocab_size:
            raise ValueError("model vocabulary size does not match")
        model = cls(vocab, order=payload["order"], add_k=payload["add_k"])
        model.counts_ = {
            int(o): {
                tuple(int(t) for t in ctx.split(",") if ctx): {
                    int(t): int(n) for t, n in row.items()
                }
                for ctx, row in table.items()
            }
            for o, table in payload["counts"].items()
        }
        return model


def train_ngram(
    vocab: Vocabulary,
    sequences: Iterable[Sequence[int]],
    order: int = 3,
    add_k: float = 0.01,
) -> NGramPolicy:
    return NGramPolicy(vocab, order=order, add_k=add_k).fit(sequences)


def with_emotion_prefix(seq: Sequence[int], quadrant: EmotionQuadrant, vocab: Vocabulary) -> list[int]:
    """Insert the control token right after StartOfMusic."""
    ids = list(seq)
    return [ids[0], vocab.emotion_id(quadrant)] + ids[1:]


def perplexity(policy: Policy, sequences: Iterable[Sequence[int]]) -> float:
    """Per-token perplexity of held-out sequences under the policy."""
    log_sum = 0.0
    n = 0
    for seq in sequences:
        for i in range(1, len(seq)):
            p = float(policy.next_distribution(seq[:i])[int(seq[i])])
            log_sum += math.log2(max(p, 1e-300))
            n += 1
    if n == 0:
        raise ValueError("no transitions to score")
    return 2.0 ** (-log_sum / n)
