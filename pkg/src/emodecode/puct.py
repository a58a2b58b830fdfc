"""PUCT tree search over next-token decisions.

Each emitted token is chosen by running a fixed number of search iterations
(select / expand / simulate / backpropagate) from the current prefix, then
sampling proportionally to root visit counts.  Rollouts extend a leaf until
the next bar line (or end of piece) and are scored by the emotion model and
the discriminator:

    reward = E(s, e) * D(s)                if argmax E(s) == e
           = (1 - E(s, e)) * (D(s) - 1)    otherwise

so a rollout that hits the target emotion earns a positive reward scaled by
realness, and anything else is penalized.  Q-values are running means of
these rewards, kept in [-1, 1].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .emotion import EmotionQuadrant, argmax_quadrant
from .errors import SequenceTooShort, TerminalNode
from .models.base import Discriminator, EmotionClassifier, EvaluatorBudget, Policy
from .models.sampling import sample_index, top_p_filter


@dataclass
class DecodeConfig:
    """Search hyperparameters; the defaults mirror the reference setup."""

    target: EmotionQuadrant
    budget: int = 50            # search iterations per emitted token
    top_p: float = 0.9
    exploration_c: float = 1.0
    rollout_cap: int = 64       # hard stop for a single rollout
    max_bars: int = 16
    max_tokens: int = 1024
    seed: int | None = None

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be at least 1")
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError("top_p must be in (0, 1]")
        if self.exploration_c < 0.0:
            raise ValueError("exploration_c must be non-negative")


@dataclass
class Edge:
    token_id: int
    prior: float
    visits: int = 0
    q: float = 0.0
    child: "SearchNode | None" = None


@dataclass
class SearchNode:
    edges: list[Edge]
    node_visits: int = 1
    terminal: bool = False


@dataclass
class RolloutResult:
    sequence: list[int]
    emotion: np.ndarray | None
    realness: float | None
    reward: float


@dataclass
class DecodeTrace:
    """One record per emitted token, serializable for offline analysis."""

    method: str
    start: list[int]
    records: list[dict] = field(default_factory=list)
    e_calls: int = 0
    d_calls: int = 0

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "start": list(self.start),
            "records": self.records,
            "e_calls": self.e_calls,
            "d_calls": self.d_calls,
        }


def selection_scores(node: SearchNode, cfg: DecodeConfig) -> np.ndarray:
    """Per-edge selection value: Q + c * prior * sqrt(N(n)) / (1 + N(n, l))."""
    root_term = cfg.exploration_c * math.sqrt(node.node_visits)
    return np.array(
        [e.q + root_term * e.prior / (1 + e.visits) for e in node.edges],
        dtype=np.float64,
    )


def select(node: SearchNode, cfg: DecodeConfig) -> int:
    """Index of the edge maximizing the selection value.

    Edges are stored in ascending token id order, so the first maximum is
    also the lowest-id winner on ties.
    """
    return int(np.argmax(selection_scores(node, cfg)))


def expand(prefix: Sequence[int], policy: Policy, cfg: DecodeConfig, vocab) -> SearchNode:
    """New node for ``prefix``: nucleus candidates, renormalized priors.

    The fresh node starts with one node visit and zero-visit, zero-Q edges.
    Raises TerminalNode when the prefix already ends the piece.
    """
    if prefix[-1] == vocab.end_id:
        raise TerminalNode("cannot expand past the end of the piece")
    dist = policy.next_distribution(prefix)
    ids = top_p_filter(dist, cfg.top_p)
    priors = dist[ids]
    priors = priors / priors.sum()
    return SearchNode(
        edges=[Edge(int(t), float(pr)) for t, pr in zip(ids, priors)]
    )


def simulate(
    prefix: Sequence[int],
    policy: Policy,
    classifier: EmotionClassifier,
    discriminator: Discriminator,
    cfg: DecodeConfig,
    budget: EvaluatorBudget,
    rng,
    vocab,
) -> RolloutResult:
    """Roll out to the next bar line (or end) and score the result.

    Sampling is nucleus-filtered at every step.  If the cap cuts the rollout
    before a single bar has been completed the result is the floor reward -1
    and the evaluators are not consulted.
    """
    seq = list(prefix)
    if seq[-1] != vocab.end_id:
        for _ in range(cfg.rollout_cap):
            dist = policy.next_distribution(seq)
            ids = top_p_filter(dist, cfg.top_p)
            tok = int(ids[sample_index(rng, dist[ids])])
            seq.append(tok)
            if tok == vocab.bar_id or tok == vocab.end_id:
                break
    try:
        emotion = classifier.distribution(seq, budget)
        realness = discriminator.realness(seq, budget)
    except SequenceTooShort:
        return RolloutResult(seq, None, None, -1.0)
    e_target = float(emotion[cfg.target.index])
    if argmax_quadrant(emotion) is cfg.target:
        reward = e_target * realness
    else:
        reward = (1.0 - e_target) * (realness - 1.0)
    return RolloutResult(seq, emotion, realness, reward)


def backpropagate(path: Sequence[tuple[SearchNode, Edge]], reward: float) -> None:
    """Update Q as a running mean and bump visit counts, leaf to root."""
    for node, edge in reversed(path):
        edge.q = (edge.q * edge.visits + reward) / (edge.visits + 1)
        edge.visits += 1
        node.node_visits = 1 + sum(e.visits for e in node.edges)


def search_step(
    root: SearchNode,
    prefix: Sequence[int],
    policy: Policy,
    classifier: EmotionClassifier,
    discriminator: Discriminator,
    cfg: DecodeConfig,
    budget: EvaluatorBudget,
    rng,
    vocab,
) -> RolloutResult:
    """One full iteration: descend, expand a leaf, roll out, back up."""
    node = root
    seq = list(prefix)
    path: list[tuple[SearchNode, Edge]] = []
    while True:
        idx = select(node, cfg)
        edge = node.edges[idx]
        path.append((node, edge))
        seq.append(edge.token_id)
        if edge.child is None:
            if edge.token_id == vocab.end_id:
                edge.child = SearchNode(edges=[], terminal=True)
            else:
                edge.child = expand(seq, policy, cfg, vocab)
            break
        node = edge.child
        if node.terminal:
            break
    result = simulate(seq, policy, classifier, discriminator, cfg, budget, rng, vocab)
    backpropagate(path, result.reward)
    return result


def choose_token(root: SearchNode, rng) -> tuple[int, SearchNode | None]:
    """Sample the next token proportionally to root visit counts.

    Returns the token id and the matching child, whose subtree statistics
    are kept intact for callers that want to keep searching from it.
    """
    visits = np.array([e.visits for e in root.edges], dtype=np.float64)
    idx = sample_index(rng, visits)
    edge = root.edges[idx]
    return edge.token_id, edge.child


def _finalize(seq: list[int], vocab) -> list[int]:
    """Close the sequence: drop an unfinished note group, append END."""
    kind_of = getattr(vocab, "kind_of", None)
    if kind_of is not None:  # abstract test vocabularies have no note groups
        from .remi.tokens import OPEN_GROUP_KINDS

        while len(seq) > 1 and kind_of(seq[-1]) in OPEN_GROUP_KINDS:
            seq.pop()
        if seq[-1] == vocab.start_id:
            seq.append(vocab.bar_id)
    if seq[-1] != vocab.end_id:
        seq.append(vocab.end_id)
    return seq


def decode_piece(
    start: Sequence[int],
    policy: Policy,
    classifier: EmotionClassifier,
    discriminator: Discriminator,
    cfg: DecodeConfig,
    rng=None,
    vocab=None,
) -> tuple[list[int], DecodeTrace]:
    """Generate a full piece, one searched token at a time.

    Every emitted token gets a fresh tree and exactly ``cfg.budget``
    iterations, so each decision costs the same number of emotion-model and
    discriminator calls.  Generation stops at EndOfMusic, at ``max_bars``
    bar lines, or at ``max_tokens``; the sequence is then closed so it
    always validates.
    """
    if vocab is None:
        vocab = getattr(policy, "vocab")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    budget = EvaluatorBudget()
    seq = list(start)
    bars = sum(1 for t in seq if t == vocab.bar_id)
    trace = DecodeTrace(method="puct", start=list(start))
    while len(seq) < cfg.max_tokens:
        root = expand(seq, policy, cfg, vocab)
        for _ in range(cfg.budget):
            search_step(root, seq, policy, classifier, discriminator, cfg, budget, rng, vocab)
        token, _ = choose_token(root, rng)
        seq.append(token)
        trace.records.append(
            {
                "step": len(trace.records),
                "candidate_ids": [e.token_id for e in root.edges],
                "priors": [e.prior for e in root.edges],
                "visits": [e.visits for e in root.edges],
                "q_values": [e.q for e in root.edges],
                "root_visits": root.node_visits,
                "chosen_id": token,
                "e_calls": budget.e_calls,
                "d_calls": budget.d_calls,
            }
        )
        if token == vocab.end_id:
            break
        if token == vocab.bar_id:
            bars += 1
            if bars >= cfg.max_bars:
                break
    seq = _finalize(seq, vocab)
    trace.e_calls = budget.e_calls
    trace.d_calls = budget.d_calls
    return seq, trace
