"""Comparison decoders: stochastic bi-objective beam search and
conditional sampling, plus the unconditioned top-p sampler they are both
measured against.

All three share the stopping rules of the tree-search decoder (EndOfMusic,
max_bars bar lines, max_tokens) and always return sequences that validate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .emotion import EmotionQuadrant
from .errors import UntrainedCondition
from .models.base import EmotionClassifier, EvaluatorBudget, Policy
from .models.sampling import sample_index, top_p_filter
from .puct import DecodeTrace, _finalize

_LOG_FLOOR = 1e-12


@dataclass
class SamplingConfig:
    top_p: float = 0.9
    max_bars: int = 16
    max_tokens: int = 1024
    seed: int | None = None


@dataclass
class SBBSConfig:
    target: EmotionQuadrant
    beams: int = 5
    top_k: int = 10
    top_p: float = 0.9
    max_bars: int = 16
    max_tokens: int = 1024
    seed: int | None = None

    def __post_init__(self):
        if self.beams < 1:
            raise ValueError("beams must be >= 1")
        if self.top_k < self.beams:
            raise ValueError("top_k must be >= beams")
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError("top_p must be in (0, 1]")


def top_p_decode(
    start: Sequence[int],
    policy: Policy,
    cfg: SamplingConfig,
    rng=None,
    vocab=None,
    method: str = "topp",
) -> tuple[list[int], DecodeTrace]:
    """Plain autoregressive nucleus sampling; no evaluator in the loop."""
    if vocab is None:
        vocab = getattr(policy, "vocab")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    seq = list(start)
    bars = sum(1 for t in seq if t == vocab.bar_id)
    trace = DecodeTrace(method=method, start=list(start))
    while len(seq) < cfg.max_tokens:
        dist = policy.next_distribution(seq)
        ids = top_p_filter(dist, cfg.top_p)
        probs = dist[ids]
        token = int(ids[sample_index(rng, probs)])
        seq.append(token)
        trace.records.append(
            {
                "step": len(trace.records),
                "candidate_ids": [int(i) for i in ids],
                "probs": [float(p) for p in probs / probs.sum()],
                "chosen_id": token,
                "e_calls": 0,
                "d_calls": 0,
            }
        )
        if token == vocab.end_id:
            break
        if token == vocab.bar_id:
            bars += 1
            if bars >= cfg.max_bars:
                break
    return _finalize(seq, vocab), trace


def cs_decode(
    start: Sequence[int],
    conditional_policy: Policy,
    target: EmotionQuadrant,
    cfg: SamplingConfig,
    rng=None,
) -> tuple[list[int], DecodeTrace]:
    """Conditional sampling: inject the control token, then sample top-p.

    The policy must have been trained on control-prefixed sequences;
    UntrainedCondition is raised when it never saw this quadrant's token.
    No emotion-model or discriminator calls are made.
    """
    vocab = conditional_policy.vocab
    control = vocab.emotion_id(target)
    seen = getattr(conditional_policy, "seen", None)
    if seen is not None and not seen(control):
        raise UntrainedCondition(f"no training data for {target.name}")
    prefixed = [start[0], control, *start[1:]]
    seq, trace = top_p_decode(prefixed, conditional_policy, cfg, rng=rng, vocab=vocab, method="cs")
    return seq, trace


@dataclass
class _Beam:
    seq: list[int]
    logscore: float
    log_e: float = 0.0  # last bar-boundary classifier value, reused inside a bar
    bars: int = 0
    done: bool = False


def _has_complete_bar(seq: list[int], vocab) -> bool:
    n_bars = sum(1 for t in seq if t == vocab.bar_id)
    return n_bars >= 2 or (n_bars >= 1 and seq[-1] == vocab.end_id)


def sbbs_decode(
    start: Sequence[int],
    policy: Policy,
    classifier: EmotionClassifier,
    cfg: SBBSConfig,
    budget: EvaluatorBudget | None = None,
    rng=None,
) -> tuple[list[int], DecodeTrace]:
    """Stochastic bi-objective beam search toward a target quadrant.

    Each step expands every live beam with its top-k successors, scores
    candidates by accumulated log policy probability plus the beam's cached
    log classifier probability of the target, renormalizes over all
    candidates and samples the next beam set without replacement.  The
    classifier is consulted once per beam at every completed bar line; its
    value is reused for the steps inside the following bar.
    """
    vocab = policy.vocab
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    if budget is None:
        budget = EvaluatorBudget()
    start_bars = sum(1 for t in start if t == vocab.bar_id)
    beams = [_Beam(seq=list(start), logscore=0.0, bars=start_bars) for _ in range(cfg.beams)]
    trace = DecodeTrace(method="sbbs", start=list(start))
    step = 0
    while not all(b.done for b in beams):
        live = [i for i, b in enumerate(beams) if not b.done]
        candidates: list[tuple[int, int, float]] = []  # parent index, token, logscore
        for i in live:
            beam = beams[i]
            dist = policy.next_distribution(beam.seq)
            order = np.argsort(-dist, kind="stable")
            order = order[dist[order] > 0.0][: cfg.top_k]
            for tok in order:
                logscore = beam.logscore + math.log(max(float(dist[tok]), _LOG_FLOOR)) + beam.log_e
                candidates.append((i, int(tok), logscore))

        scores = np.array([c[2] for c in candidates], dtype=np.float64)
        weights = np.exp(scores - scores.max())
        picked: list[int] = []
        for _ in range(min(len(live), len(candidates))):
            idx = sample_index(rng, weights)
            picked.append(idx)
            weights[idx] = 0.0  # without replacement
            if not weights.any():
                break

        survivors: list[_Beam] = [b for b in beams if b.done]
        for idx in picked:
            parent, token, logscore = candidates[idx]
            beam = beams[parent]
            child = _Beam(
                seq=beam.seq + [token],
                logscore=logscore,
                log_e=beam.log_e,
                bars=beam.bars,
                done=False,
            )
            if token == vocab.end_id:
                child.done = True
            elif token == vocab.bar_id:
                child.bars += 1
                if _has_complete_bar(child.seq, vocab):
                    e_vec = classifier.distribution(child.seq, budget)
                    child.log_e = math.log(max(float(e_vec[cfg.target.index]), _LOG_FLOOR))
                if child.bars >= cfg.max_bars:
                    child.done = True
            if len(child.seq) >= cfg.max_tokens:
                child.done = True
            survivors.append(child)
        beams = survivors
        trace.records.append(
            {
                "step": step,
                "beams": [
                    {"parent": candidates[i][0], "token_id": candidates[i][1], "logscore": candidates[i][2]}
                    for i in picked
                ],
                "e_calls": budget.e_calls,
                "d_calls": budget.d_calls,
            }
        )
        step += 1

    best = max(beams, key=lambda b: b.logscore)
    trace.e_calls = budget.e_calls
    trace.d_calls = budget.d_calls
    return _finalize(list(best.seq), vocab), trace
