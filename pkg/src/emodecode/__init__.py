"""Emotion-steered symbolic music generation with tree-search decoding.

The package decodes token-level music language models toward a target
perceived emotion.  Its core is a PUCT tree search that scores candidate
continuations with an emotion model and a realness model; stochastic
bi-objective beam search and conditional sampling are included as
comparison decoders, together with a REMI-style codec, objective metrics
and a reproducible CLI.
"""
from __future__ import annotations

__version__ = "0.1.0"

from .baselines import SamplingConfig, SBBSConfig, cs_decode, sbbs_decode, top_p_decode
from .emotion import ALL_QUADRANTS, EmotionQuadrant, argmax_quadrant
from .models.base import EvaluatorBudget
from .puct import DecodeConfig, DecodeTrace, decode_piece
from .remi.tokens import VOCAB, Token, Vocabulary

__all__ = [
    "ALL_QUADRANTS",
    "DecodeConfig",
    "DecodeTrace",
    "EmotionQuadrant",
    "EvaluatorBudget",
    "SBBSConfig",
    "SamplingConfig",
    "Token",
    "VOCAB",
    "Vocabulary",
    "__version__",
    "argmax_quadrant",
    "cs_decode",
    "decode_piece",
    "sbbs_decode",
    "top_p_decode",
]
