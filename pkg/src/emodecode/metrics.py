"""Objective metrics over generated pieces and comparison-table assembly."""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .emotion import ALL_QUADRANTS, EmotionQuadrant, argmax_quadrant
from .errors import EmptyPiece, ManifestSchemaError
from .models.base import Discriminator, EmotionClassifier, EvaluatorBudget
from .remi.piece import STEP_TICKS, Piece


def pitch_range(piece: Piece) -> float:
    """Highest minus lowest sounded pitch, in semitones."""
    if not piece.notes:
        raise EmptyPiece("pitch_range needs at least one note")
    pitches = [n.pitch for n in piece.notes]
    return float(max(pitches) - min(pitches))


def n_pitch_classes(piece: Piece) -> int:
    """Number of distinct pitch classes used."""
    if not piece.notes:
        raise EmptyPiece("n_pitch_classes needs at least one note")
    return len({n.pitch % 12 for n in piece.notes})


def polyphony(piece: Piece) -> float:
    """Mean number of simultaneously sounding notes.

    Time is swept on the sub-beat grid; a note sounds on every step t with
    onset <= t*STEP_TICKS < onset + duration, and steps where nothing
    sounds are excluded from the mean.
    """
    if not piece.notes:
        raise EmptyPiece("polyphony needs at least one note")
    end = max(n.onset + n.duration for n in piece.notes)
    n_steps = (end + STEP_TICKS - 1) // STEP_TICKS
    counts = np.zeros(n_steps, dtype=np.int64)
    for note in piece.notes:
        start = (note.onset + STEP_TICKS - 1) // STEP_TICKS
        stop = (note.onset + note.duration + STEP_TICKS - 1) // STEP_TICKS
        counts[start:stop] += 1
    sounding = counts[counts > 0]
    if sounding.size == 0:
        return 0.0
    return float(sounding.mean())


def emotion_rate(
    sequences: Iterable[Sequence[int]],
    classifier: EmotionClassifier,
    target: EmotionQuadrant,
    budget: EvaluatorBudget | None = None,
) -> float:
    """Fraction of sequences whose classifier argmax hits the target."""
    if budget is None:
        budget = EvaluatorBudget()
    hits = 0
    total = 0
    for seq in sequences:
        total += 1
        if argmax_quadrant(classifier.distribution(seq, budget)) is target:
            hits += 1
    if total == 0:
        raise ValueError("no sequences")
    return hits / total


def discriminator_rate(
    sequences: Iterable[Sequence[int]],
    discriminator: Discriminator,
    threshold: float = 0.5,
    budget: EvaluatorBudget | None = None,
) -> float:
    """Fraction of sequences the discriminator scores above threshold."""
    if budget is None:
        budget = EvaluatorBudget()
    hits = 0
    total = 0
    for seq in sequences:
        total += 1
        if discriminator.realness(seq, budget) > threshold:
            hits += 1
    if total == 0:
        raise ValueError("no sequences")
    return hits / total


_METRIC_KEYS = ("pitch_range", "n_pitch_classes", "polyphony", "emotion_rate", "discriminator_rate")
_METRIC_LABELS = {
    "pitch_range": "PR",
    "n_pitch_classes": "NPC",
    "polyphony": "POLY",
    "emotion_rate": "E",
    "discriminator_rate": "D",
}


def summarize_pieces(pieces: Sequence[Piece]) -> dict[str, float]:
    """Mean PR / NPC / POLY over a batch of pieces."""
    if not pieces:
        raise ValueError("no pieces")
    return {
        "pitch_range": float(np.mean([pitch_range(p) for p in pieces])),
        "n_pitch_classes": float(np.mean([n_pitch_classes(p) for p in pieces])),
        "polyphony": float(np.mean([polyphony(p) for p in pieces])),
    }


def _check_aggregates(manifest: dict, require_all_emotions: bool) -> dict[str, dict[str, float]]:
    if not isinstance(manifest, dict) or "aggregates" not in manifest:
        raise ManifestSchemaError("manifest has no aggregates section")
    aggregates = manifest["aggregates"]
    if not isinstance(aggregates, dict):
        raise ManifestSchemaError("aggregates must be a mapping")
    names = {q.name for q in ALL_QUADRANTS}
    for emotion, row in aggregates.items():
        if emotion not in names:
            raise ManifestSchemaError(f"unknown emotion key {emotion!r}")
        missing = [k for k in _METRIC_KEYS if k not in row]
        if missing:
            raise ManifestSchemaError(f"{emotion} aggregates missing {missing}")
    absent = sorted(names - aggregates.keys())
    if absent and require_all_emotions:
        raise ManifestSchemaError(f"manifest missing emotion {', '.join(absent)}")
    return aggregates


def _format_cell(key: str, value: float) -> str:
    if key in ("emotion_rate", "discriminator_rate"):
        return f"{round(value * 100):.0f}%"
    return f"{value:.2f}"


def compare_table(manifests: dict[str, dict], require_all_emotions: bool = True) -> str:
    """Render per-method metric rows against per-emotion columns.

    `manifests` maps a method label to a parsed run manifest.  Raises
    ManifestSchemaError when a manifest lacks the aggregate metrics or
    (unless `require_all_emotions` is off) skips a quadrant.
    """
    if not manifests:
        raise ManifestSchemaError("no manifests to compare")
    per_method = {
        label: _check_aggregates(m, require_all_emotions) for label, m in manifests.items()
    }
    emotions = [q.name for q in ALL_QUADRANTS]
    header = ["method", "metric", *emotions]
    rows: list[list[str]] = []
    for label, aggregates in per_method.items():
        for key in _METRIC_KEYS:
            cells = [
                _format_cell(key, float(aggregates[e][key])) if e in aggregates else "-"
                for e in emotions
            ]
            rows.append([label, _METRIC_LABELS[key], *cells])
    widths = [max(len(header[i]), *(len(r[i]) for r in rows)) for i in range(len(header))]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(header)).rstrip(),
        "  ".join("-" * widths[i] for i in range(len(header))),
    ]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    return "\n".join(lines)
