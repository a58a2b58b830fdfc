"""Command line surface: ingest, train, generate, evaluate, compare.

Every command is deterministic given its inputs, config and seed.  Exit
codes: 0 success, 1 usage error, 2 bad input data, 3 internal invariant
violation.  Set EMODECODE_LOG=INFO (or DEBUG) for progress logging.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .baselines import SamplingConfig, SBBSConfig, cs_decode, sbbs_decode, top_p_decode
from .corpus import (
    corpus_sequences,
    dump_corpus,
    ingest_directory,
    labeled_sequences,
    load_corpus,
    load_labels,
)
from .emotion import ALL_QUADRANTS, EmotionQuadrant, argmax_quadrant
from .errors import (
    EmodecodeError,
    EmptyCorpus,
    GrammarError,
    LabelMismatch,
    MalformedMidi,
    ManifestSchemaError,
    NotFitted,
    NoValidFiles,
    SequenceTooShort,
    UntrainedCondition,
)
from .manifest import build_manifest, dump_manifest, load_manifest
from .metrics import compare_table, n_pitch_classes, pitch_range, polyphony
from .models.base import EvaluatorBudget
from .models.heuristic import HeuristicDiscriminator, HeuristicEmotionClassifier
from .models.ngram import NGramPolicy, train_ngram, with_emotion_prefix
from .puct import DecodeConfig, decode_piece
from .remi.midi import read_midi, write_midi
from .remi.piece import tokens_to_piece
from .remi.tokens import VOCAB, tokens_to_text

log = logging.getLogger("emodecode")

METHODS = ("puct", "sbbs", "cs", "topp")

# nucleus 0.9, 50 search iterations per token, exploration constant 1,
# 5 beams with 10 expansions each, 16-bar pieces
DEFAULTS = {
    "top_p": 0.9,
    "budget": 50,
    "exploration_c": 1.0,
    "rollout_cap": 64,
    "beams": 5,
    "top_k": 10,
    "max_bars": 16,
    "max_tokens": 1024,
    "count": 1,
    "seed": 0,
}

_DATA_ERRORS = (
    NoValidFiles,
    LabelMismatch,
    ManifestSchemaError,
    MalformedMidi,
    GrammarError,
    UntrainedCondition,
    EmptyCorpus,
    SequenceTooShort,
    NotFitted,
    FileNotFoundError,
    NotADirectoryError,
    IsADirectoryError,
    PermissionError,
    ValueError,
    yaml.YAMLError,
)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this CLI reserves 2 for data errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _setup_logging() -> None:
    name = os.environ.get("EMODECODE_LOG", "WARNING").upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def merged_config(args: argparse.Namespace, method: str) -> dict:
    """defaults <- config file common section <- method section <- flags."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        loaded = yaml.safe_load(Path(args.config).read_text(encoding="utf-8")) or {}
        if not isinstance(loaded, dict):
            raise ValueError(f"config file {args.config} must hold a mapping")
        unknown_sections = set(loaded) - ({"common"} | set(METHODS))
        if unknown_sections:
            raise ValueError(f"unknown config sections {sorted(unknown_sections)}")
        for section in ("common", method):
            table = loaded.get(section) or {}
            bad = set(table) - set(DEFAULTS)
            if bad:
                raise ValueError(f"unknown config keys in [{section}]: {sorted(bad)}")
            cfg.update(table)
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return cfg


def _requested_emotions(spec: str) -> tuple[EmotionQuadrant, ...]:
    if spec.lower() == "all":
        return ALL_QUADRANTS
    return (EmotionQuadrant.parse(spec),)


def cmd_ingest(args: argparse.Namespace) -> int:
    corpus = ingest_directory(args.directory)
    dump_corpus(corpus, args.out)
    log.info("ingested %d pieces from %s", len(corpus["pieces"]), args.directory)
    print(f"wrote {len(corpus['pieces'])} pieces to {args.out}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    sequences = corpus_sequences(corpus)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train_ngram(VOCAB, sequences, order=args.order, add_k=args.add_k).save(out / "policy.json")
    HeuristicEmotionClassifier(VOCAB).fit(sequences).save(out / "classifier.json")
    HeuristicDiscriminator(VOCAB).fit(sequences).save(out / "discriminator.json")
    written = ["policy.json", "classifier.json", "discriminator.json"]
    if args.labels:
        pairs = labeled_sequences(corpus, load_labels(args.labels))
        prefixed = [with_emotion_prefix(seq, quadrant, VOCAB) for seq, quadrant in pairs]
        train_ngram(VOCAB, prefixed, order=args.order, add_k=args.add_k).save(
            out / "conditional.json"
        )
        written.append("conditional.json")
    log.info("trained on %d sequences", len(sequences))
    print(f"wrote {', '.join(written)} to {out}")
    return 0


def _decode_one(method, start, policy, classifier, discriminator, cfg, target, rng):
    if method == "puct":
        return decode_piece(
            start,
            policy,
            classifier,
            discriminator,
            DecodeConfig(
                target=target,
                budget=cfg["budget"],
                top_p=cfg["top_p"],
                exploration_c=cfg["exploration_c"],
                rollout_cap=cfg["rollout_cap"],
                max_bars=cfg["max_bars"],
                max_tokens=cfg["max_tokens"],
            ),
            rng=rng,
        )
    if method == "sbbs":
        return sbbs_decode(
            start,
            policy,
            classifier,
            SBBSConfig(
                target=target,
                beams=cfg["beams"],
                top_k=cfg["top_k"],
                top_p=cfg["top_p"],
                max_bars=cfg["max_bars"],
                max_tokens=cfg["max_tokens"],
            ),
            rng=rng,
        )
    sampling = SamplingConfig(
        top_p=cfg["top_p"], max_bars=cfg["max_bars"], max_tokens=cfg["max_tokens"]
    )
    if method == "cs":
        return cs_decode(start, policy, target, sampling, rng=rng)
    return top_p_decode(start, policy, sampling, rng=rng)


def _piece_metrics(seq, target, classifier, discriminator, eval_budget) -> dict:
    piece = tokens_to_piece(VOCAB.decode(seq))
    if piece.notes:
        metrics = {
            "pitch_range": pitch_range(piece),
            "n_pitch_classes": n_pitch_classes(piece),
            "polyphony": polyphony(piece),
        }
    else:
        metrics = {"pitch_range": 0.0, "n_pitch_classes": 0, "polyphony": 0.0}
    try:
        predicted = argmax_quadrant(classifier.distribution(seq, eval_budget))
        metrics["predicted_emotion"] = predicted.name
        metrics["emotion_ok"] = int(predicted is target)
    except SequenceTooShort:
        metrics["predicted_emotion"] = None
        metrics["emotion_ok"] = 0
    try:
        realness = float(discriminator.realness(seq, eval_budget))
        metrics["realness"] = realness
        metrics["real_ok"] = int(realness > 0.5)
    except SequenceTooShort:
        metrics["realness"] = None
        metrics["real_ok"] = 0
    return metrics


def _aggregate(records: list[dict]) -> dict:
    by_emotion: dict[str, list[dict]] = {}
    for record in records:
        by_emotion.setdefault(record["emotion"], []).append(record["metrics"])
    out = {}
    for emotion, rows in by_emotion.items():
        out[emotion] = {
            "pitch_range": float(np.mean([r["pitch_range"] for r in rows])),
            "n_pitch_classes": float(np.mean([r["n_pitch_classes"] for r in rows])),
            "polyphony": float(np.mean([r["polyphony"] for r in rows])),
            "emotion_rate": float(np.mean([r["emotion_ok"] for r in rows])),
            "discriminator_rate": float(np.mean([r["real_ok"] for r in rows])),
        }
    return out


def cmd_generate(args: argparse.Namespace) -> int:
    method = args.method
    cfg = merged_config(args, method)
    models = Path(args.models)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    classifier = HeuristicEmotionClassifier.load(models / "classifier.json", VOCAB)
    discriminator = HeuristicDiscriminator.load(models / "discriminator.json", VOCAB)
    policy_file = "conditional.json" if method == "cs" else "policy.json"
    policy = NGramPolicy.load(models / policy_file, VOCAB)

    start = [VOCAB.start_id]
    records = []
    search_budget = {"e_calls": 0, "d_calls": 0}
    eval_budget = EvaluatorBudget()
    for quadrant in _requested_emotions(args.emotion):
        for index in range(cfg["count"]):
            seed_key = [int(cfg["seed"]), quadrant.value, index]
            rng = np.random.default_rng(np.random.SeedSequence(seed_key))
            seq, trace = _decode_one(
                method, start, policy, classifier, discriminator, cfg, quadrant, rng
            )
            search_budget["e_calls"] += trace.e_calls
            search_budget["d_calls"] += trace.d_calls
            stem = f"{quadrant.name}_{index:03d}"
            tokens = VOCAB.decode(seq)
            write_midi(tokens_to_piece(tokens), out / f"{stem}.mid")
            (out / f"{stem}.tokens.txt").write_text(tokens_to_text(tokens), encoding="utf-8")
            if args.traces:
                trace_text = json.dumps(trace.to_dict(), sort_keys=True, indent=2)
                (out / f"{stem}.trace.json").write_text(trace_text + "\n", encoding="utf-8")
            records.append(
                {
                    "emotion": quadrant.name,
                    "index": index,
                    "seed": seed_key,
                    "token_ids": [int(t) for t in seq],
                    "midi": f"{stem}.mid",
                    "tokens": f"{stem}.tokens.txt",
                    "metrics": _piece_metrics(seq, quadrant, classifier, discriminator, eval_budget),
                }
            )
            log.info("generated %s (%d tokens)", stem, len(seq))

    config_echo = {"method": method, "emotion": args.emotion, "models": str(args.models), **cfg}
    manifest = build_manifest(
        method=method,
        version=__version__,
        config=config_echo,
        seed=int(cfg["seed"]),
        pieces=records,
        aggregates=_aggregate(records),
        budget=search_budget,
    )
    dump_manifest(manifest, out / "manifest.json")
    print(f"wrote {len(records)} pieces and manifest.json to {out}")
    return 0


def _recomputed_aggregates(manifest: dict) -> dict:
    """Re-derive aggregates from recorded token ids; flag stale manifests."""
    checked = []
    for i, entry in enumerate(manifest["pieces"]):
        piece = tokens_to_piece(VOCAB.decode(entry["token_ids"]))
        if piece.notes:
            recomputed = {
                "pitch_range": pitch_range(piece),
                "n_pitch_classes": n_pitch_classes(piece),
                "polyphony": polyphony(piece),
            }
        else:
            recomputed = {"pitch_range": 0.0, "n_pitch_classes": 0, "polyphony": 0.0}
        for key, value in recomputed.items():
            if abs(value - float(entry["metrics"][key])) > 1e-9:
                raise ManifestSchemaError(
                    f"piece {i} {key} is {value}, manifest records {entry['metrics'][key]}"
                )
        checked.append(
            {
                "emotion": entry["emotion"],
                "metrics": {
                    **recomputed,
                    "emotion_ok": entry["metrics"]["emotion_ok"],
                    "real_ok": entry["metrics"]["real_ok"],
                },
            }
        )
    return _aggregate(checked)


def cmd_evaluate(args: argparse.Namespace) -> int:
    path = Path(args.target)
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.suffix.lower() in (".mid", ".midi"))
        if not files:
            raise NoValidFiles(f"no MIDI files in {path}")
        rows = []
        for file in files:
            piece = read_midi(file)
            if piece.notes:
                rows.append(
                    (file.name, pitch_range(piece), n_pitch_classes(piece), polyphony(piece))
                )
            else:
                rows.append((file.name, 0.0, 0, 0.0))
        report = {
            "pieces": [
                {"file": name, "pitch_range": pr, "n_pitch_classes": npc, "polyphony": poly}
                for name, pr, npc, poly in rows
            ]
        }
        width = max(len(r[0]) for r in rows)
        print(f"{'file'.ljust(width)}  {'PR':>6}  {'NPC':>4}  {'POLY':>6}")
        for name, pr, npc, poly in rows:
            print(f"{name.ljust(width)}  {pr:6.2f}  {npc:4d}  {poly:6.2f}")
    else:
        manifest = load_manifest(path)
        aggregates = _recomputed_aggregates(manifest)
        report = {"method": manifest["method"], "aggregates": aggregates}
        shim = dict(manifest)
        shim["aggregates"] = aggregates
        print(compare_table({manifest["method"]: shim}, require_all_emotions=False))
    if args.out:
        text = json.dumps(report, sort_keys=True, indent=2)
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    manifests: dict[str, dict] = {}
    for source in args.manifests:
        manifest = load_manifest(source)
        label = manifest["method"]
        if label in manifests:
            label = f"{label}:{Path(source).stem}"
        manifests[label] = manifest
    print(compare_table(manifests))
    if args.out:
        report = {label: m["aggregates"] for label, m in manifests.items()}
        text = json.dumps(report, sort_keys=True, indent=2)
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="emodecode", description=__doc__)
    parser.add_argument("--version", action="version", version=f"emodecode {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="tokenize a MIDI directory into a corpus file")
    p.add_argument("directory", help="directory holding .mid/.midi files")
    p.add_argument("--out", default="corpus.json", help="corpus file to write")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="fit policy and evaluator models on a corpus")
    p.add_argument("corpus", help="corpus file from `ingest`")
    p.add_argument("--order", type=int, default=3, help="n-gram order (2..4)")
    p.add_argument("--add-k", type=float, default=0.01, dest="add_k", help="smoothing constant")
    p.add_argument("--labels", help="JSON file mapping source names to E1..E4")
    p.add_argument("--out", default="models", help="directory for model files")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="decode pieces toward a target emotion")
    p.add_argument("--method", choices=METHODS, default="puct")
    p.add_argument("--emotion", default="all", help="e1|e2|e3|e4|all")
    p.add_argument("--models", default="models", help="directory from `train`")
    p.add_argument("--config", help="YAML config file (common + per-method sections)")
    p.add_argument("--count", type=int, help="pieces per emotion")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--budget", type=int, help="search iterations per emitted token")
    p.add_argument("--top-p", type=float, dest="top_p", help="nucleus mass")
    p.add_argument(
        "--exploration-c", type=float, dest="exploration_c", help="exploration constant"
    )
    p.add_argument("--rollout-cap", type=int, dest="rollout_cap", help="simulation length cap")
    p.add_argument("--beam", type=int, dest="beams", help="beam count (sbbs)")
    p.add_argument("--top-k", type=int, dest="top_k", help="expansions per beam (sbbs)")
    p.add_argument("--max-bars", type=int, dest="max_bars", help="stop after this many bars")
    p.add_argument("--max-tokens", type=int, dest="max_tokens", help="hard length cap")
    p.add_argument("--traces", action="store_true", help="write per-piece search traces")
    p.add_argument("--out", default="runs/out", help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="metrics for a run manifest or MIDI directory")
    p.add_argument("target", help="manifest.json or a directory of MIDI files")
    p.add_argument("--out", help="also write the report as JSON")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="side-by-side metric table for several runs")
    p.add_argument("manifests", nargs="+", help="two or more manifest.json files")
    p.add_argument("--out", help="also write the merged aggregates as JSON")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (EmodecodeError, AssertionError, RuntimeError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
