"""Deterministic run manifests.

A generate run writes one manifest describing every emitted piece plus
per-emotion aggregate metrics.  Manifests are byte-reproducible: keys are
sorted, paths are stored relative to the manifest, and no timestamps or
host details are recorded.  Re-running with the recorded config and seed
must reproduce the recorded token ids exactly.
"""
from __future__ import annotations

import json
from pathlib import Path

from .errors import ManifestSchemaError

FORMAT_TAG = "run-manifest-v1"

_PIECE_KEYS = {"emotion", "index", "seed", "token_ids", "midi", "tokens", "metrics"}
_REQUIRED = {"format", "version", "method", "config", "seed", "pieces", "aggregates", "budget"}


def build_manifest(
    method: str,
    version: str,
    config: dict,
    seed: int,
    pieces: list[dict],
    aggregates: dict,
    budget: dict,
) -> dict:
    manifest = {
        "format": FORMAT_TAG,
        "version": version,
        "method": method,
        "config": config,
        "seed": seed,
        "pieces": pieces,
        "aggregates": aggregates,
        "budget": budget,
    }
    validate_manifest(manifest)
    return manifest


def validate_manifest(manifest: dict) -> None:
    if not isinstance(manifest, dict):
        raise ManifestSchemaError("manifest must be a mapping")
    missing = _REQUIRED - manifest.keys()
    if missing:
        raise ManifestSchemaError(f"manifest missing keys {sorted(missing)}")
    if manifest["format"] != FORMAT_TAG:
        raise ManifestSchemaError(f"unsupported manifest format {manifest['format']!r}")
    if not isinstance(manifest["pieces"], list):
        raise ManifestSchemaError("pieces must be a list")
    for i, entry in enumerate(manifest["pieces"]):
        if not isinstance(entry, dict):
            raise ManifestSchemaError(f"piece {i} must be a mapping")
        missing = _PIECE_KEYS - entry.keys()
        if missing:
            raise ManifestSchemaError(f"piece {i} missing keys {sorted(missing)}")
        for key in ("midi", "tokens"):
            if Path(entry[key]).is_absolute():
                raise ManifestSchemaError(f"piece {i} {key} path must be relative")
        if not isinstance(entry["token_ids"], list):
            raise ManifestSchemaError(f"piece {i} token_ids must be a list")


def dump_manifest(manifest: dict, path: str | Path) -> None:
    validate_manifest(manifest)
    text = json.dumps(manifest, sort_keys=True, indent=2)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_manifest(path: str | Path) -> dict:
    try:
        manifest = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestSchemaError(f"not valid JSON: {exc}") from exc
    validate_manifest(manifest)
    return manifest
