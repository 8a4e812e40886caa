"""Run manifest: what a run was computed from, and a digest of that.

The digest covers the provenance block only. Provenance holds configuration
and input digests, never timestamps or cache statistics, so two runs over
the same inputs produce the same digest.
"""

from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Mapping

logger = logging.getLogger(__name__)

MANIFEST_NAME = "run_manifest.json"


def file_digest(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def provenance_digest(provenance: Mapping[str, Any]) -> str:
    return hashlib.sha256(canonical_json(provenance).encode("utf-8")).hexdigest()


def build_manifest(
    provenance: Mapping[str, Any], outcome: Mapping[str, Any] | None = None
) -> dict[str, Any]:
    return {
        "digest": provenance_digest(provenance),
        "provenance": dict(provenance),
        "outcome": dict(outcome or {}),
    }


def write_manifest(manifest: Mapping[str, Any], output_dir: Path) -> Path:
    output_dir.mkdir(parents=True, exist_ok=True)
    path = output_dir / MANIFEST_NAME
    path.write_text(
        json.dumps(manifest, sort_keys=True, indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    logger.info("Run manifest %s written to %s", manifest["digest"][:12], path)
    return path


def read_manifest(path: Path) -> dict[str, Any]:
    if not path.exists():
        raise FileNotFoundError(f"Run manifest not found: {path}")
    manifest: dict[str, Any] = json.loads(path.read_text(encoding="utf-8"))
    if manifest.get("digest") != provenance_digest(manifest.get("provenance", {})):
        raise ValueError(f"Run manifest {path} digest does not match its provenance")
    return manifest
