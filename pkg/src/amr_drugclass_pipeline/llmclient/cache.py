"""Append-only JSON-lines response cache keyed by content digest.

- One line per stored reply: {key, model_name, temperature, raw_text}.
- The key is SHA-256 over (prompt, model_name, temperature, max_output_tokens),
  so changing any decoding setting misses the cache.
- On connect the whole file is read into memory; later lines win.
- Writes go through the one open handle and are flushed per entry, so a run
  that dies midway keeps everything it already paid for.
- No secrets are ever written here.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import IO

from amr_drugclass_pipeline.llmclient.schemas import BackendConfig

logger = logging.getLogger(__name__)


class CacheNotOpen(RuntimeError):
    pass


@dataclass(frozen=True)
class CachedReply:
    key: str
    model_name: str
    temperature: float
    raw_text: str


def cache_key(prompt: str, cfg: BackendConfig) -> str:
    material = json.dumps(
        [prompt, cfg.model_name, cfg.temperature, cfg.max_output_tokens],
        ensure_ascii=False,
    )
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


class ResponseCache:
    """Repository over the cache file."""

    def __init__(self, path: Path) -> None:
        self._path = path
        self._handle: IO[str] | None = None
        self._entries: dict[str, CachedReply] = {}
        self.hits = 0
        self.misses = 0

    # Connection management
    def connect(self) -> None:
        self._path.parent.mkdir(parents=True, exist_ok=True)
        self._entries = {}
        if self._path.exists():
            self._load()
        self._handle = self._path.open("a", encoding="utf-8")
        logger.info("Opened response cache with %d entries: %s", len(self._entries), self._path)

    def close(self) -> None:
        if self._handle:
            self._handle.close()
            self._handle = None
            logger.info(
                "Response cache closed (%d hits, %d misses).", self.hits, self.misses
            )

    @property
    def handle(self) -> IO[str]:
        if self._handle is None:
            raise CacheNotOpen("Response cache not open. Call connect() first.")
        return self._handle

    def __enter__(self) -> ResponseCache:
        self.connect()
        return self

    def __exit__(self, *args: object) -> None:
        self.close()

    def _load(self) -> None:
        with self._path.open(encoding="utf-8") as handle:
            for line_number, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                    entry = CachedReply(
                        key=row["key"],
                        model_name=row["model_name"],
                        temperature=float(row["temperature"]),
                        raw_text=row["raw_text"],
                    )
                except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                    # a torn final line from an interrupted run
                    logger.warning("Skipping unreadable cache line %d in %s", line_number, self._path)
                    continue
                self._entries[entry.key] = entry

    # Reads and writes
    def get(self, key: str) -> CachedReply | None:
        if self._handle is None:
            raise CacheNotOpen("Response cache not open. Call connect() first.")
        entry = self._entries.get(key)
        if entry is None:
            self.misses += 1
        else:
            self.hits += 1
        return entry

    def put(self, key: str, raw_text: str, cfg: BackendConfig) -> CachedReply:
        entry = CachedReply(
            key=key, model_name=cfg.model_name, temperature=cfg.temperature, raw_text=raw_text
        )
        row = {
            "key": entry.key,
            "model_name": entry.model_name,
            "temperature": entry.temperature,
            "raw_text": entry.raw_text,
        }
        self.handle.write(json.dumps(row, ensure_ascii=False) + "\n")
        self.handle.flush()
        self._entries[key] = entry
        return entry

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def __len__(self) -> int:
        return len(self._entries)
