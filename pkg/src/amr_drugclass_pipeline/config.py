"""Configuration.

Two layers:
- Settings: process-wide defaults (log level, packaged data files, cache
  file name). Overridable with AMR_* environment variables.
- RunConfig: one pipeline run, loaded from a JSON file. Relative paths in
  the file resolve against the file's own directory.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, Field, field_validator, model_validator

from amr_drugclass_pipeline.align.scoring import DEFAULT_K, ScoringScheme
from amr_drugclass_pipeline.llmclient.schemas import BackendConfig, load_backend_config
from amr_drugclass_pipeline.promptgen.templates import TemplateKind
from amr_drugclass_pipeline.seqio.fasta import SourceDB

PACKAGE_DATA = Path(__file__).parent / "data"


@dataclass
class Settings:
    """Process defaults."""

    data_dir: Path = field(default_factory=lambda: PACKAGE_DATA)
    label_table_filename: str = "label_map.tsv"
    synonyms_filename: str = "synonyms.tsv"
    mock_rules_filename: str = "mock_rules.json"
    adapter_filename: str = "adapters/openai_chat.json"
    cache_filename: str = "response_cache.jsonl"
    user_agent: str = "amr-drugclass-pipeline/0.1"

    # logging settings
    log_level: str = "info"

    @property
    def label_table_path(self) -> Path:
        return self.data_dir / self.label_table_filename

    @property
    def synonyms_path(self) -> Path:
        return self.data_dir / self.synonyms_filename

    @property
    def mock_rules_path(self) -> Path:
        return self.data_dir / self.mock_rules_filename

    @property
    def adapter_path(self) -> Path:
        return self.data_dir / self.adapter_filename

    @classmethod
    def from_env(cls, environ: dict[str, str] | None = None) -> Settings:
        env = os.environ if environ is None else environ
        base = cls()
        return cls(
            data_dir=Path(env.get("AMR_DATA_DIR", str(base.data_dir))),
            cache_filename=env.get("AMR_CACHE_FILENAME", base.cache_filename),
            log_level=env.get("AMR_LOG_LEVEL", base.log_level),
        )


settings = Settings.from_env()


def _check_exists(path: Path | None, what: str) -> None:
    if path is not None and not path.exists():
        raise ValueError(f"{what} not found: {path}")


class DatasetConfig(BaseModel):
    queries: Path
    query_db: SourceDB = SourceDB.MEGARES
    labels_table: Path | None = None
    references: Path | None = None
    reference_db: SourceDB = SourceDB.MEGARES
    index: Path | None = None
    exclude_self_hits: bool = True

    @model_validator(mode="after")
    def check_paths(self) -> DatasetConfig:
        _check_exists(self.queries, "Query FASTA")
        _check_exists(self.labels_table, "Labels table")
        _check_exists(self.references, "Reference FASTA")
        _check_exists(self.index, "Index file")
        return self


class AlignerConfig(BaseModel):
    word_size: int = Field(default=11, ge=4, le=16)
    match: int = Field(default=2, gt=0)
    mismatch: int = Field(default=-3, lt=0)
    gap_open: int = Field(default=-5, lt=0)
    gap_extend: int = Field(default=-2, lt=0)
    x_drop_ungapped: int = Field(default=20, gt=0)
    x_drop_gapped: int = Field(default=30, gt=0)
    hsp_cutoff: int = Field(default=30, ge=0)
    k: float = Field(default=DEFAULT_K, gt=0)
    top_k: int = Field(default=5, ge=1)

    def scheme(self) -> ScoringScheme:
        return ScoringScheme(
            match=self.match,
            mismatch=self.mismatch,
            gap_open=self.gap_open,
            gap_extend=self.gap_extend,
            x_drop_ungapped=self.x_drop_ungapped,
            x_drop_gapped=self.x_drop_gapped,
        )


class PromptConfig(BaseModel):
    template: TemplateKind = TemplateKind.SEQUENCE_ONLY
    max_sequence_length: int | None = Field(default=None, ge=1)
    max_alignment_length: int | None = Field(default=None, ge=1)


class SplitConfig(BaseModel):
    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 7
    subset: Literal["all", "train", "dev", "test"] = "all"

    @field_validator("fractions")
    @classmethod
    def check_fractions(cls, v: tuple[float, float, float]) -> tuple[float, float, float]:
        if any(f < 0 for f in v):
            raise ValueError(f"split fractions must be non-negative: {v}")
        if not math.isclose(sum(v), 1.0, abs_tol=1e-9):
            raise ValueError(f"split fractions must sum to 1.0, got {sum(v)!r}")
        return v


class RunConfig(BaseModel):
    """Everything one classify run needs."""

    dataset: DatasetConfig
    label_table: Path = Field(default_factory=lambda: settings.label_table_path)
    lexicon: Path = Field(default_factory=lambda: settings.synonyms_path)
    aligner: AlignerConfig = Field(default_factory=AlignerConfig)
    prompt: PromptConfig = Field(default_factory=PromptConfig)
    split: SplitConfig = Field(default_factory=SplitConfig)
    backend: BackendConfig = Field(
        default_factory=lambda: BackendConfig(mock_rules_path=settings.mock_rules_path)
    )
    output_dir: Path = Path("runs/latest")
    cache_path: Path | None = None

    @model_validator(mode="after")
    def check_paths(self) -> RunConfig:
        _check_exists(self.label_table, "Label table")
        _check_exists(self.lexicon, "Lexicon")
        _check_exists(self.backend.mock_rules_path, "Mock rule table")
        return self

    @property
    def response_cache_path(self) -> Path:
        return self.cache_path or self.output_dir / settings.cache_filename


def _resolve(value: Any, base: Path) -> Any:
    if value is None:
        return None
    path = Path(value)
    return str(path if path.is_absolute() else base / path)


def load_run_config(path: Path) -> RunConfig:
    """Read a RunConfig JSON file. `backend` may be an object or a path to one."""
    if not path.exists():
        raise FileNotFoundError(f"Run config not found: {path}")
    base = path.parent
    data = json.loads(path.read_text(encoding="utf-8"))

    dataset = data.get("dataset", {})
    for key in ("queries", "labels_table", "references", "index"):
        if key in dataset:
            dataset[key] = _resolve(dataset[key], base)
    for key in ("label_table", "lexicon", "output_dir", "cache_path"):
        if key in data:
            data[key] = _resolve(data[key], base)

    backend = data.get("backend")
    if isinstance(backend, str):
        data["backend"] = load_backend_config(Path(_resolve(backend, base)))
    elif isinstance(backend, dict):
        if backend.get("mock_rules_path"):
            backend["mock_rules_path"] = _resolve(backend["mock_rules_path"], base)
    return RunConfig.model_validate(data)


def apply_overrides(
    cfg: RunConfig,
    *,
    template: TemplateKind | None = None,
    output_dir: Path | None = None,
    top_k: int | None = None,
    max_in_flight: int | None = None,
) -> RunConfig:
    """Command-line flags win over the config file."""
    update: dict[str, Any] = {}
    if template is not None:
        update["prompt"] = cfg.prompt.model_copy(update={"template": template})
    if output_dir is not None:
        update["output_dir"] = output_dir
    if top_k is not None:
        if top_k < 1:
            raise ValueError(f"top_k must be at least 1, got {top_k}")
        update["aligner"] = cfg.aligner.model_copy(update={"top_k": top_k})
    if max_in_flight is not None:
        if max_in_flight < 1:
            raise ValueError(f"max_in_flight must be at least 1, got {max_in_flight}")
        update["backend"] = cfg.backend.model_copy(update={"max_in_flight": max_in_flight})
    return cfg.model_copy(update=update)
