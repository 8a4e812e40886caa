"""Shared pytest fixtures for all test modules."""

from __future__ import annotations

from pathlib import Path
from typing import Generator

import numpy as np
import pytest

from amr_drugclass_pipeline.align import ScoringScheme, WordIndex, build_index
from amr_drugclass_pipeline.config import settings
from amr_drugclass_pipeline.extract import SynonymLexicon, load_lexicon
from amr_drugclass_pipeline.labelspace import LabelMap, load_label_map
from amr_drugclass_pipeline.llmclient import BackendConfig, BackendKind, ResponseCache
from amr_drugclass_pipeline.seqio import SeqRecord, preprocess, read_fasta

FIXTURES = Path(__file__).parent / "fixtures"


def random_dna(length: int, seed: int) -> str:
    """Uniform random ACGT string, reproducible per seed."""
    rng = np.random.default_rng(seed)
    return "".join(rng.choice(list("ACGT"), size=length))


# ── Path Fixtures ──


@pytest.fixture
def fixtures_dir() -> Path:
    """Directory holding the shipped test FASTA, truth and config files."""
    return FIXTURES


@pytest.fixture
def references_fasta() -> Path:
    return FIXTURES / "references.fasta"


@pytest.fixture
def queries_fasta() -> Path:
    return FIXTURES / "queries.fasta"


@pytest.fixture
def card_truth_tsv() -> Path:
    return FIXTURES / "card_truth.tsv"


@pytest.fixture
def run_config_path() -> Path:
    return FIXTURES / "run_config.json"


# ── Sample Data Fixtures ──


@pytest.fixture
def sample_fasta_text() -> str:
    """Three small MEGARes-style entries, one wrapped over two lines."""
    return (
        ">MEG_1|Drugs|Aminoglycosides|Aminoglycoside_N-acetyltransferases|AAC6 first gene\n"
        "ACGTACGTAC\n"
        "GTACGT\n"
        ">MEG_2|Drugs|betalactams|Class_A_betalactamases|TEM\n"
        "acgtnacgt\n"
        ">MEG_3|Drugs|Tetracyclines|Tetracycline_efflux|TETA\n"
        "TTTTGGGGCCCCAAAA\n"
    )


@pytest.fixture
def sample_records() -> list[SeqRecord]:
    """Records with MEGARes labels in three classes, six per class."""
    records = []
    for n, label in enumerate(["Aminoglycosides", "betalactams", "Tetracyclines"] * 6):
        records.append(
            SeqRecord(
                id=f"MEG_{n:03d}",
                header=f"MEG_{n:03d}|Drugs|{label}|mech|gene{n}",
                sequence=random_dna(60, seed=n),
                raw_labels=(label,),
            )
        )
    return records


@pytest.fixture
def reference_records() -> list[SeqRecord]:
    """The nine shipped reference genes."""
    records, _ = preprocess(read_fasta(FIXTURES / "references.fasta"))
    return records


@pytest.fixture
def query_records() -> list[SeqRecord]:
    """The 27 shipped query variants (three per reference gene)."""
    records, _ = preprocess(read_fasta(FIXTURES / "queries.fasta"))
    return records


# ── Label Space Fixtures ──


@pytest.fixture
def label_map() -> LabelMap:
    """The packaged label table with its synonyms."""
    return load_label_map(settings.label_table_path, settings.synonyms_path)


@pytest.fixture
def lexicon() -> SynonymLexicon:
    """The packaged reply lexicon."""
    return load_lexicon(settings.synonyms_path)


# ── Alignment Fixtures ──


@pytest.fixture
def scheme() -> ScoringScheme:
    """Default nucleotide scheme: +2/-3, gaps -5/-2."""
    return ScoringScheme()


@pytest.fixture
def small_index(reference_records: list[SeqRecord]) -> WordIndex:
    return build_index(reference_records, word_size=11)


# ── Backend Fixtures ──


@pytest.fixture
def mock_backend_config() -> BackendConfig:
    """MOCK backend over the packaged rule table, no retry delay."""
    return BackendConfig(
        kind=BackendKind.MOCK,
        model_name="mock-amr",
        mock_rules_path=settings.mock_rules_path,
        backoff_base_s=0.0,
    )


@pytest.fixture
def http_backend_config() -> BackendConfig:
    """HTTP_CHAT backend pointed at the in-process stub."""
    return BackendConfig(
        kind=BackendKind.HTTP_CHAT,
        endpoint_url="http://stub/v1/chat/completions",
        model_name="stub-chat",
        max_retries=2,
        backoff_base_s=0.0,
        backoff_jitter=0.0,
    )


@pytest.fixture
def response_cache(tmp_path: Path) -> Generator[ResponseCache, None, None]:
    """An opened response cache in a temporary directory."""
    cache = ResponseCache(tmp_path / "cache.jsonl")
    cache.connect()
    yield cache
    cache.close()
