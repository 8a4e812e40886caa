"""FASTA reading, writing, and preprocessing for AMR gene sequences.

Parsing is line-oriented so malformed input can be reported with a line
number. Writing goes through Biopython so output wraps the way every other
FASTA tool expects.

Conventions:
- record id is the header token up to the first whitespace; the full header
  (without '>') is kept verbatim in `header`.
- MEGARes headers carry the drug class in the third '|' field
  (e.g. ``MEG_1|Drugs|Aminoglycosides|...``); CARD headers carry none, so
  CARD labels arrive through a labels table (see `dataset.attach_labels`).
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import BinaryIO, Iterable, TextIO

from Bio import SeqIO
from Bio.Seq import Seq
from Bio.SeqRecord import SeqRecord as BioSeqRecord

logger = logging.getLogger(__name__)

DNA_ALPHABET = frozenset("ACGTN")

# Second header field of MEGARes entries that name an antimicrobial type.
_MEGARES_TYPES = frozenset({"Drugs", "Multi-compound", "Metals", "Biocides"})


class SourceDB(str, Enum):
    """Reference database a sequence and its labels come from."""

    MEGARES = "MEGARES"
    CARD = "CARD"


class MalformedFasta(ValueError):
    """Raised when FASTA text violates the expected layout."""

    def __init__(self, message: str, line_number: int) -> None:
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class DuplicateRecordId(MalformedFasta):
    """Raised when two FASTA entries share a record id."""

    def __init__(self, record_id: str, line_number: int) -> None:
        super().__init__(f"duplicate record id {record_id!r}", line_number)
        self.record_id = record_id


@dataclass(frozen=True)
class SeqRecord:
    """One DNA sequence with its identifiers and source-database labels."""

    id: str
    header: str
    sequence: str
    source_db: SourceDB = SourceDB.MEGARES
    raw_labels: tuple[str, ...] = field(default_factory=tuple)


@dataclass
class PreprocessReport:
    """Summary of what preprocessing kept and dropped."""

    input_records: int
    kept_records: int
    dropped_invalid: int
    dropped_empty: int
    dropped_duplicate: int = 0

    @property
    def dropped(self) -> int:
        return self.dropped_invalid + self.dropped_empty + self.dropped_duplicate


def record_id_from_header(header: str) -> str:
    """Return the id token of a FASTA header (text up to first whitespace)."""
    parts = header.split(maxsplit=1)
    return parts[0] if parts else ""


def infer_megares_labels(header: str) -> tuple[str, ...]:
    """Pull the class field out of a MEGARes-style header, if present."""
    fields = record_id_from_header(header).split("|")
    if len(fields) >= 3 and fields[1] in _MEGARES_TYPES and fields[2]:
        return (fields[2],)
    return ()


def _iter_lines(source: BinaryIO | TextIO | bytes | str) -> Iterable[str]:
    if isinstance(source, bytes):
        source = io.BytesIO(source)
    elif isinstance(source, str):
        source = io.StringIO(source)
    for raw in source:
        yield raw.decode("utf-8") if isinstance(raw, bytes) else raw


def parse_fasta(
    source: BinaryIO | TextIO | bytes | str,
    source_db: SourceDB = SourceDB.MEGARES,
) -> list[SeqRecord]:
    """Parse FASTA text into SeqRecords, one per entry.

    Sequence lines are concatenated with all whitespace removed; case is left
    untouched (see `preprocess`). Raises MalformedFasta for a sequence line
    before any header, an entry with no sequence, an empty header, or a
    repeated record id.
    """
    records: list[SeqRecord] = []
    seen: set[str] = set()
    header: str | None = None
    header_line = 0
    chunks: list[str] = []

    def flush() -> None:
        if header is None:
            return
        if not chunks:
            raise MalformedFasta(f"entry {header!r} has no sequence", header_line)
        record_id = record_id_from_header(header)
        labels = infer_megares_labels(header) if source_db is SourceDB.MEGARES else ()
        records.append(
            SeqRecord(
                id=record_id,
                header=header,
                sequence="".join(chunks),
                source_db=source_db,
                raw_labels=labels,
            )
        )

    for line_number, line in enumerate(_iter_lines(source), start=1):
        text = line.rstrip("\r\n")
        if not text.strip():
            continue
        if text.startswith(">"):
            flush()
            header = text[1:]
            header_line = line_number
            chunks = []
            record_id = record_id_from_header(header)
            if not record_id:
                raise MalformedFasta("empty header", line_number)
            if record_id in seen:
                raise DuplicateRecordId(record_id, line_number)
            seen.add(record_id)
            continue
        if header is None:
            raise MalformedFasta("sequence data before first header", line_number)
        chunks.append("".join(text.split()))
    flush()

    logger.debug("Parsed %d FASTA records", len(records))
    return records


def read_fasta(path: Path, source_db: SourceDB = SourceDB.MEGARES) -> list[SeqRecord]:
    """Read a FASTA file from disk."""
    if not path.exists():
        raise FileNotFoundError(f"FASTA file not found: {path}")
    with path.open("rb") as handle:
        records = parse_fasta(handle, source_db=source_db)
    logger.info("Loaded %d sequences from %s", len(records), path)
    return records


def write_fasta(records: Iterable[SeqRecord], handle: TextIO) -> int:
    """Write records as FASTA (60-column wrap). Returns the record count."""
    bio_records = (
        BioSeqRecord(Seq(rec.sequence), id=rec.id, description=rec.header)
        for rec in records
    )
    return SeqIO.write(bio_records, handle, "fasta")


def preprocess(records: list[SeqRecord]) -> tuple[list[SeqRecord], PreprocessReport]:
    """Uppercase sequences and drop those that are empty or not pure ACGTN.

    A record whose id was already kept is dropped too, so the first
    occurrence wins. Drops are counted in the report, never raised.
    Idempotent.
    """
    kept: list[SeqRecord] = []
    kept_ids: set[str] = set()
    dropped_invalid = 0
    dropped_empty = 0
    dropped_duplicate = 0

    for rec in records:
        if rec.id in kept_ids:
            dropped_duplicate += 1
            logger.debug("Dropping %s: duplicate id", rec.id)
            continue
        seq = rec.sequence.upper()
        if not seq:
            dropped_empty += 1
            logger.debug("Dropping %s: empty sequence", rec.id)
            continue
        bad = set(seq) - DNA_ALPHABET
        if bad:
            dropped_invalid += 1
            logger.debug("Dropping %s: invalid characters %s", rec.id, sorted(bad))
            continue
        kept.append(rec if seq == rec.sequence else replace(rec, sequence=seq))
        kept_ids.add(rec.id)

    report = PreprocessReport(
        input_records=len(records),
        kept_records=len(kept),
        dropped_invalid=dropped_invalid,
        dropped_empty=dropped_empty,
        dropped_duplicate=dropped_duplicate,
    )
    if report.dropped:
        logger.warning(
            "Preprocess dropped %d of %d records (%d invalid, %d empty, %d duplicate ids)",
            report.dropped,
            report.input_records,
            dropped_invalid,
            dropped_empty,
            dropped_duplicate,
        )
    return kept, report
