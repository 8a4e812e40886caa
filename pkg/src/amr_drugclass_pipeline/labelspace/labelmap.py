"""Flat, audited mapping from source-database labels to canonical drug classes.

The table is data (``data/label_map.tsv``); nothing in the pipeline hard-codes
MEGARes or CARD label strings. Source labels are matched case-insensitively.

Cross-scheme mapping runs the table backwards: the first row for a canonical
class in the target database is that class's preferred target label.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import pandas as pd

from amr_drugclass_pipeline.labelspace.classes import DrugClass, UnknownCanonicalClass
from amr_drugclass_pipeline.seqio.fasta import SeqRecord, SourceDB

logger = logging.getLogger(__name__)

LABEL_COLUMNS = ("source_db", "source_label", "canonical_class")
SYNONYM_COLUMNS = ("surface_form", "canonical_class")


class DuplicateMapping(ValueError):
    """The same source label (or synonym) maps to two different classes."""


class UnmappedLabel(KeyError):
    """A record carries a source label the table does not know."""

    def __init__(self, source_db: SourceDB, source_label: str) -> None:
        super().__init__(f"No mapping for {source_db.value} label {source_label!r}")
        self.source_db = source_db
        self.source_label = source_label


class NoTargetEquivalent(KeyError):
    """A canonical class has no label in the target scheme."""

    def __init__(self, drug_class: DrugClass, target_db: SourceDB) -> None:
        super().__init__(f"{drug_class.value} has no equivalent in {target_db.value}")
        self.drug_class = drug_class
        self.target_db = target_db


@dataclass(frozen=True)
class LabelEntry:
    source_db: SourceDB
    source_label: str
    canonical: DrugClass


@dataclass(frozen=True)
class LabelMap:
    """Immutable label table plus synonym list. Build through `load_label_map`."""

    entries: tuple[LabelEntry, ...]
    synonyms: tuple[tuple[str, DrugClass], ...] = ()
    _forward: dict[tuple[SourceDB, str], DrugClass] = field(
        init=False, repr=False, compare=False
    )
    _preferred: dict[tuple[SourceDB, DrugClass], str] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        forward: dict[tuple[SourceDB, str], DrugClass] = {}
        preferred: dict[tuple[SourceDB, DrugClass], str] = {}
        for entry in self.entries:
            if entry.canonical is DrugClass.UNCLASSIFIED:
                raise UnknownCanonicalClass(entry.canonical.value)
            key = (entry.source_db, entry.source_label.casefold())
            existing = forward.get(key)
            if existing is not None and existing is not entry.canonical:
                raise DuplicateMapping(
                    f"{entry.source_db.value} label {entry.source_label!r} maps to both "
                    f"{existing.value} and {entry.canonical.value}"
                )
            forward[key] = entry.canonical
            preferred.setdefault((entry.source_db, entry.canonical), entry.source_label)

        surfaces: dict[str, DrugClass] = {}
        for surface, drug_class in self.synonyms:
            folded = surface.casefold()
            if folded in surfaces and surfaces[folded] is not drug_class:
                raise DuplicateMapping(
                    f"Synonym {surface!r} maps to both {surfaces[folded].value} "
                    f"and {drug_class.value}"
                )
            surfaces[folded] = drug_class

        object.__setattr__(self, "_forward", forward)
        object.__setattr__(self, "_preferred", preferred)

    def lookup(self, source_db: SourceDB, source_label: str) -> DrugClass:
        """Canonical class for one source label. Raises UnmappedLabel."""
        try:
            return self._forward[(source_db, source_label.strip().casefold())]
        except KeyError:
            raise UnmappedLabel(source_db, source_label) from None

    def target_label(self, drug_class: DrugClass, target_db: SourceDB) -> str:
        """Preferred label for a class in the target scheme."""
        try:
            return self._preferred[(target_db, drug_class)]
        except KeyError:
            raise NoTargetEquivalent(drug_class, target_db) from None

    def databases(self) -> list[SourceDB]:
        return sorted({e.source_db for e in self.entries}, key=lambda db: db.value)

    def digest(self) -> str:
        """SHA-256 over the table and synonyms, for run provenance."""
        h = hashlib.sha256()
        for e in self.entries:
            h.update(f"{e.source_db.value}\t{e.source_label}\t{e.canonical.value}\n".encode())
        h.update(b"--\n")
        for surface, drug_class in self.synonyms:
            h.update(f"{surface}\t{drug_class.value}\n".encode())
        return h.hexdigest()

    def __len__(self) -> int:
        return len(self._forward)


def _read_table(source: Path | pd.DataFrame, columns: tuple[str, ...]) -> pd.DataFrame:
    if isinstance(source, pd.DataFrame):
        df = source
    else:
        if not source.exists():
            raise FileNotFoundError(f"Table not found: {source}")
        df = pd.read_csv(source, sep="\t", dtype=str, comment="#", keep_default_na=False)
    missing = set(columns) - set(df.columns)
    if missing:
        raise ValueError(f"Table is missing columns: {sorted(missing)}")
    return df


def _parse_db(value: str) -> SourceDB:
    try:
        return SourceDB(value.strip().upper())
    except ValueError:
        raise ValueError(
            f"Unknown source_db: {value!r}. Available: {[db.value for db in SourceDB]}"
        ) from None


def load_synonyms(source: Path | pd.DataFrame) -> tuple[tuple[str, DrugClass], ...]:
    df = _read_table(source, SYNONYM_COLUMNS)
    return tuple(
        (str(row.surface_form).strip(), DrugClass.parse(str(row.canonical_class)))
        for row in df.itertuples(index=False)
        if str(row.surface_form).strip()
    )


def load_label_map(
    table: Path | pd.DataFrame,
    synonyms: Path | pd.DataFrame | None = None,
) -> LabelMap:
    """Load and validate a label table (and optional synonym table).

    Identical duplicate rows are tolerated. Raises DuplicateMapping for
    conflicting rows and UnknownCanonicalClass for targets outside the
    nine-class space.
    """
    df = _read_table(table, LABEL_COLUMNS)
    entries = tuple(
        LabelEntry(
            source_db=_parse_db(str(row.source_db)),
            source_label=str(row.source_label).strip(),
            canonical=DrugClass.parse(str(row.canonical_class)),
        )
        for row in df.itertuples(index=False)
    )
    label_map = LabelMap(
        entries=entries,
        synonyms=load_synonyms(synonyms) if synonyms is not None else (),
    )
    logger.info(
        "Loaded label map: %d source labels across %s, %d synonyms",
        len(label_map),
        [db.value for db in label_map.databases()],
        len(label_map.synonyms),
    )
    return label_map


def canonicalize(record: SeqRecord, label_map: LabelMap) -> frozenset[DrugClass]:
    """Translate every raw label of a record; multi-label results are legal."""
    return frozenset(label_map.lookup(record.source_db, label) for label in record.raw_labels)


def canonicalize_all(
    records: Iterable[SeqRecord], label_map: LabelMap
) -> dict[str, frozenset[DrugClass]]:
    return {rec.id: canonicalize(rec, label_map) for rec in records}


def crossmap(
    prediction: DrugClass, label_map: LabelMap, target_db: SourceDB = SourceDB.CARD
) -> str:
    """Label string for a prediction in the target scheme; the sentinel passes through."""
    if prediction is DrugClass.UNCLASSIFIED:
        return DrugClass.UNCLASSIFIED.value
    return label_map.target_label(prediction, target_db)
