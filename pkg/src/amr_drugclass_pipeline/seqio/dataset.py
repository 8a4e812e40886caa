"""Labeled datasets: label attachment, stratified splitting, JSON-lines manifests.

The split is stratified: records are grouped by a caller-supplied stratum
(normally the canonical drug class), each group is ordered by id, shuffled
with a seeded numpy Generator, and cut proportionally with largest-remainder
rounding so bucket sizes always add up to the group size.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel

from amr_drugclass_pipeline.seqio.fasta import SeqRecord, SourceDB

logger = logging.getLogger(__name__)

DEFAULT_FRACTIONS = (0.8, 0.1, 0.1)


class Split(str, Enum):
    TRAIN = "TRAIN"
    DEV = "DEV"
    TEST = "TEST"


class InsufficientClassSupport(ValueError):
    """A stratum has fewer records than there are non-empty split buckets."""

    def __init__(self, stratum: str, count: int, buckets: int) -> None:
        super().__init__(
            f"Class {stratum!r} has {count} record(s) but {buckets} non-zero split "
            "buckets; merge the class or drop a bucket"
        )
        self.stratum = stratum
        self.count = count


@dataclass(frozen=True)
class Dataset:
    """Ordered records plus an optional split assignment."""

    records: tuple[SeqRecord, ...]
    split_assignment: dict[str, Split] | None = None
    seed: int = 7
    fractions: tuple[float, float, float] = field(default=DEFAULT_FRACTIONS)

    def subset(self, bucket: Split) -> list[SeqRecord]:
        """Records assigned to one split bucket, in dataset order."""
        if self.split_assignment is None:
            raise ValueError("Dataset has no split assignment")
        return [r for r in self.records if self.split_assignment[r.id] is bucket]

    def counts(self) -> dict[Split, int]:
        if self.split_assignment is None:
            return {}
        values = list(self.split_assignment.values())
        return {bucket: values.count(bucket) for bucket in Split}


def _check_fractions(fractions: Sequence[float]) -> tuple[float, float, float]:
    if len(fractions) != 3:
        raise ValueError(f"Expected three split fractions, got {len(fractions)}")
    if any(f < 0 for f in fractions):
        raise ValueError(f"Split fractions must be non-negative: {tuple(fractions)}")
    if not math.isclose(sum(fractions), 1.0, abs_tol=1e-9):
        raise ValueError(f"Split fractions must sum to 1.0, got {sum(fractions)!r}")
    return (float(fractions[0]), float(fractions[1]), float(fractions[2]))


def allocate(n: int, fractions: Sequence[float]) -> list[int]:
    """Largest-remainder allocation of n items over the given fractions."""
    exact = [n * f for f in fractions]
    counts = [math.floor(x) for x in exact]
    remainder = n - sum(counts)
    # ties go to the earlier bucket
    order = sorted(range(len(exact)), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in order[:remainder]:
        counts[i] += 1
    return counts


def split(
    dataset: Dataset,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
    seed: int = 7,
    stratify_by: Callable[[SeqRecord], str] | None = None,
) -> Dataset:
    """Assign every record to TRAIN/DEV/TEST, stratified by `stratify_by`.

    Deterministic in (records, seed, fractions). Raises
    InsufficientClassSupport when a stratum cannot populate every non-zero
    bucket.
    """
    fracs = _check_fractions(fractions)
    key = stratify_by or (lambda _rec: "")
    buckets = list(Split)
    nonzero = sum(1 for f in fracs if f > 0)

    strata: dict[str, list[SeqRecord]] = {}
    for rec in dataset.records:
        strata.setdefault(key(rec), []).append(rec)

    assignment: dict[str, Split] = {}
    for index, name in enumerate(sorted(strata)):
        members = sorted(strata[name], key=lambda r: r.id)
        if len(members) < nonzero:
            raise InsufficientClassSupport(name, len(members), nonzero)
        rng = np.random.default_rng([seed, index])
        order = rng.permutation(len(members))
        counts = allocate(len(members), fracs)
        start = 0
        for bucket, count in zip(buckets, counts):
            for pos in order[start : start + count]:
                assignment[members[int(pos)].id] = bucket
            start += count
        logger.debug("Stratum %r split %s", name, counts)

    result = replace(dataset, split_assignment=assignment, seed=seed, fractions=fracs)
    logger.info(
        "Split %d records into %s",
        len(dataset.records),
        {b.value: c for b, c in result.counts().items()},
    )
    return result


# Label tables


def load_labels_table(path: Path) -> pd.DataFrame:
    """Load a record_id / source_db / source_label TSV (one row per label)."""
    if not path.exists():
        raise FileNotFoundError(f"Labels table not found: {path}")
    df = pd.read_csv(path, sep="\t", dtype=str, comment="#").fillna("")
    missing = {"record_id", "source_db", "source_label"} - set(df.columns)
    if missing:
        raise ValueError(f"Labels table {path} is missing columns: {sorted(missing)}")
    return df


def attach_labels(records: Iterable[SeqRecord], table: pd.DataFrame) -> list[SeqRecord]:
    """Merge labels from a table onto records; labels keep first-seen order."""
    grouped: dict[str, list[tuple[str, str]]] = {}
    for row in table.itertuples(index=False):
        grouped.setdefault(str(row.record_id), []).append(
            (str(row.source_db).upper(), str(row.source_label))
        )

    merged: list[SeqRecord] = []
    for rec in records:
        rows = grouped.get(rec.id)
        if not rows:
            merged.append(rec)
            continue
        labels = list(rec.raw_labels)
        for _, label in rows:
            if label and label not in labels:
                labels.append(label)
        merged.append(
            replace(rec, source_db=SourceDB(rows[0][0]), raw_labels=tuple(labels))
        )
    return merged


# Manifest (JSON lines)


class ManifestRow(BaseModel):
    """One dataset record as persisted in a manifest line."""

    id: str
    header: str
    sequence: str
    source_db: SourceDB
    raw_labels: list[str]
    split: Split | None = None


def write_manifest(dataset: Dataset, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    assignment = dataset.split_assignment or {}
    with path.open("w", encoding="utf-8") as handle:
        for rec in dataset.records:
            row = ManifestRow(
                id=rec.id,
                header=rec.header,
                sequence=rec.sequence,
                source_db=rec.source_db,
                raw_labels=list(rec.raw_labels),
                split=assignment.get(rec.id),
            )
            handle.write(json.dumps(row.model_dump(mode="json"), sort_keys=True) + "\n")
    logger.info("Wrote manifest with %d records: %s", len(dataset.records), path)


def read_manifest(path: Path, seed: int = 7) -> Dataset:
    if not path.exists():
        raise FileNotFoundError(f"Manifest not found: {path}")
    records: list[SeqRecord] = []
    assignment: dict[str, Split] = {}
    with path.open(encoding="utf-8") as handle:
        for line in handle:
            if not line.strip():
                continue
            row = ManifestRow.model_validate_json(line)
            records.append(
                SeqRecord(
                    id=row.id,
                    header=row.header,
                    sequence=row.sequence,
                    source_db=row.source_db,
                    raw_labels=tuple(row.raw_labels),
                )
            )
            if row.split is not None:
                assignment[row.id] = row.split
    complete = bool(assignment) and len(assignment) == len(records)
    return Dataset(
        records=tuple(records),
        split_assignment=assignment if complete else None,
        seed=seed,
    )
