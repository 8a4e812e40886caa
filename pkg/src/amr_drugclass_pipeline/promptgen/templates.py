"""The two question templates sent to generation backends.

Both are single user turns that enumerate the nine classes. Hit lists are
rendered as Python mapping literals (``repr``), so keys and strings come out
single-quoted, floats use the shortest round-trip form and the whole list
can be read back with ``ast.literal_eval``.
"""

from __future__ import annotations

import json
import logging
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from pydantic import BaseModel, ConfigDict

from amr_drugclass_pipeline.align.search import AlignmentHit
from amr_drugclass_pipeline.labelspace.classes import class_list_text
from amr_drugclass_pipeline.seqio.fasta import SeqRecord

logger = logging.getLogger(__name__)

QUESTION_PREFIX = "Tell me the resistance drug among drugs"
MAX_HITS = 5


class EmptySequence(ValueError):
    def __init__(self, record_id: str) -> None:
        super().__init__(f"Record {record_id!r} has an empty sequence")
        self.record_id = record_id


class TemplateKind(str, Enum):
    SEQUENCE_ONLY = "SEQUENCE_ONLY"
    BLAST_AUGMENTED = "BLAST_AUGMENTED"


class PromptJob(BaseModel):
    """A rendered prompt, ready to send."""

    model_config = ConfigDict(frozen=True)

    job_id: str
    record_id: str
    template_kind: TemplateKind
    prompt: str
    truncated: bool = False


def _question(context: str) -> str:
    return f"{QUESTION_PREFIX} ({class_list_text()}) with {context}?"


def _cut(text: str, limit: int | None) -> tuple[str, bool]:
    if limit is None or len(text) <= limit:
        return text, False
    return text[:limit], True


def _sequence_prompt(
    record: SeqRecord, max_sequence_length: int | None
) -> tuple[str, bool]:
    if not record.sequence:
        raise EmptySequence(record.id)
    sequence, truncated = _cut(record.sequence, max_sequence_length)
    return _question(f"DNA sequence ({sequence})"), truncated


def render_hit_list(
    hits: Sequence[AlignmentHit], max_alignment_length: int | None = None
) -> tuple[str, bool]:
    truncated = False
    records = []
    for hit in hits:
        record = hit.to_record()
        for key in ("query_sequence", "match_sequence", "subject_sequence"):
            record[key], cut = _cut(record[key], max_alignment_length)
            truncated = truncated or cut
        records.append(record)
    return repr(records), truncated


def _blast_prompt(
    hits: Sequence[AlignmentHit], max_alignment_length: int | None
) -> tuple[str, bool]:
    if len(hits) > MAX_HITS:
        raise ValueError(f"At most {MAX_HITS} hits per prompt, got {len(hits)}")
    hit_list, truncated = render_hit_list(hits, max_alignment_length)
    return _question(f"DNA information ({hit_list})"), truncated


def render_sequence_prompt(
    record: SeqRecord, max_sequence_length: int | None = None
) -> str:
    """Sequence-only question over the full (or cut) uppercase sequence."""
    return _sequence_prompt(record, max_sequence_length)[0]


def render_blast_prompt(
    record: SeqRecord,
    hits: Sequence[AlignmentHit],
    max_alignment_length: int | None = None,
) -> str:
    """Alignment-augmented question over at most five hits, order kept."""
    return _blast_prompt(hits, max_alignment_length)[0]


def build_job(
    record: SeqRecord,
    kind: TemplateKind,
    hits: Sequence[AlignmentHit] = (),
    max_sequence_length: int | None = None,
    max_alignment_length: int | None = None,
) -> PromptJob:
    if kind is TemplateKind.SEQUENCE_ONLY:
        prompt, truncated = _sequence_prompt(record, max_sequence_length)
    else:
        prompt, truncated = _blast_prompt(hits, max_alignment_length)
    return PromptJob(
        job_id=f"{record.id}:{kind.value}",
        record_id=record.id,
        template_kind=kind,
        prompt=prompt,
        truncated=truncated,
    )


def write_jobs_jsonl(jobs: Iterable[PromptJob], path: Path) -> int:
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8") as handle:
        for job in jobs:
            handle.write(json.dumps(job.model_dump(mode="json"), ensure_ascii=False) + "\n")
            count += 1
    logger.info("Wrote %d prompt jobs to %s", count, path)
    return count
