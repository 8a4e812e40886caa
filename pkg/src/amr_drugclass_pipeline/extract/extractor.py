"""Reply -> single drug class, by majority of lexicon mentions.

The most-mentioned class wins. No mentions at all, or a tie at the top,
yields UNCLASSIFIED. Negation is not understood: "not a beta-lactam" still
counts as a Betalactams mention.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from pathlib import Path
from typing import Any, Iterable

from pydantic import BaseModel, ConfigDict

from amr_drugclass_pipeline.extract.lexicon import SynonymLexicon
from amr_drugclass_pipeline.labelspace.classes import (
    SUBSTANTIVE_CLASSES,
    DrugClass,
    class_list_text,
)
from amr_drugclass_pipeline.llmclient.client import LlmClient
from amr_drugclass_pipeline.llmclient.schemas import BackendFingerprint, ModelReply
from amr_drugclass_pipeline.promptgen.templates import PromptJob, TemplateKind

logger = logging.getLogger(__name__)


class Prediction(BaseModel):
    """One extracted label, as persisted in a predictions file."""

    model_config = ConfigDict(frozen=True)

    record_id: str
    predicted_class: DrugClass
    counts: dict[str, int]
    template_kind: TemplateKind | None = None
    backend_fingerprint: BackendFingerprint | None = None
    run_manifest_digest: str | None = None


def record_id_of(job_id: str) -> str:
    """Job ids are ``<record_id>:<template kind>``."""
    head, sep, tail = job_id.rpartition(":")
    return head if sep and tail in TemplateKind.__members__ else job_id


def template_of(job_id: str) -> TemplateKind | None:
    _, sep, tail = job_id.rpartition(":")
    return TemplateKind(tail) if sep and tail in TemplateKind.__members__ else None


def extract_label(
    reply: ModelReply | str, lexicon: SynonymLexicon
) -> tuple[DrugClass, dict[DrugClass, int]]:
    text = reply if isinstance(reply, str) else reply.raw_text
    tally = Counter(lexicon.mentions(text))
    counts = {c: tally.get(c, 0) for c in SUBSTANTIVE_CLASSES}
    top = max(counts.values())
    leaders = [c for c, n in counts.items() if n == top]
    if top == 0 or len(leaders) > 1:
        return DrugClass.UNCLASSIFIED, counts
    return leaders[0], counts


def extract_batch(
    replies: Iterable[ModelReply], lexicon: SynonymLexicon
) -> list[Prediction]:
    predictions = []
    for reply in replies:
        label, counts = extract_label(reply, lexicon)
        predictions.append(
            Prediction(
                record_id=record_id_of(reply.job_id),
                predicted_class=label,
                counts={c.value: n for c, n in counts.items()},
                template_kind=template_of(reply.job_id),
                backend_fingerprint=reply.fingerprint,
            )
        )
    unclassified = sum(p.predicted_class is DrugClass.UNCLASSIFIED for p in predictions)
    logger.info("Extracted %d labels (%d unclassified)", len(predictions), unclassified)
    return predictions


class LlmBackedExtractor:
    """Asks a backend to restate a reply as one class, then counts that answer.

    Not deterministic unless the backend is; kept out of scored runs by default.
    """

    QUESTION = (
        "Which single drug class among ({classes}) does the following answer "
        "name as the resistance drug? Reply with the class name only.\n\n{answer}"
    )

    def __init__(self, client: LlmClient, lexicon: SynonymLexicon) -> None:
        self.client = client
        self.lexicon = lexicon

    async def extract(self, reply: ModelReply) -> tuple[DrugClass, dict[DrugClass, int]]:
        job = PromptJob(
            job_id=f"{reply.job_id}:restate",
            record_id=record_id_of(reply.job_id),
            template_kind=template_of(reply.job_id) or TemplateKind.SEQUENCE_ONLY,
            prompt=self.QUESTION.format(classes=class_list_text(), answer=reply.raw_text),
        )
        restated = await self.client.complete(job)
        return extract_label(restated, self.lexicon)


def write_predictions(predictions: Iterable[Prediction], path: Path) -> int:
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8") as handle:
        for prediction in predictions:
            row: dict[str, Any] = prediction.model_dump(mode="json")
            handle.write(json.dumps(row, sort_keys=True) + "\n")
            count += 1
    logger.info("Wrote %d predictions to %s", count, path)
    return count


def read_predictions(path: Path) -> list[Prediction]:
    if not path.exists():
        raise FileNotFoundError(f"Predictions file not found: {path}")
    with path.open(encoding="utf-8") as handle:
        return [Prediction.model_validate_json(line) for line in handle if line.strip()]
