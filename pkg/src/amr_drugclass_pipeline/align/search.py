"""Seed-and-extend search of one query against a word index.

Stages per query:
    1. seeds: every query w-mer found in the index, grouped by
       (subject, diagonal) and visited in query order
    2. ungapped X-drop extension; seeds already covered by an HSP on the
       same diagonal are skipped, HSPs under the cutoff are dropped
    3. gapped X-drop extension from each surviving HSP, strongest first,
       anchored at the centre of its best-scoring w-long window; an anchor
       is skipped only when an alignment already found pairs that same cell
    4. best alignment per subject, ranked by (e-value, -score, subject id)
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from amr_drugclass_pipeline.align.extend import (
    GappedAlignment,
    Hsp,
    extend_gapped,
    extend_ungapped,
    render_rows,
)
from amr_drugclass_pipeline.align.index import WordIndex, build_index, word_codes
from amr_drugclass_pipeline.align.scoring import (
    DEFAULT_K,
    EvalueParams,
    ScoringScheme,
    evalue,
    solve_lambda,
)
from amr_drugclass_pipeline.seqio.fasta import SeqRecord

logger = logging.getLogger(__name__)

DEFAULT_TOP_K = 5
DEFAULT_HSP_CUTOFF = 30

HIT_RECORD_KEYS = (
    "sequence_title",
    "alignment_length",
    "e_value",
    "query_sequence",
    "match_sequence",
    "subject_sequence",
)


@dataclass(frozen=True)
class AlignmentHit:
    sequence_title: str
    alignment_length: int
    e_value: float
    raw_score: int
    query_sequence: str
    match_sequence: str
    subject_sequence: str
    subject_id: str
    query_start: int
    query_end: int
    subject_start: int
    subject_end: int

    def to_record(self) -> dict[str, Any]:
        """The six display fields, in prompt order."""
        data = asdict(self)
        return {key: data[key] for key in HIT_RECORD_KEYS}


class Aligner:
    """Search a fixed index with a fixed scheme; lambda is solved once."""

    def __init__(
        self,
        index: WordIndex,
        scheme: ScoringScheme | None = None,
        *,
        k: float = DEFAULT_K,
        hsp_cutoff: int = DEFAULT_HSP_CUTOFF,
        x_drop_gapped: int | None = None,
    ) -> None:
        self.index = index
        self.scheme = scheme or ScoringScheme()
        self.k = k
        self.hsp_cutoff = hsp_cutoff
        self.x_drop_gapped = x_drop_gapped
        self.lambda_ = solve_lambda(self.scheme)

    def search(
        self,
        query: SeqRecord,
        top_k: int = DEFAULT_TOP_K,
        exclude_ids: Iterable[str] = (),
    ) -> list[AlignmentHit]:
        if top_k < 1:
            raise ValueError(f"top_k must be at least 1, got {top_k}")
        q = np.frombuffer(query.sequence.encode("ascii"), dtype=np.uint8)
        excluded = {
            pos
            for pos in (self.index.position_of(rid) for rid in exclude_ids)
            if pos is not None
        }

        hsps = self._seed_and_extend(query.sequence, q, excluded)
        params = EvalueParams(
            lambda_=self.lambda_, k=self.k, m=len(q), n=self.index.total_length
        )

        hits: list[AlignmentHit] = []
        for ref_pos, ref_hsps in hsps.items():
            best = self._best_gapped(q, self.index.subject_array(ref_pos), ref_hsps)
            if best is None or best.score <= 0:
                continue
            hits.append(self._to_hit(query.sequence, ref_pos, best, params))

        hits.sort(key=lambda h: (h.e_value, -h.raw_score, h.subject_id))
        logger.debug(
            "Query %s: %d subjects with HSPs, returning %d of %d hits",
            query.id,
            len(hsps),
            min(top_k, len(hits)),
            len(hits),
        )
        return hits[:top_k]

    def _seed_and_extend(
        self, sequence: str, q: np.ndarray, excluded: set[int]
    ) -> dict[int, list[Hsp]]:
        w = self.index.word_size
        codes, valid = word_codes(sequence, w)
        q_pos = np.flatnonzero(valid)
        if len(q_pos) == 0:
            return {}
        starts, stops = self.index.ranges(codes[q_pos])
        counts = stops - starts
        total = int(counts.sum())
        if total == 0:
            return {}

        seed_q = np.repeat(q_pos, counts)
        first = np.repeat(starts - (np.cumsum(counts) - counts), counts)
        entries = first + np.arange(total)
        seed_ref = self.index.ref_idx[entries].astype(np.int64)
        seed_s = self.index.offsets[entries].astype(np.int64)
        if excluded:
            keep = ~np.isin(seed_ref, list(excluded))
            seed_q, seed_ref, seed_s = seed_q[keep], seed_ref[keep], seed_s[keep]
        diag = seed_q - seed_s
        order = np.lexsort((seed_q, diag, seed_ref))

        hsps: dict[int, list[Hsp]] = {}
        current: tuple[int, int] | None = None
        covered_until = -1
        for idx in order:
            ref_pos, d, qi = int(seed_ref[idx]), int(diag[idx]), int(seed_q[idx])
            if (ref_pos, d) != current:
                current, covered_until = (ref_pos, d), -1
            if qi < covered_until:
                continue
            hsp = extend_ungapped(
                q, self.index.subject_array(ref_pos), qi, qi - d, w, self.scheme
            )
            covered_until = hsp.q_end
            if hsp.score >= self.hsp_cutoff:
                hsps.setdefault(ref_pos, []).append(hsp)
        return hsps

    def _best_gapped(
        self, q: np.ndarray, subject: np.ndarray, hsps: list[Hsp]
    ) -> GappedAlignment | None:
        best: GappedAlignment | None = None
        found: list[GappedAlignment] = []
        for hsp in sorted(hsps, key=lambda h: (-h.score, h.q_start, h.s_start)):
            anchor = hsp.anchor(q, subject, self.index.word_size, self.scheme)
            if any(aln.passes_through(*anchor) for aln in found):
                continue
            aln = extend_gapped(q, subject, anchor, self.scheme, self.x_drop_gapped)
            found.append(aln)
            if best is None or aln.score > best.score:
                best = aln
        return best

    def _to_hit(
        self, query: str, ref_pos: int, aln: GappedAlignment, params: EvalueParams
    ) -> AlignmentHit:
        q_row, m_row, s_row = render_rows(query, self.index.sequences[ref_pos], aln)
        return AlignmentHit(
            sequence_title=self.index.titles[ref_pos],
            alignment_length=len(aln.ops),
            e_value=evalue(aln.score, params),
            raw_score=aln.score,
            query_sequence=q_row,
            match_sequence=m_row,
            subject_sequence=s_row,
            subject_id=self.index.ref_ids[ref_pos],
            query_start=aln.q_start,
            query_end=aln.q_end,
            subject_start=aln.s_start,
            subject_end=aln.s_end,
        )


def search(
    index: WordIndex,
    query: SeqRecord,
    scheme: ScoringScheme | None = None,
    top_k: int = DEFAULT_TOP_K,
    **options: Any,
) -> list[AlignmentHit]:
    """One-off search; build an `Aligner` to reuse lambda across queries."""
    exclude_ids = options.pop("exclude_ids", ())
    return Aligner(index, scheme, **options).search(query, top_k, exclude_ids)


def search_all(
    aligner: Aligner,
    queries: Sequence[SeqRecord],
    top_k: int = DEFAULT_TOP_K,
    exclude_self_hits: bool = True,
) -> dict[str, list[AlignmentHit]]:
    """Top hits for every query, keyed by query id."""
    results: dict[str, list[AlignmentHit]] = {}
    for n, query in enumerate(queries, start=1):
        exclude = (query.id,) if exclude_self_hits else ()
        results[query.id] = aligner.search(query, top_k, exclude)
        if n % 100 == 0:
            logger.info("Searched %d/%d queries", n, len(queries))
    with_hits = sum(1 for hits in results.values() if hits)
    logger.info("Search done: %d/%d queries have hits", with_hits, len(queries))
    return results


def align_pair(
    query: str,
    subject: str,
    scheme: ScoringScheme | None = None,
    word_size: int = 11,
    hsp_cutoff: int = 0,
    x_drop_gapped: int | None = None,
) -> AlignmentHit | None:
    """Seed-and-extend alignment of two sequences; None when no seed is shared."""
    index = build_index([SeqRecord(id="subject", header="subject", sequence=subject)], word_size)
    aligner = Aligner(index, scheme, hsp_cutoff=hsp_cutoff, x_drop_gapped=x_drop_gapped)
    hits = aligner.search(SeqRecord(id="query", header="query", sequence=query), top_k=1)
    return hits[0] if hits else None


def write_hits_jsonl(hits_by_query: dict[str, list[AlignmentHit]], path: Path) -> None:
    """One line per hit: query id plus the six display fields."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for query_id, hits in hits_by_query.items():
            for hit in hits:
                row = {"query_id": query_id, **hit.to_record()}
                handle.write(json.dumps(row) + "\n")
    logger.info("Wrote hits for %d queries to %s", len(hits_by_query), path)
