"""Word-indexed seed-and-extend nucleotide alignment."""

from amr_drugclass_pipeline.align.extend import smith_waterman_score
from amr_drugclass_pipeline.align.index import (
    EmptyReferenceSet,
    IndexFormatError,
    InvalidWordSize,
    WordIndex,
    build_index,
    load_index,
    save_index,
)
from amr_drugclass_pipeline.align.scoring import (
    DEFAULT_K,
    EvalueParams,
    NoPositiveRoot,
    ScoringScheme,
    evalue,
    solve_lambda,
)
from amr_drugclass_pipeline.align.search import (
    HIT_RECORD_KEYS,
    Aligner,
    AlignmentHit,
    align_pair,
    search,
    search_all,
    write_hits_jsonl,
)

__all__ = [
    "DEFAULT_K",
    "HIT_RECORD_KEYS",
    "Aligner",
    "AlignmentHit",
    "EmptyReferenceSet",
    "EvalueParams",
    "IndexFormatError",
    "InvalidWordSize",
    "NoPositiveRoot",
    "ScoringScheme",
    "WordIndex",
    "align_pair",
    "build_index",
    "evalue",
    "load_index",
    "save_index",
    "search",
    "search_all",
    "smith_waterman_score",
    "solve_lambda",
    "write_hits_jsonl",
]
