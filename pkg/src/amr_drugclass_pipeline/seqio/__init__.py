"""Sequence I/O: FASTA parsing/writing, preprocessing, datasets and splits."""

from amr_drugclass_pipeline.seqio.dataset import (
    Dataset,
    InsufficientClassSupport,
    Split,
    attach_labels,
    load_labels_table,
    read_manifest,
    split,
    write_manifest,
)
from amr_drugclass_pipeline.seqio.fasta import (
    DNA_ALPHABET,
    DuplicateRecordId,
    MalformedFasta,
    PreprocessReport,
    SeqRecord,
    SourceDB,
    parse_fasta,
    preprocess,
    read_fasta,
    write_fasta,
)

__all__ = [
    "DNA_ALPHABET",
    "Dataset",
    "DuplicateRecordId",
    "InsufficientClassSupport",
    "MalformedFasta",
    "PreprocessReport",
    "SeqRecord",
    "SourceDB",
    "Split",
    "attach_labels",
    "load_labels_table",
    "parse_fasta",
    "preprocess",
    "read_fasta",
    "read_manifest",
    "split",
    "write_fasta",
    "write_manifest",
]
