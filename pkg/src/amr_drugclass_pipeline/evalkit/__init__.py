"""Metrics, report tables and run provenance."""

from amr_drugclass_pipeline.evalkit.manifest import (
    build_manifest,
    file_digest,
    provenance_digest,
    read_manifest,
    write_manifest,
)
from amr_drugclass_pipeline.evalkit.metrics import (
    Averaging,
    CrossLabelReport,
    EvalReport,
    MissingGroundTruth,
    group_label,
    group_predictions,
    score,
    score_crossmapped,
    truth_from_table,
)
from amr_drugclass_pipeline.evalkit.tables import (
    Layout,
    RenderedTable,
    emit_tables,
    write_tables,
)

__all__ = [
    "Averaging",
    "CrossLabelReport",
    "EvalReport",
    "Layout",
    "MissingGroundTruth",
    "RenderedTable",
    "build_manifest",
    "emit_tables",
    "file_digest",
    "group_label",
    "group_predictions",
    "provenance_digest",
    "read_manifest",
    "score",
    "score_crossmapped",
    "truth_from_table",
    "write_manifest",
    "write_tables",
]
