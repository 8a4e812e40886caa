"""Report tables in three layouts: unclassified rate, full metrics, cross-label accuracy.

Text rows are ``" | "``-joined with no padding. Metrics print to four
decimals; rates print as whole percents. Both outputs start with the run
manifest digest so any table can be traced back to the run that made it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import pandas as pd

from amr_drugclass_pipeline.evalkit.metrics import Averaging, CrossLabelReport, EvalReport

logger = logging.getLogger(__name__)


class Layout(str, Enum):
    UNCLASSIFIED_RATE = "UNCLASSIFIED_RATE"
    FULL_METRICS = "FULL_METRICS"
    CROSS_LABEL = "CROSS_LABEL"


HEADERS = {
    Layout.UNCLASSIFIED_RATE: ["Model", "Unclassified Rate"],
    Layout.FULL_METRICS: ["Model", "Accuracy", "Precision", "Recall", "F1 Score"],
    Layout.CROSS_LABEL: ["Model", "Accuracy"],
}

FILE_STEMS = {
    Layout.UNCLASSIFIED_RATE: "unclassified_rate",
    Layout.FULL_METRICS: "full_metrics",
    Layout.CROSS_LABEL: "cross_label",
}


@dataclass(frozen=True)
class RenderedTable:
    layout: Layout
    text: str
    csv: str


def format_metric(value: float) -> str:
    return f"{value:.4f}"


def format_rate(value: float) -> str:
    return f"{value * 100:.0f}%"


def _rows(
    reports: Sequence[EvalReport | CrossLabelReport], layout: Layout, averaging: Averaging
) -> list[list[str]]:
    rows = []
    for r in reports:
        if layout is Layout.CROSS_LABEL:
            rows.append([r.label, format_metric(r.accuracy)])
            continue
        if not isinstance(r, EvalReport):
            raise TypeError(f"{layout.value} tables need EvalReport rows, got {type(r).__name__}")
        if layout is Layout.UNCLASSIFIED_RATE:
            rows.append([r.label, format_rate(r.unclassified_rate)])
        else:
            rows.append(
                [
                    r.label,
                    format_metric(r.accuracy),
                    format_metric(r.precision[averaging]),
                    format_metric(r.recall[averaging]),
                    format_metric(r.f1[averaging]),
                ]
            )
    return rows


def emit_tables(
    reports: Sequence[EvalReport | CrossLabelReport],
    layout: Layout,
    manifest_digest: str = "",
    averaging: Averaging = Averaging.WEIGHTED,
) -> RenderedTable:
    """Render reports as a text table and CSV with a fixed column order."""
    if not reports:
        raise ValueError("emit_tables needs at least one report")
    header = HEADERS[layout]
    rows = _rows(reports, layout, averaging)

    lines = [f"# run_manifest_digest: {manifest_digest}"]
    if layout is Layout.FULL_METRICS:
        lines.append(f"# averaging: {averaging.value}")
        lines.append("# unclassified: counted wrong, excluded from precision denominators")
    lines.append(" | ".join(header))
    lines.extend(" | ".join(row) for row in rows)
    text = "\n".join(lines) + "\n"

    frame = pd.DataFrame(rows, columns=header)
    frame["run_manifest_digest"] = manifest_digest
    csv = frame.to_csv(index=False, lineterminator="\n")
    return RenderedTable(layout=layout, text=text, csv=csv)


def write_tables(tables: Sequence[RenderedTable], output_dir: Path) -> list[Path]:
    output_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for table in tables:
        stem = FILE_STEMS[table.layout]
        for suffix, content in ((".txt", table.text), (".csv", table.csv)):
            path = output_dir / f"{stem}{suffix}"
            path.write_text(content, encoding="utf-8")
            written.append(path)
    logger.info("Wrote %d report files to %s", len(written), output_dir)
    return written
