"""Scoring of extracted predictions against ground truth.

Rules:
- a prediction is correct when it is one of the record's true classes
- UNCLASSIFIED is always wrong and counts toward the unclassified rate
- UNCLASSIFIED asserts no class, so it never enters a precision denominator
- multi-label truth collapses to one class per record for the per-class
  tables: the prediction itself when correct, otherwise the first true class
  in canonical order
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
import pandas as pd
from sklearn import metrics

from amr_drugclass_pipeline.extract.extractor import Prediction
from amr_drugclass_pipeline.labelspace.classes import (
    ALL_CLASSES,
    SUBSTANTIVE_CLASSES,
    DrugClass,
    canonical_order,
    primary_class,
)
from amr_drugclass_pipeline.labelspace.labelmap import (
    LabelMap,
    NoTargetEquivalent,
    UnmappedLabel,
    crossmap,
)
from amr_drugclass_pipeline.promptgen.templates import TemplateKind
from amr_drugclass_pipeline.seqio.fasta import SourceDB

logger = logging.getLogger(__name__)

TEMPLATE_LABELS = {
    TemplateKind.SEQUENCE_ONLY: "Base Model",
    TemplateKind.BLAST_AUGMENTED: "Blastn",
}


class MissingGroundTruth(KeyError):
    def __init__(self, record_id: str) -> None:
        super().__init__(f"No ground truth for record {record_id!r}")
        self.record_id = record_id


class Averaging(str, Enum):
    WEIGHTED = "WEIGHTED"
    MACRO = "MACRO"


@dataclass
class EvalReport:
    label: str
    n_total: int
    n_unclassified: int
    unclassified_rate: float
    accuracy: float
    precision: dict[Averaging, float]
    recall: dict[Averaging, float]
    f1: dict[Averaging, float]
    confusion: np.ndarray
    fingerprint: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "label": self.label,
            "n_total": self.n_total,
            "n_unclassified": self.n_unclassified,
            "unclassified_rate": self.unclassified_rate,
            "accuracy": self.accuracy,
            "precision": {k.value: v for k, v in self.precision.items()},
            "recall": {k.value: v for k, v in self.recall.items()},
            "f1": {k.value: v for k, v in self.f1.items()},
            "confusion": self.confusion.tolist(),
            "fingerprint": self.fingerprint,
        }

    def confusion_frame(self) -> pd.DataFrame:
        """Truth classes down, predicted classes (sentinel last) across."""
        return pd.DataFrame(
            self.confusion,
            index=[c.value for c in SUBSTANTIVE_CLASSES],
            columns=[c.value for c in ALL_CLASSES],
        )


@dataclass
class CrossLabelReport:
    label: str
    n_total: int
    n_correct: int
    n_no_target: int
    n_unclassified: int
    accuracy: float
    target_db: SourceDB = SourceDB.CARD

    def to_dict(self) -> dict[str, Any]:
        return {
            "label": self.label,
            "n_total": self.n_total,
            "n_correct": self.n_correct,
            "n_no_target": self.n_no_target,
            "n_unclassified": self.n_unclassified,
            "accuracy": self.accuracy,
            "target_db": self.target_db.value,
        }


def _truth_for(record_id: str, truth: Mapping[str, Any]) -> Any:
    labels = truth.get(record_id)
    if not labels:
        raise MissingGroundTruth(record_id)
    return labels


def score(
    predictions: Sequence[Prediction],
    ground_truth: Mapping[str, Iterable[DrugClass]],
    label: str = "model",
    fingerprint: Mapping[str, Any] | None = None,
) -> EvalReport:
    """Unclassified rate, accuracy and weighted/macro precision, recall, F1."""
    if not predictions:
        raise ValueError("Cannot score an empty prediction set")

    y_true: list[str] = []
    y_pred: list[str] = []
    correct = 0
    for p in predictions:
        truth = set(_truth_for(p.record_id, ground_truth))
        hit = p.predicted_class in truth
        correct += hit
        effective = p.predicted_class if hit else primary_class(truth)
        y_true.append(effective.value)
        y_pred.append(p.predicted_class.value)

    n_total = len(predictions)
    n_unclassified = sum(p.predicted_class is DrugClass.UNCLASSIFIED for p in predictions)
    present = canonical_order(
        DrugClass(v) for v in set(y_true) | set(y_pred) if v != DrugClass.UNCLASSIFIED.value
    )
    labels = [c.value for c in present]

    precision: dict[Averaging, float] = {}
    recall: dict[Averaging, float] = {}
    f1: dict[Averaging, float] = {}
    for mode in Averaging:
        p_, r_, f_, _ = metrics.precision_recall_fscore_support(
            y_true, y_pred, labels=labels, average=mode.value.lower(), zero_division=0
        )
        precision[mode], recall[mode], f1[mode] = float(p_), float(r_), float(f_)

    confusion = metrics.confusion_matrix(
        y_true, y_pred, labels=[c.value for c in ALL_CLASSES]
    )[: len(SUBSTANTIVE_CLASSES)]

    report = EvalReport(
        label=label,
        n_total=n_total,
        n_unclassified=n_unclassified,
        unclassified_rate=n_unclassified / n_total,
        accuracy=correct / n_total,
        precision=precision,
        recall=recall,
        f1=f1,
        confusion=confusion,
        fingerprint=dict(fingerprint or {}),
    )
    logger.info(
        "%s: n=%d accuracy=%.4f unclassified=%.4f weighted F1=%.4f",
        label,
        n_total,
        report.accuracy,
        report.unclassified_rate,
        f1[Averaging.WEIGHTED],
    )
    return report


def _target_classes(
    labels: Iterable[str], label_map: LabelMap, target_db: SourceDB
) -> set[DrugClass]:
    classes: set[DrugClass] = set()
    for t in labels:
        try:
            classes.add(label_map.lookup(target_db, t))
        except UnmappedLabel:
            logger.debug("Target label %r has no %s mapping; ignored", t, target_db.value)
    return classes


def score_crossmapped(
    predictions: Sequence[Prediction],
    target_truth: Mapping[str, Iterable[str]],
    label_map: LabelMap,
    target_db: SourceDB = SourceDB.CARD,
    label: str = "model",
) -> CrossLabelReport:
    """Accuracy after mapping predictions into the target label scheme.

    A prediction is correct when any of the record's target labels maps to
    the predicted class in the target scheme, so a Betalactams prediction
    matches ``penam`` and ``carbapenem`` truth alike. Classes without a
    target label are scored wrong and counted.
    """
    if not predictions:
        raise ValueError("Cannot score an empty prediction set")
    correct = no_target = unclassified = 0
    for p in predictions:
        truth = _target_classes(_truth_for(p.record_id, target_truth), label_map, target_db)
        if p.predicted_class is DrugClass.UNCLASSIFIED:
            unclassified += 1
            continue
        try:
            crossmap(p.predicted_class, label_map, target_db)
        except NoTargetEquivalent:
            no_target += 1
            continue
        correct += p.predicted_class in truth

    report = CrossLabelReport(
        label=label,
        n_total=len(predictions),
        n_correct=correct,
        n_no_target=no_target,
        n_unclassified=unclassified,
        accuracy=correct / len(predictions),
        target_db=target_db,
    )
    if no_target:
        logger.warning(
            "%s: %d predictions have no %s equivalent", label, no_target, target_db.value
        )
    return report


def group_label(model_label: str, template: TemplateKind | None) -> str:
    if template is None:
        return model_label
    return f"{model_label} ({TEMPLATE_LABELS[template]})"


def group_predictions(
    predictions: Iterable[Prediction],
) -> dict[str, list[Prediction]]:
    """Split predictions by (model, template); keys are report row labels."""
    groups: dict[str, list[Prediction]] = {}
    for p in predictions:
        model = p.backend_fingerprint.model_name if p.backend_fingerprint else "model"
        groups.setdefault(group_label(model, p.template_kind), []).append(p)
    return groups


def truth_from_table(table: pd.DataFrame) -> dict[str, set[str]]:
    """record_id -> set of source labels, from a labels table."""
    truth: dict[str, set[str]] = {}
    for row in table.itertuples(index=False):
        label = str(row.source_label).strip()
        if label:
            truth.setdefault(str(row.record_id), set()).add(label)
    return truth
