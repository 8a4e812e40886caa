"""Unit tests for scoring, cross-label scoring, tables and run manifests."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from amr_drugclass_pipeline.evalkit import (
    Averaging,
    Layout,
    MissingGroundTruth,
    build_manifest,
    emit_tables,
    group_predictions,
    provenance_digest,
    read_manifest,
    score,
    score_crossmapped,
    truth_from_table,
    write_manifest,
    write_tables,
)
from amr_drugclass_pipeline.evalkit.tables import format_rate
from amr_drugclass_pipeline.extract import Prediction
from amr_drugclass_pipeline.labelspace import SUBSTANTIVE_CLASSES, DrugClass, LabelMap, primary_class
from amr_drugclass_pipeline.llmclient import BackendFingerprint, BackendKind
from amr_drugclass_pipeline.promptgen import TemplateKind

A = DrugClass.AMINOGLYCOSIDES
B = DrugClass.BETALACTAMS
C = DrugClass.TETRACYCLINES
U = DrugClass.UNCLASSIFIED


def _predictions(labels: list[DrugClass], **extra) -> list[Prediction]:
    return [
        Prediction(record_id=f"r{n}", predicted_class=label, counts={}, **extra)
        for n, label in enumerate(labels)
    ]


def _truth(labels: list[DrugClass | set[DrugClass]]) -> dict[str, frozenset[DrugClass]]:
    return {
        f"r{n}": frozenset(label if isinstance(label, set) else {label})
        for n, label in enumerate(labels)
    }


class TestScore:
    """Tests for the main metric report."""

    def test_hand_computed_case(self) -> None:
        """truth A,A,B,C vs A,B,B,UNCLASSIFIED should match the hand-worked numbers."""
        report = score(_predictions([A, B, B, U]), _truth([A, A, B, C]))

        assert report.accuracy == pytest.approx(0.5)
        assert report.unclassified_rate == pytest.approx(0.25)
        assert report.recall[Averaging.WEIGHTED] == pytest.approx(0.5)
        assert report.precision[Averaging.WEIGHTED] == pytest.approx(0.625)
        assert report.f1[Averaging.WEIGHTED] == pytest.approx(0.5)
        assert report.recall[Averaging.MACRO] == pytest.approx(0.5)
        assert report.precision[Averaging.MACRO] == pytest.approx(0.5)

    def test_confusion_layout(self) -> None:
        """Confusion rows should be true classes, columns predictions with the sentinel last."""
        report = score(_predictions([A, B, B, U]), _truth([A, A, B, C]))
        frame = report.confusion_frame()

        assert frame.shape == (9, 10)
        assert frame.loc["Aminoglycosides", "Aminoglycosides"] == 1
        assert frame.loc["Aminoglycosides", "Betalactams"] == 1
        assert frame.loc["Tetracyclines", "UNCLASSIFIED"] == 1
        assert int(frame.to_numpy().sum()) == 4

    def test_all_unclassified(self) -> None:
        """Only UNCLASSIFIED predictions should score zero everywhere."""
        report = score(_predictions([U, U, U]), _truth([A, B, C]))

        assert report.accuracy == 0.0
        assert report.unclassified_rate == 1.0
        for table in (report.precision, report.recall, report.f1):
            assert all(value == 0.0 for value in table.values())

    def test_perfect(self) -> None:
        """Predictions equal to truth should score one everywhere."""
        report = score(_predictions([A, B, C, C]), _truth([A, B, C, C]))

        assert report.accuracy == 1.0
        assert report.unclassified_rate == 0.0
        for table in (report.precision, report.recall, report.f1):
            assert all(value == pytest.approx(1.0) for value in table.values())

    def test_multi_label_truth(self) -> None:
        """Predicting any one of several true classes should count as correct."""
        both = {C, DrugClass.FLUOROQUINOLONES}
        report = score(_predictions([C, DrugClass.FLUOROQUINOLONES]), _truth([both, both]))
        assert report.accuracy == 1.0

    def test_missing_truth_names_record(self) -> None:
        """A prediction without ground truth should raise naming the record."""
        with pytest.raises(MissingGroundTruth, match="r1"):
            score(_predictions([A, B]), _truth([A]))

    def test_empty_predictions(self) -> None:
        """Scoring nothing should raise ValueError."""
        with pytest.raises(ValueError, match="empty"):
            score([], {})

    def test_report_serialises(self) -> None:
        """to_dict should be JSON-serialisable."""
        report = score(_predictions([A, B]), _truth([A, B]), label="m")
        assert json.loads(json.dumps(report.to_dict()))["label"] == "m"


class TestScoreCrossmapped:
    """Tests for accuracy in a second label scheme."""

    def test_exact_matches(self, label_map: LabelMap) -> None:
        """Predictions whose preferred label is in the target truth should score one."""
        predictions = _predictions([DrugClass.SULFONAMIDES, DrugClass.MLS])
        truth = {"r0": {"sulfonamide antibiotic"}, "r1": {"Macrolide Antibiotic"}}
        report = score_crossmapped(predictions, truth, label_map)
        assert report.accuracy == 1.0

    def test_any_target_label_of_the_class_matches(self, label_map: LabelMap) -> None:
        """A class prediction should match every target label that maps to it."""
        predictions = _predictions([DrugClass.BETALACTAMS] * 4 + [DrugClass.MLS])
        truth = {
            "r0": {"penam"},
            "r1": {"Carbapenem"},
            "r2": {"monobactam"},
            "r3": {"cephalosporin"},
            "r4": {"lincosamide antibiotic"},
        }
        report = score_crossmapped(predictions, truth, label_map)
        assert (report.n_correct, report.accuracy) == (5, 1.0)

    def test_card_truth_fixture_betalactams(
        self, label_map: LabelMap, card_truth_tsv: Path
    ) -> None:
        """Betalactams predictions for the blaTEM records should all be correct."""
        truth = truth_from_table(pd.read_csv(card_truth_tsv, sep="\t", dtype=str))
        ids = sorted(k for k in truth if "blaTEM" in k)
        predictions = [
            Prediction(record_id=i, predicted_class=DrugClass.BETALACTAMS, counts={}) for i in ids
        ]
        report = score_crossmapped(predictions, truth, label_map)
        assert len(ids) == 3
        assert report.accuracy == 1.0

    def test_partial_profile(self, label_map: LabelMap) -> None:
        """Three correct of thirteen should give 3/13."""
        predictions = _predictions([DrugClass.SULFONAMIDES] * 3 + [DrugClass.BETALACTAMS] * 10)
        truth = {
            f"r{n}": {"sulfonamide antibiotic" if n < 3 else "aminoglycoside antibiotic"}
            for n in range(13)
        }
        report = score_crossmapped(predictions, truth, label_map)
        assert report.n_correct == 3
        assert report.accuracy == pytest.approx(0.2308, abs=1e-4)

    def test_unknown_target_labels_never_match(self, label_map: LabelMap) -> None:
        """Target labels missing from the table should be ignored, not raise."""
        predictions = _predictions([DrugClass.BETALACTAMS, DrugClass.BETALACTAMS])
        truth = {"r0": {"not a card family"}, "r1": {"not a card family", "penam"}}
        report = score_crossmapped(predictions, truth, label_map)
        assert report.n_correct == 1

    def test_no_target_equivalent(self, label_map: LabelMap) -> None:
        """Classes without a target label should score zero and be counted."""
        predictions = _predictions([DrugClass.MULTI_DRUG_RESISTANCE] * 4)
        truth = {f"r{n}": {"tetracycline antibiotic"} for n in range(4)}
        report = score_crossmapped(predictions, truth, label_map)
        assert report.accuracy == 0.0
        assert report.n_no_target == 4

    def test_unclassified_counted(self, label_map: LabelMap) -> None:
        """UNCLASSIFIED predictions should be wrong and counted separately."""
        report = score_crossmapped(_predictions([U]), {"r0": {"penam"}}, label_map)
        assert (report.n_unclassified, report.n_correct) == (1, 0)

    def test_truth_from_table(self, card_truth_tsv: Path) -> None:
        """Multi-row records should collect every label."""
        truth = truth_from_table(pd.read_csv(card_truth_tsv, sep="\t", dtype=str))
        acrb = next(v for k, v in truth.items() if k.startswith("MEG_225|"))
        assert acrb == {"fluoroquinolone antibiotic", "tetracycline antibiotic"}


class TestGrouping:
    """Tests for report row grouping."""

    def test_groups_by_model_and_template(self) -> None:
        """Rows should be keyed 'model (template label)'."""
        fp = BackendFingerprint(kind=BackendKind.MOCK, model_name="mock-amr", temperature=0.0)
        predictions = _predictions(
            [A, B], backend_fingerprint=fp, template_kind=TemplateKind.SEQUENCE_ONLY
        ) + [
            Prediction(
                record_id="r9",
                predicted_class=C,
                counts={},
                backend_fingerprint=fp,
                template_kind=TemplateKind.BLAST_AUGMENTED,
            )
        ]
        groups = group_predictions(predictions)
        assert list(groups) == ["mock-amr (Base Model)", "mock-amr (Blastn)"]
        assert len(groups["mock-amr (Base Model)"]) == 2


class TestTables:
    """Tests for table rendering."""

    def test_unclassified_rate_layout(self) -> None:
        """The rate table should have two columns and a percentage."""
        report = score(_predictions([A, U, U, U]), _truth([A, B, C, C]), label="gpt (Base Model)")
        table = emit_tables([report], Layout.UNCLASSIFIED_RATE, manifest_digest="abc")
        assert table.text.splitlines() == [
            "# run_manifest_digest: abc",
            "Model | Unclassified Rate",
            "gpt (Base Model) | 75%",
        ]

    def test_full_metrics_layout(self) -> None:
        """The metrics table should have five columns at four decimals."""
        report = score(_predictions([A, B, B, U]), _truth([A, A, B, C]), label="m")
        table = emit_tables([report], Layout.FULL_METRICS)
        lines = table.text.splitlines()
        assert "# averaging: WEIGHTED" in lines
        assert lines[-2] == "Model | Accuracy | Precision | Recall | F1 Score"
        assert lines[-1] == "m | 0.5000 | 0.6250 | 0.5000 | 0.5000"

    def test_csv_carries_digest(self) -> None:
        """The CSV should include the manifest digest on every row."""
        report = score(_predictions([A]), _truth([A]), label="m")
        csv = emit_tables([report], Layout.UNCLASSIFIED_RATE, manifest_digest="abc").csv
        assert csv == "Model,Unclassified Rate,run_manifest_digest\nm,0%,abc\n"

    def test_cross_label_layout(self, label_map: LabelMap) -> None:
        """The cross-label table should have a model and an accuracy column."""
        report = score_crossmapped(
            _predictions([DrugClass.MLS]), {"r0": {"macrolide antibiotic"}}, label_map, label="m"
        )
        table = emit_tables([report], Layout.CROSS_LABEL)
        assert table.text.splitlines()[-2:] == ["Model | Accuracy", "m | 1.0000"]

    def test_empty_reports(self) -> None:
        """Rendering nothing should raise ValueError."""
        with pytest.raises(ValueError):
            emit_tables([], Layout.FULL_METRICS)

    def test_write_tables(self, tmp_path: Path) -> None:
        """Each table should be written as .txt and .csv."""
        report = score(_predictions([A]), _truth([A]), label="m")
        layouts = (Layout.UNCLASSIFIED_RATE, Layout.FULL_METRICS)
        tables = [emit_tables([report], layout) for layout in layouts]
        written = write_tables(tables, tmp_path)
        assert sorted(p.name for p in written) == [
            "full_metrics.csv",
            "full_metrics.txt",
            "unclassified_rate.csv",
            "unclassified_rate.txt",
        ]

    def test_format_rate_rounds(self) -> None:
        """Rates should render as whole percentages."""
        assert format_rate(1 / 3) == "33%"
        assert format_rate(1.0) == "100%"


class TestManifest:
    """Tests for run manifests."""

    def test_digest_ignores_key_order(self) -> None:
        """Equal provenance in any key order should hash the same."""
        assert provenance_digest({"a": 1, "b": [1, 2]}) == provenance_digest({"b": [1, 2], "a": 1})
        assert provenance_digest({"a": 1}) != provenance_digest({"a": 2})

    def test_write_read(self, tmp_path: Path) -> None:
        """A written manifest should read back and verify."""
        manifest = build_manifest({"inputs": {"q": "x"}}, {"records": 3})
        path = write_manifest(manifest, tmp_path)
        assert read_manifest(path) == manifest

    def test_tampered_manifest(self, tmp_path: Path) -> None:
        """Editing provenance after writing should fail verification."""
        path = write_manifest(build_manifest({"seed": 7}), tmp_path)
        data = json.loads(path.read_text())
        data["provenance"]["seed"] = 8
        path.write_text(json.dumps(data))
        with pytest.raises(ValueError, match="digest does not match"):
            read_manifest(path)


class TestScoreOracle:
    """Seeded random prediction sets against brute-force counting."""

    @staticmethod
    def _random_case(seed: int) -> tuple[list[Prediction], dict[str, frozenset[DrugClass]]]:
        rng = np.random.default_rng(seed)
        classes = list(SUBSTANTIVE_CLASSES)
        n = int(rng.integers(1, 60))
        truth: dict[str, frozenset[DrugClass]] = {}
        predictions = []
        for i in range(n):
            k = int(rng.integers(1, 3))
            picks = rng.choice(len(classes), size=k, replace=False)
            truth[f"r{i}"] = frozenset(classes[int(j)] for j in picks)
            label = classes[int(rng.integers(len(classes)))] if rng.random() > 0.2 else U
            predictions.append(Prediction(record_id=f"r{i}", predicted_class=label, counts={}))
        return predictions, truth

    @pytest.mark.parametrize("seed", range(1000))
    def test_matches_brute_force(self, seed: int) -> None:
        """Accuracy, weighted and macro scores and the confusion should match hand counting."""
        predictions, truth = self._random_case(seed)
        report = score(predictions, truth)

        n = len(predictions)
        pairs = []
        for p in predictions:
            true = truth[p.record_id]
            effective = p.predicted_class if p.predicted_class in true else primary_class(true)
            pairs.append((effective, p.predicted_class))

        correct = sum(t == q for t, q in pairs)
        assert report.accuracy == pytest.approx(correct / n, abs=1e-12)
        assert report.recall[Averaging.WEIGHTED] == pytest.approx(report.accuracy, abs=1e-12)

        present = {t for t, _ in pairs} | {q for _, q in pairs if q is not U}
        per_class = []
        for c in present:
            support = sum(t == c for t, _ in pairs)
            predicted = sum(q == c for _, q in pairs)
            tp = sum(t == c and q == c for t, q in pairs)
            prec = tp / predicted if predicted else 0.0
            rec = tp / support if support else 0.0
            f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
            per_class.append((support, prec, rec, f1))

        def weighted(col: int) -> float:
            return sum(row[0] / n * row[col] for row in per_class)

        def macro(col: int) -> float:
            return sum(row[col] for row in per_class) / len(per_class)

        assert report.precision[Averaging.WEIGHTED] == pytest.approx(weighted(1), abs=1e-12)
        assert report.f1[Averaging.WEIGHTED] == pytest.approx(weighted(3), abs=1e-12)
        assert report.precision[Averaging.MACRO] == pytest.approx(macro(1), abs=1e-12)
        assert report.recall[Averaging.MACRO] == pytest.approx(macro(2), abs=1e-12)
        assert report.f1[Averaging.MACRO] == pytest.approx(macro(3), abs=1e-12)

        frame = report.confusion_frame()
        for t in SUBSTANTIVE_CLASSES:
            for q in DrugClass:
                expected = sum(a == t and b == q for a, b in pairs)
                assert frame.loc[t.value, q.value] == expected
        assert int(frame.to_numpy().sum()) == n
