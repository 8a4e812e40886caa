"""Unit tests for the synonym lexicon and the majority-vote extractor."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from amr_drugclass_pipeline.extract import (
    LexiconConflict,
    LlmBackedExtractor,
    Prediction,
    SynonymLexicon,
    extract_batch,
    extract_label,
    lexicon_from_label_map,
    read_predictions,
    write_predictions,
)
from amr_drugclass_pipeline.extract.extractor import record_id_of, template_of
from amr_drugclass_pipeline.labelspace import SUBSTANTIVE_CLASSES, DrugClass, LabelMap
from amr_drugclass_pipeline.llmclient import (
    BackendConfig,
    BackendFingerprint,
    BackendKind,
    LlmClient,
    ModelReply,
    ResponseCache,
)
from amr_drugclass_pipeline.promptgen import TemplateKind

FINGERPRINT = BackendFingerprint(kind=BackendKind.MOCK, model_name="mock-amr", temperature=0.0)

DOMINANT = "The sequence confers resistance to beta-lactam antibiotics; betalactams are indicated."
TIE = "Could be Tetracyclines or Aminoglycosides."
NOTHING = "Insufficient evidence to determine resistance."


def _reply(text: str, job_id: str = "r1:BLAST_AUGMENTED") -> ModelReply:
    return ModelReply(job_id=job_id, raw_text=text, fingerprint=FINGERPRINT, latency_ms=1.0)


class TestSynonymLexicon:
    """Tests for surface-form matching."""

    def test_canonical_names_always_present(self) -> None:
        """An empty lexicon should still know the nine class names."""
        lexicon = SynonymLexicon()
        assert len(lexicon) == 9
        assert "multi-drug_resistance" in lexicon

    def test_case_insensitive(self, lexicon: SynonymLexicon) -> None:
        """Mentions should match regardless of case."""
        assert lexicon.mentions("TETRACYCLINE and Macrolide") == [
            DrugClass.TETRACYCLINES,
            DrugClass.MLS,
        ]

    def test_longest_form_wins(self, lexicon: SynonymLexicon) -> None:
        """beta-lactamase should count once, not as beta-lactam plus a tail."""
        assert lexicon.mentions("a beta-lactamase gene") == [DrugClass.BETALACTAMS]

    def test_no_match_inside_words(self, lexicon: SynonymLexicon) -> None:
        """Forms glued to other letters should not count."""
        assert lexicon.mentions("antitetracyclineX sul10") == []

    def test_no_match_inside_identifiers(self, lexicon: SynonymLexicon) -> None:
        """Underscores should glue like letters do."""
        assert lexicon.mentions("MLS_x x_tetracycline sul1_2") == []
        assert lexicon.mentions("MLS, (tetracycline)") == [DrugClass.MLS, DrugClass.TETRACYCLINES]

    def test_unicode_form(self, lexicon: SynonymLexicon) -> None:
        """The β-lactam spelling should map to Betalactams."""
        assert lexicon.mentions("β-lactam resistance") == [DrugClass.BETALACTAMS]

    def test_conflict_rejected(self) -> None:
        """One surface form for two classes should raise LexiconConflict."""
        with pytest.raises(LexiconConflict):
            SynonymLexicon([("efflux", DrugClass.MLS), ("EFFLUX", DrugClass.TETRACYCLINES)])

    def test_from_label_map(self, label_map: LabelMap, lexicon: SynonymLexicon) -> None:
        """A lexicon built from the label map's synonyms should equal the packaged one."""
        assert lexicon_from_label_map(label_map).digest() == lexicon.digest()


class TestExtractLabel:
    """Tests for majority-vote label extraction."""

    def test_dominant_class(self, lexicon: SynonymLexicon) -> None:
        """Two Betalactams mentions and nothing else should win."""
        label, counts = extract_label(_reply(DOMINANT), lexicon)
        assert label is DrugClass.BETALACTAMS
        assert counts[DrugClass.BETALACTAMS] == 2
        assert sum(counts.values()) == 2

    def test_tie_is_unclassified(self, lexicon: SynonymLexicon) -> None:
        """A tie at the top should be UNCLASSIFIED."""
        label, counts = extract_label(TIE, lexicon)
        assert label is DrugClass.UNCLASSIFIED
        assert counts[DrugClass.TETRACYCLINES] == counts[DrugClass.AMINOGLYCOSIDES] == 1

    def test_no_mentions_is_unclassified(self, lexicon: SynonymLexicon) -> None:
        """A reply naming no class should be UNCLASSIFIED."""
        label, counts = extract_label(NOTHING, lexicon)
        assert label is DrugClass.UNCLASSIFIED
        assert set(counts) == set(SUBSTANTIVE_CLASSES)

    def test_minority_mentions_lose(self, lexicon: SynonymLexicon) -> None:
        """A strict majority should win even with other classes mentioned."""
        text = "Not a tetracycline gene. It hydrolyses penicillins and cephalosporins."
        assert extract_label(text, lexicon)[0] is DrugClass.BETALACTAMS

    def test_sentence_order_does_not_matter(self, lexicon: SynonymLexicon) -> None:
        """Shuffling the sentences of a reply should keep its label and counts."""
        rng = np.random.default_rng(5)
        classes = list(SUBSTANTIVE_CLASSES)
        for _ in range(300):
            sentences = []
            for _ in range(int(rng.integers(1, 7))):
                picks = rng.choice(len(classes), size=int(rng.integers(0, 3)))
                named = " and ".join(classes[int(i)].value for i in picks) or "nothing"
                sentences.append(f"The gene may involve {named}.")
            original = extract_label(" ".join(sentences), lexicon)
            rng.shuffle(sentences)
            assert extract_label(" ".join(sentences), lexicon) == original

    @pytest.mark.parametrize("text", [DOMINANT, TIE, NOTHING])
    def test_unrelated_text_does_not_matter(self, lexicon: SynonymLexicon, text: str) -> None:
        """Appending text with no lexicon matches should keep the label and counts."""
        tail = " The sample came from a hospital drain; sequencing depth was adequate."
        assert lexicon.mentions(tail) == []
        assert extract_label(text + tail, lexicon) == extract_label(text, lexicon)


class TestExtractBatch:
    """Tests for batch extraction into predictions."""

    def test_empty(self, lexicon: SynonymLexicon) -> None:
        """No replies should give no predictions."""
        assert extract_batch([], lexicon) == []

    def test_mixed_batch(self, lexicon: SynonymLexicon) -> None:
        """The three reference replies should give the expected labels in order."""
        replies = [_reply(DOMINANT, "a:SEQUENCE_ONLY"), _reply(TIE, "b:SEQUENCE_ONLY"), _reply(NOTHING, "c:SEQUENCE_ONLY")]
        predictions = extract_batch(replies, lexicon)
        assert [p.predicted_class for p in predictions] == [
            DrugClass.BETALACTAMS,
            DrugClass.UNCLASSIFIED,
            DrugClass.UNCLASSIFIED,
        ]
        assert [p.record_id for p in predictions] == ["a", "b", "c"]
        assert predictions[0].template_kind is TemplateKind.SEQUENCE_ONLY
        assert predictions[0].backend_fingerprint == FINGERPRINT

    def test_planted_majorities_recovered(self, lexicon: SynonymLexicon) -> None:
        """Synthetic replies with a planted majority should be labelled exactly."""
        rng = np.random.default_rng(99)
        classes = list(SUBSTANTIVE_CLASSES)
        replies, planted = [], []
        for n in range(1000):
            winner = classes[int(rng.integers(len(classes)))]
            others = [c for c in classes if c is not winner]
            decoy = others[int(rng.integers(len(others)))]
            k = int(rng.integers(1, 4))
            words = [winner.value] * (k + 1) + [decoy.value] * k + ["filler"] * 5
            rng.shuffle(words)
            replies.append(_reply(" ".join(words), f"r{n}:SEQUENCE_ONLY"))
            planted.append(winner)
        predictions = extract_batch(replies, lexicon)
        assert [p.predicted_class for p in predictions] == planted

    def test_job_id_parsing(self) -> None:
        """Record ids may themselves contain colons."""
        assert record_id_of("NC_1:2|x:BLAST_AUGMENTED") == "NC_1:2|x"
        assert template_of("NC_1:2|x:BLAST_AUGMENTED") is TemplateKind.BLAST_AUGMENTED
        assert record_id_of("plain") == "plain"
        assert template_of("plain") is None


class TestPredictionsFile:
    """Tests for predictions persistence."""

    def test_write_read(self, tmp_path: Path, lexicon: SynonymLexicon) -> None:
        """Predictions should survive a write/read cycle unchanged."""
        predictions = extract_batch([_reply(DOMINANT), _reply(TIE, "r2:BLAST_AUGMENTED")], lexicon)
        path = tmp_path / "predictions.jsonl"
        assert write_predictions(predictions, path) == 2
        assert read_predictions(path) == predictions

    def test_missing_file(self, tmp_path: Path) -> None:
        """Reading a missing file should raise FileNotFoundError."""
        with pytest.raises(FileNotFoundError, match="Predictions file not found"):
            read_predictions(tmp_path / "none.jsonl")

    def test_prediction_is_frozen(self) -> None:
        """Predictions should be immutable."""
        p = Prediction(record_id="r", predicted_class=DrugClass.MLS, counts={})
        with pytest.raises(Exception):
            p.record_id = "other"  # type: ignore[misc]


class TestLlmBackedExtractor:
    """Tests for the optional backend-assisted extractor."""

    async def test_counts_restated_answer(
        self, tmp_path: Path, lexicon: SynonymLexicon, mock_backend_config: BackendConfig
    ) -> None:
        """The restated answer, not the original reply, should be counted."""

        class Restater:
            async def generate(self, prompt: str) -> str:
                return "Aminoglycosides"

        with ResponseCache(tmp_path / "cache.jsonl") as cache:
            async with LlmClient(mock_backend_config, cache, backend=Restater()) as client:
                label, _ = await LlmBackedExtractor(client, lexicon).extract(_reply(TIE))
        assert label is DrugClass.AMINOGLYCOSIDES
