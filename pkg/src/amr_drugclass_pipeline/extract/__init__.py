"""Label extraction from verbose model replies."""

from amr_drugclass_pipeline.extract.extractor import (
    LlmBackedExtractor,
    Prediction,
    extract_batch,
    extract_label,
    read_predictions,
    write_predictions,
)
from amr_drugclass_pipeline.extract.lexicon import (
    LexiconConflict,
    SynonymLexicon,
    lexicon_from_label_map,
    load_lexicon,
)

__all__ = [
    "LexiconConflict",
    "LlmBackedExtractor",
    "Prediction",
    "SynonymLexicon",
    "extract_batch",
    "extract_label",
    "lexicon_from_label_map",
    "load_lexicon",
    "read_predictions",
    "write_predictions",
]
