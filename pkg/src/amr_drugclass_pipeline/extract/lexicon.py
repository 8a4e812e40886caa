"""Surface-form lexicon used to count class mentions in model replies."""

from __future__ import annotations

import hashlib
import logging
import re
from pathlib import Path
from typing import Iterable

from amr_drugclass_pipeline.labelspace.classes import (
    SUBSTANTIVE_CLASSES,
    DrugClass,
    UnknownCanonicalClass,
)
from amr_drugclass_pipeline.labelspace.labelmap import LabelMap, load_synonyms

logger = logging.getLogger(__name__)

# a mention must not be glued to letters, digits or underscores on either side
_LEFT = r"(?<![A-Za-z0-9_])"
_RIGHT = r"(?![A-Za-z0-9_])"


class LexiconConflict(ValueError):
    def __init__(self, surface: str, first: DrugClass, second: DrugClass) -> None:
        super().__init__(
            f"Surface form {surface!r} maps to both {first.value} and {second.value}"
        )
        self.surface = surface


class SynonymLexicon:
    """Case-insensitive surface form -> class table with one compiled matcher.

    Canonical class names are always present. Alternatives are tried longest
    first so "beta-lactamase" is one mention, not a "beta-lactam" plus tail.
    """

    def __init__(self, entries: Iterable[tuple[str, DrugClass]] = ()) -> None:
        self._forms: dict[str, DrugClass] = {}
        for drug_class in SUBSTANTIVE_CLASSES:
            self._add(drug_class.value, drug_class)
        for surface, drug_class in entries:
            self._add(surface, drug_class)
        alternatives = sorted(self._forms, key=lambda s: (-len(s), s))
        self._pattern = re.compile(
            _LEFT + "(?:" + "|".join(re.escape(s) for s in alternatives) + ")" + _RIGHT,
            re.IGNORECASE,
        )

    def _add(self, surface: str, drug_class: DrugClass) -> None:
        if drug_class is DrugClass.UNCLASSIFIED:
            raise UnknownCanonicalClass(drug_class.value)
        key = surface.strip().casefold()
        if not key:
            return
        existing = self._forms.get(key)
        if existing is not None and existing is not drug_class:
            raise LexiconConflict(surface, existing, drug_class)
        self._forms[key] = drug_class

    @property
    def pattern(self) -> re.Pattern[str]:
        return self._pattern

    def classify_form(self, text: str) -> DrugClass | None:
        return self._forms.get(text.casefold())

    def mentions(self, text: str) -> list[DrugClass]:
        """Class of every non-overlapping mention, left to right."""
        found = []
        for match in self._pattern.finditer(text):
            drug_class = self.classify_form(match.group(0))
            if drug_class is not None:
                found.append(drug_class)
        return found

    def digest(self) -> str:
        h = hashlib.sha256()
        for surface in sorted(self._forms):
            h.update(f"{surface}\t{self._forms[surface].value}\n".encode())
        return h.hexdigest()

    def __len__(self) -> int:
        return len(self._forms)

    def __contains__(self, surface: object) -> bool:
        return isinstance(surface, str) and surface.casefold() in self._forms


def load_lexicon(path: Path) -> SynonymLexicon:
    lexicon = SynonymLexicon(load_synonyms(path))
    logger.info("Loaded lexicon with %d surface forms from %s", len(lexicon), path)
    return lexicon


def lexicon_from_label_map(label_map: LabelMap) -> SynonymLexicon:
    return SynonymLexicon(label_map.synonyms)
