"""The canonical drug-class label space.

Nine substantive classes in a fixed order plus the UNCLASSIFIED sentinel.
The order is the one prompts enumerate and the one used to break ties when
a single class has to stand in for a multi-label record.
"""

from __future__ import annotations

from enum import Enum
from typing import Iterable


class UnknownCanonicalClass(ValueError):
    """Raised for a class name outside the canonical label space."""

    def __init__(self, name: str) -> None:
        super().__init__(
            f"Unknown canonical class: {name!r}. "
            f"Available: {[c.value for c in SUBSTANTIVE_CLASSES]}"
        )
        self.name = name


class DrugClass(str, Enum):
    SULFONAMIDES = "Sulfonamides"
    AMINOGLYCOSIDES = "Aminoglycosides"
    BETALACTAMS = "Betalactams"
    GLYCOPEPTIDES = "Glycopeptides"
    TETRACYCLINES = "Tetracyclines"
    PHENICOL = "Phenicol"
    FLUOROQUINOLONES = "Fluoroquinolones"
    MLS = "MLS"
    MULTI_DRUG_RESISTANCE = "Multi-drug_resistance"
    UNCLASSIFIED = "UNCLASSIFIED"

    @property
    def is_substantive(self) -> bool:
        return self is not DrugClass.UNCLASSIFIED

    @classmethod
    def parse(cls, name: str) -> DrugClass:
        """Look up a class by its exact canonical spelling (sentinel included)."""
        try:
            return cls(name.strip())
        except ValueError:
            raise UnknownCanonicalClass(name) from None


SUBSTANTIVE_CLASSES: tuple[DrugClass, ...] = tuple(
    c for c in DrugClass if c.is_substantive
)
ALL_CLASSES: tuple[DrugClass, ...] = tuple(DrugClass)

_ORDER = {c: i for i, c in enumerate(ALL_CLASSES)}


def canonical_order(classes: Iterable[DrugClass]) -> list[DrugClass]:
    """Sort classes into canonical order, dropping duplicates."""
    return sorted(set(classes), key=_ORDER.__getitem__)


def primary_class(classes: Iterable[DrugClass]) -> DrugClass:
    """First class in canonical order; UNCLASSIFIED for an empty set."""
    ordered = canonical_order(classes)
    return ordered[0] if ordered else DrugClass.UNCLASSIFIED


def class_list_text() -> str:
    """Comma-space joined substantive class names, in canonical order."""
    return ", ".join(c.value for c in SUBSTANTIVE_CLASSES)
