"""Canonical drug-class label space and source-database label harmonisation."""

from amr_drugclass_pipeline.labelspace.classes import (
    ALL_CLASSES,
    SUBSTANTIVE_CLASSES,
    DrugClass,
    UnknownCanonicalClass,
    canonical_order,
    class_list_text,
    primary_class,
)
from amr_drugclass_pipeline.labelspace.labelmap import (
    DuplicateMapping,
    LabelEntry,
    LabelMap,
    NoTargetEquivalent,
    UnmappedLabel,
    canonicalize,
    canonicalize_all,
    crossmap,
    load_label_map,
    load_synonyms,
)

__all__ = [
    "ALL_CLASSES",
    "SUBSTANTIVE_CLASSES",
    "DrugClass",
    "DuplicateMapping",
    "LabelEntry",
    "LabelMap",
    "NoTargetEquivalent",
    "UnknownCanonicalClass",
    "UnmappedLabel",
    "canonical_order",
    "canonicalize",
    "canonicalize_all",
    "class_list_text",
    "crossmap",
    "load_label_map",
    "load_synonyms",
    "primary_class",
]
