"""Prompt rendering for the sequence-only and alignment-augmented questions."""

from amr_drugclass_pipeline.promptgen.templates import (
    EmptySequence,
    PromptJob,
    TemplateKind,
    build_job,
    render_blast_prompt,
    render_hit_list,
    render_sequence_prompt,
    write_jobs_jsonl,
)

__all__ = [
    "EmptySequence",
    "PromptJob",
    "TemplateKind",
    "build_job",
    "render_blast_prompt",
    "render_hit_list",
    "render_sequence_prompt",
    "write_jobs_jsonl",
]
