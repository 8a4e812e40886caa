"""Pipeline orchestration: FASTA -> (search) -> prompts -> replies -> labels -> reports.

Each stage lives in its own subpackage; the functions here compose them and
own the files a run writes. Batch stages never stop on a single record:
dropped sequences and failed jobs are counted and logged.

Files written by a classify run (all under ``output_dir``):
    records.jsonl        the records classified, with labels and split
    prompts.jsonl        rendered prompt jobs
    hits.jsonl           alignment hits (alignment-augmented runs only)
    predictions.jsonl    one extracted label per successful job
    failures.jsonl       jobs that got no reply
    run_manifest.json    provenance, its digest, and outcome counts
"""

from __future__ import annotations

import asyncio
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import httpx

from amr_drugclass_pipeline.align import (
    Aligner,
    AlignmentHit,
    EmptyReferenceSet,
    WordIndex,
    build_index,
    load_index,
    save_index,
    search_all,
    write_hits_jsonl,
)
from amr_drugclass_pipeline.config import RunConfig, settings
from amr_drugclass_pipeline.evalkit import (
    CrossLabelReport,
    EvalReport,
    Layout,
    RenderedTable,
    build_manifest,
    emit_tables,
    file_digest,
    group_predictions,
    provenance_digest,
    score,
    score_crossmapped,
    truth_from_table,
    write_manifest as write_run_manifest,
    write_tables,
)
from amr_drugclass_pipeline.extract import (
    Prediction,
    SynonymLexicon,
    extract_batch,
    load_lexicon,
    read_predictions,
    write_predictions,
)
from amr_drugclass_pipeline.labelspace import (
    DrugClass,
    LabelMap,
    canonicalize,
    canonicalize_all,
    load_label_map,
    primary_class,
)
from amr_drugclass_pipeline.llmclient import (
    BackendKind,
    JobFailure,
    LlmClient,
    ModelReply,
    ResponseCache,
)
from amr_drugclass_pipeline.llmclient.backends import Backend
from amr_drugclass_pipeline.promptgen import PromptJob, TemplateKind, build_job, write_jobs_jsonl
from amr_drugclass_pipeline.seqio import (
    Dataset,
    PreprocessReport,
    SeqRecord,
    SourceDB,
    Split,
    attach_labels,
    load_labels_table,
    preprocess,
    read_fasta,
    read_manifest,
    split,
    write_manifest,
)

logger = logging.getLogger(__name__)


@dataclass
class ClassifyReport:
    """Outcome of one classify run."""

    n_input: int
    n_records: int
    n_jobs: int
    n_predictions: int
    n_failures: int
    n_unclassified: int
    n_truncated: int
    manifest_digest: str
    output_dir: Path
    preprocess_report: PreprocessReport
    failures: list[JobFailure] = field(default_factory=list)

    @property
    def predictions_path(self) -> Path:
        return self.output_dir / "predictions.jsonl"


# Index


def run_index(references: Path, out_path: Path, word_size: int = 11) -> WordIndex:
    """Build and persist a word index from a reference FASTA."""
    records, _ = preprocess(read_fasta(references))
    index = build_index(records, word_size)
    save_index(index, out_path)
    return index


# Datasets and splits


def load_dataset(
    fasta: Path, source_db: SourceDB, labels_table: Path | None = None
) -> tuple[list[SeqRecord], PreprocessReport]:
    records = read_fasta(fasta, source_db=source_db)
    if labels_table is not None:
        records = attach_labels(records, load_labels_table(labels_table))
    return preprocess(records)


def stratum_of(label_map: LabelMap) -> Callable[[SeqRecord], str]:
    """Split stratum: the primary canonical class of a record."""

    def key(record: SeqRecord) -> str:
        return primary_class(canonicalize(record, label_map)).value

    return key


def run_split(
    fasta: Path,
    out_path: Path,
    label_map: LabelMap,
    *,
    source_db: SourceDB = SourceDB.MEGARES,
    labels_table: Path | None = None,
    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 7,
) -> Dataset:
    records, _ = load_dataset(fasta, source_db, labels_table)
    dataset = split(Dataset(records=tuple(records)), fractions, seed, stratum_of(label_map))
    write_manifest(dataset, out_path)
    return dataset


def select_subset(records: list[SeqRecord], cfg: RunConfig, label_map: LabelMap) -> Dataset:
    """Split the records and keep only the configured bucket (or all)."""
    dataset = Dataset(records=tuple(records))
    if cfg.split.subset == "all":
        return dataset
    dataset = split(dataset, cfg.split.fractions, cfg.split.seed, stratum_of(label_map))
    keep = dataset.subset(Split(cfg.split.subset.upper()))
    logger.info("Keeping %d records from split bucket %s", len(keep), cfg.split.subset)
    assignment = {r.id: Split(cfg.split.subset.upper()) for r in keep}
    return Dataset(records=tuple(keep), split_assignment=assignment, seed=cfg.split.seed)


# Alignment


def load_aligner(cfg: RunConfig) -> Aligner | None:
    """Aligner over the configured index or reference FASTA; None when there is none."""
    if cfg.dataset.index is not None:
        index = load_index(cfg.dataset.index)
    elif cfg.dataset.references is not None:
        refs, _ = preprocess(read_fasta(cfg.dataset.references, cfg.dataset.reference_db))
        try:
            index = build_index(refs, cfg.aligner.word_size)
        except EmptyReferenceSet:
            logger.warning("Reference set is empty; prompts will carry no hits")
            return None
    else:
        logger.warning("No references configured; prompts will carry no hits")
        return None
    return Aligner(
        index, cfg.aligner.scheme(), k=cfg.aligner.k, hsp_cutoff=cfg.aligner.hsp_cutoff
    )


def build_jobs(
    records: Sequence[SeqRecord], cfg: RunConfig, aligner: Aligner | None
) -> tuple[list[PromptJob], dict[str, list[AlignmentHit]]]:
    kind = cfg.prompt.template
    hits: dict[str, list[AlignmentHit]] = {}
    if kind is TemplateKind.BLAST_AUGMENTED and aligner is not None:
        hits = search_all(
            aligner, records, cfg.aligner.top_k, cfg.dataset.exclude_self_hits
        )
    jobs = [
        build_job(
            rec,
            kind,
            hits.get(rec.id, []),
            max_sequence_length=cfg.prompt.max_sequence_length,
            max_alignment_length=cfg.prompt.max_alignment_length,
        )
        for rec in records
    ]
    return jobs, hits


# Provenance


def with_default_mock_rules(cfg: RunConfig) -> RunConfig:
    """Mock backends without a rule table use the packaged one."""
    if cfg.backend.kind is not BackendKind.MOCK or cfg.backend.mock_rules_path is not None:
        return cfg
    backend = cfg.backend.model_copy(update={"mock_rules_path": settings.mock_rules_path})
    return cfg.model_copy(update={"backend": backend})


def build_provenance(
    cfg: RunConfig,
    label_map: LabelMap,
    lexicon: SynonymLexicon,
    aligner: Aligner | None,
) -> dict[str, Any]:
    """Everything that determines a run's predictions, and nothing else."""
    inputs: dict[str, Any] = {}
    for role, path in (
        ("queries", cfg.dataset.queries),
        ("labels_table", cfg.dataset.labels_table),
        ("references", cfg.dataset.references),
        ("index", cfg.dataset.index),
        ("mock_rules", cfg.backend.mock_rules_path),
    ):
        if path is not None:
            inputs[role] = {"name": path.name, "sha256": file_digest(path)}
    backend = cfg.backend.model_dump(mode="json", exclude={"mock_rules_path", "api_key_env"})
    return {
        "inputs": inputs,
        "dataset": {
            "query_db": cfg.dataset.query_db.value,
            "reference_db": cfg.dataset.reference_db.value,
            "exclude_self_hits": cfg.dataset.exclude_self_hits,
        },
        "aligner": {
            **cfg.aligner.model_dump(mode="json"),
            "lambda": aligner.lambda_ if aligner else None,
        },
        "prompt": cfg.prompt.model_dump(mode="json"),
        "split": cfg.split.model_dump(mode="json"),
        "backend": backend,
        "backend_fingerprint": cfg.backend.fingerprint.model_dump(mode="json"),
        "label_map_sha256": label_map.digest(),
        "lexicon_sha256": lexicon.digest(),
    }


def _write_jsonl(rows: Sequence[dict[str, Any]], path: Path) -> None:
    with path.open("w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, sort_keys=True) + "\n")


# Orchestrators


def run_classify(
    cfg: RunConfig,
    *,
    transport: httpx.AsyncBaseTransport | None = None,
    backend: Backend | None = None,
) -> ClassifyReport:
    """preprocess -> (search) -> render -> complete -> extract, writing every artifact."""
    logger.info("=" * 60)
    logger.info(
        "Starting classify run: template=%s backend=%s",
        cfg.prompt.template.value,
        cfg.backend.fingerprint.key(),
    )
    logger.info("=" * 60)

    cfg = with_default_mock_rules(cfg)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    label_map = load_label_map(cfg.label_table)
    lexicon = load_lexicon(cfg.lexicon)

    # Step 1: Load and clean
    records, prep = load_dataset(cfg.dataset.queries, cfg.dataset.query_db, cfg.dataset.labels_table)
    dataset = select_subset(records, cfg, label_map)
    write_manifest(dataset, out / "records.jsonl")

    # Step 2: Search
    aligner = load_aligner(cfg) if cfg.prompt.template is TemplateKind.BLAST_AUGMENTED else None
    provenance = build_provenance(cfg, label_map, lexicon, aligner)
    digest = provenance_digest(provenance)

    # Step 3: Render
    jobs, hits = build_jobs(dataset.records, cfg, aligner)
    write_jobs_jsonl(jobs, out / "prompts.jsonl")
    if hits:
        write_hits_jsonl(hits, out / "hits.jsonl")

    # Step 4: Complete
    results = _dispatch(jobs, cfg, transport, backend) if jobs else []
    replies = [r for r in results if isinstance(r, ModelReply)]
    failures = [r for r in results if isinstance(r, JobFailure)]

    # Step 5: Extract
    predictions = [
        p.model_copy(update={"run_manifest_digest": digest})
        for p in extract_batch(replies, lexicon)
    ]
    write_predictions(predictions, out / "predictions.jsonl")
    _write_jsonl([f.model_dump(mode="json") for f in failures], out / "failures.jsonl")

    report = ClassifyReport(
        n_input=prep.input_records,
        n_records=len(dataset.records),
        n_jobs=len(jobs),
        n_predictions=len(predictions),
        n_failures=len(failures),
        n_unclassified=sum(p.predicted_class is DrugClass.UNCLASSIFIED for p in predictions),
        n_truncated=sum(job.truncated for job in jobs),
        manifest_digest=digest,
        output_dir=out,
        preprocess_report=prep,
        failures=failures,
    )
    outcome = {
        "preprocess": asdict(prep),
        "records": report.n_records,
        "jobs": report.n_jobs,
        "predictions": report.n_predictions,
        "failures": report.n_failures,
        "unclassified": report.n_unclassified,
        "truncated_prompts": report.n_truncated,
    }
    write_run_manifest(build_manifest(provenance, outcome), out)

    logger.info("=" * 60)
    logger.info(
        "Classify complete: %d predictions, %d unclassified, %d failed",
        report.n_predictions,
        report.n_unclassified,
        report.n_failures,
    )
    logger.info("=" * 60)
    return report


def _dispatch(
    jobs: list[PromptJob],
    cfg: RunConfig,
    transport: httpx.AsyncBaseTransport | None,
    backend: Backend | None,
) -> list[ModelReply | JobFailure]:
    async def go() -> list[ModelReply | JobFailure]:
        with ResponseCache(cfg.response_cache_path) as cache:
            async with LlmClient(
                cfg.backend,
                cache,
                backend=backend,
                transport=transport,
                user_agent=settings.user_agent,
            ) as client:
                return await client.run_batch(jobs)

    return asyncio.run(go())


def render_prompts(cfg: RunConfig) -> list[PromptJob]:
    """Render and write prompt jobs without contacting any backend."""
    label_map = load_label_map(cfg.label_table)
    records, _ = load_dataset(cfg.dataset.queries, cfg.dataset.query_db, cfg.dataset.labels_table)
    dataset = select_subset(records, cfg, label_map)
    aligner = load_aligner(cfg) if cfg.prompt.template is TemplateKind.BLAST_AUGMENTED else None
    jobs, _ = build_jobs(dataset.records, cfg, aligner)
    write_jobs_jsonl(jobs, cfg.output_dir / "prompts.jsonl")
    return jobs


# Evaluation


def load_truth(manifest_path: Path, label_map: LabelMap) -> dict[str, frozenset[DrugClass]]:
    """Canonical ground truth from a records manifest."""
    dataset = read_manifest(manifest_path)
    return canonicalize_all(dataset.records, label_map)


def run_eval(
    prediction_paths: Sequence[Path],
    truth_path: Path,
    layouts: Sequence[Layout],
    output_dir: Path,
    *,
    label_table: Path | None = None,
    target_truth_path: Path | None = None,
    target_label_table: Path | None = None,
    target_db: SourceDB = SourceDB.CARD,
) -> list[RenderedTable]:
    """Score prediction files, one report row per (model, template) group."""
    label_map = load_label_map(label_table or settings.label_table_path)
    truth = load_truth(truth_path, label_map)

    predictions: list[Prediction] = []
    for path in prediction_paths:
        predictions.extend(read_predictions(path))
    groups = group_predictions(predictions)

    inputs = {"truth": {"name": truth_path.name, "sha256": file_digest(truth_path)}}
    for i, path in enumerate(prediction_paths):
        inputs[f"predictions_{i}"] = {"name": path.name, "sha256": file_digest(path)}
    provenance: dict[str, Any] = {
        "inputs": inputs,
        "layouts": [layout.value for layout in layouts],
        "label_map_sha256": label_map.digest(),
        "source_runs": sorted({p.run_manifest_digest for p in predictions if p.run_manifest_digest}),
    }

    reports: list[EvalReport] = []
    for name, group in groups.items():
        fp = group[0].backend_fingerprint
        fingerprint = fp.model_dump(mode="json") if fp else None
        reports.append(score(group, truth, label=name, fingerprint=fingerprint))

    cross_reports: list[CrossLabelReport] = []
    if Layout.CROSS_LABEL in layouts:
        if target_truth_path is None:
            raise ValueError("The cross-label layout needs --target-truth")
        target_map = load_label_map(target_label_table) if target_label_table else label_map
        target_truth = truth_from_table(load_labels_table(target_truth_path))
        inputs["target_truth"] = {
            "name": target_truth_path.name,
            "sha256": file_digest(target_truth_path),
        }
        provenance["target_label_map_sha256"] = target_map.digest()
        for name, group in groups.items():
            cross_reports.append(
                score_crossmapped(group, target_truth, target_map, target_db, label=name)
            )

    manifest = build_manifest(
        provenance,
        {
            "reports": [r.to_dict() for r in reports],
            "cross_label": [r.to_dict() for r in cross_reports],
        },
    )
    write_run_manifest(manifest, output_dir)

    tables = [
        emit_tables(cross_reports if layout is Layout.CROSS_LABEL else reports, layout, manifest["digest"])
        for layout in layouts
    ]
    write_tables(tables, output_dir)
    for table in tables:
        logger.info("%s\n%s", table.layout.value, table.text)
    return tables
