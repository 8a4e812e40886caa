"""Command-line entry point: ``amr-pipeline <subcommand>``.

Subcommands:
    index     build a word index from a reference FASTA
    classify  run the full pipeline from a run-config JSON file
    eval      score prediction files and emit report tables
    split     write a stratified TRAIN/DEV/TEST manifest
    prompt    render prompts only, without contacting a backend

Exit codes: 0 success, 1 runtime failure (including a classify run where
any record failed), 2 configuration or input errors.

Environment variables (all optional):
- AMR_DATA_DIR: directory holding label_map.tsv, synonyms.tsv and mock_rules.json
- AMR_CACHE_FILENAME: response cache file name inside the run directory
- AMR_LOG_LEVEL: default log level (default: 'info')
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

from pydantic import ValidationError

from amr_drugclass_pipeline import pipeline
from amr_drugclass_pipeline.config import apply_overrides, load_run_config, settings
from amr_drugclass_pipeline.evalkit import Layout
from amr_drugclass_pipeline.labelspace import load_label_map
from amr_drugclass_pipeline.promptgen import TemplateKind
from amr_drugclass_pipeline.seqio import SourceDB

logger = logging.getLogger(__name__)

INPUT_ERRORS = (ValueError, KeyError, FileNotFoundError, ValidationError)

LAYOUTS = {
    "unclassified": Layout.UNCLASSIFIED_RATE,
    "full": Layout.FULL_METRICS,
    "cross": Layout.CROSS_LABEL,
}


def _fractions(text: str) -> tuple[float, float, float]:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"Expected three comma-separated fractions, got {text!r}")
    return (parts[0], parts[1], parts[2])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amr-pipeline",
        description="Classify AMR gene sequences into drug classes with LLM backends.",
    )
    parser.add_argument(
        "--log-level",
        default=settings.log_level,
        choices=["debug", "info", "warning", "error"],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="Build a word index from a reference FASTA")
    p.add_argument("references", type=Path)
    p.add_argument("out", type=Path)
    p.add_argument("--word-size", type=int, default=11)

    p = sub.add_parser("classify", help="Run the full pipeline from a run config")
    p.add_argument("config", type=Path)
    p.add_argument("--template", choices=[k.value for k in TemplateKind])
    p.add_argument("--output-dir", type=Path)
    p.add_argument("--top-k", type=int)
    p.add_argument("--max-in-flight", type=int)

    p = sub.add_parser("eval", help="Score predictions and write report tables")
    p.add_argument("predictions", type=Path, nargs="+")
    p.add_argument("--truth", type=Path, required=True, help="records.jsonl from a classify run")
    p.add_argument(
        "--layout", action="append", choices=sorted(LAYOUTS), help="repeatable; default all applicable"
    )
    p.add_argument("--output-dir", type=Path, default=Path("reports"))
    p.add_argument("--label-table", type=Path)
    p.add_argument("--target-truth", type=Path, help="labels TSV in the target scheme")
    p.add_argument("--target-label-table", type=Path)
    p.add_argument("--target-db", choices=[d.value for d in SourceDB], default=SourceDB.CARD.value)

    p = sub.add_parser("split", help="Write a stratified split manifest")
    p.add_argument("fasta", type=Path)
    p.add_argument("out", type=Path)
    p.add_argument("--labels-table", type=Path)
    p.add_argument("--source-db", choices=[d.value for d in SourceDB], default=SourceDB.MEGARES.value)
    p.add_argument("--label-table", type=Path)
    p.add_argument("--fractions", type=_fractions, default=(0.8, 0.1, 0.1))
    p.add_argument("--seed", type=int, default=7)

    p = sub.add_parser("prompt", help="Render prompts without calling a backend")
    p.add_argument("config", type=Path)
    p.add_argument("--template", choices=[k.value for k in TemplateKind])
    p.add_argument("--output-dir", type=Path)
    p.add_argument("--top-k", type=int)
    return parser


def cmd_index(args: argparse.Namespace) -> int:
    index = pipeline.run_index(args.references, args.out, args.word_size)
    print(f"indexed {index.n_refs} sequences ({index.total_length} bp)")
    return 0


def cmd_classify(args: argparse.Namespace) -> int:
    cfg = apply_overrides(
        load_run_config(args.config),
        template=TemplateKind(args.template) if args.template else None,
        output_dir=args.output_dir,
        top_k=args.top_k,
        max_in_flight=args.max_in_flight,
    )
    report = pipeline.run_classify(cfg)
    print(f"classified {report.n_predictions} records -> {report.predictions_path}")
    if report.n_failures:
        logger.error(
            "%d of %d jobs failed; see %s",
            report.n_failures,
            report.n_jobs,
            report.output_dir / "failures.jsonl",
        )
        return 1
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    if args.layout:
        layouts = [LAYOUTS[name] for name in args.layout]
    else:
        layouts = [Layout.UNCLASSIFIED_RATE, Layout.FULL_METRICS]
        if args.target_truth is not None:
            layouts.append(Layout.CROSS_LABEL)
    tables = pipeline.run_eval(
        args.predictions,
        args.truth,
        layouts,
        args.output_dir,
        label_table=args.label_table,
        target_truth_path=args.target_truth,
        target_label_table=args.target_label_table,
        target_db=SourceDB(args.target_db),
    )
    for table in tables:
        print(table.text)
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    label_map = load_label_map(args.label_table or settings.label_table_path)
    dataset = pipeline.run_split(
        args.fasta,
        args.out,
        label_map,
        source_db=SourceDB(args.source_db),
        labels_table=args.labels_table,
        fractions=args.fractions,
        seed=args.seed,
    )
    counts = ", ".join(f"{b.value}={n}" for b, n in dataset.counts().items())
    print(f"split {len(dataset.records)} records: {counts}")
    return 0


def cmd_prompt(args: argparse.Namespace) -> int:
    cfg = apply_overrides(
        load_run_config(args.config),
        template=TemplateKind(args.template) if args.template else None,
        output_dir=args.output_dir,
        top_k=args.top_k,
    )
    jobs = pipeline.render_prompts(cfg)
    print(f"rendered {len(jobs)} prompts -> {cfg.output_dir / 'prompts.jsonl'}")
    return 0


COMMANDS = {
    "index": cmd_index,
    "classify": cmd_classify,
    "eval": cmd_eval,
    "split": cmd_split,
    "prompt": cmd_prompt,
}


def run(argv: Sequence[str] | None = None) -> int:
    """Parse arguments and dispatch; returns the exit code."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level.upper()),
        format="%(asctime)s | %(levelname)-8s | %(name)s | %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )
    try:
        return COMMANDS[args.command](args)
    except FileNotFoundError as e:
        logger.error(str(e))
        return 2
    except INPUT_ERRORS as e:
        logger.error("Invalid input: %s", e)
        return 2
    except Exception:
        logger.exception("%s failed", args.command)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
