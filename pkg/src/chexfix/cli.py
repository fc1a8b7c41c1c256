"""Command-line surface: extract, run, inject-gt, eval, serve-fixtures.

Exit codes: 0 on success, 1 on systemic failure, 2 on invalid input.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from .backends import FixtureStore
from .config import PipelineConfig, load_config, provider_from_cli
from .errors import ChexfixError, ConfigError, IngestError
from .extract import extract_measured_findings, parse_ett
from .manifest import (
    GROUND_TRUTH,
    gt_corpus_from_manifest,
    load_manifest,
    model_corpus_from_manifest,
    read_corpus,
    write_corpus,
)
from .metrics import render_comparison, render_detail_csv
from .pipeline import run_eval, run_pipeline
from .server import run_server
from .updater import inject_ground_truth

log = logging.getLogger(__name__)


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--manifest", required=True, help="line-delimited JSON manifest")
    parser.add_argument("--config", default=None, help="pipeline config JSON (or $CHEXFIX_CONFIG)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chexfix", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_extract = sub.add_parser("extract", help="dump structured findings per report")
    _add_common(p_extract)
    p_extract.add_argument("--out", required=True, help="output findings JSONL")

    p_run = sub.add_parser("run", help="verify and update every model report")
    _add_common(p_run)
    p_run.add_argument("--backend", default=None, help="fixtures:<path> or http:<url>")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--all-images", action="store_true", help="verify even without a tube mention")
    p_run.add_argument("--jobs", type=int, default=None, help="worker threads (default: cpu count)")

    p_inject = sub.add_parser("inject-gt", help="inject annotation distances into ground truth")
    _add_common(p_inject)
    p_inject.add_argument("--annotations", required=True, help="fixture-format annotation file")
    p_inject.add_argument("--out", required=True, help="output ground-truth corpus JSONL")

    p_eval = sub.add_parser("eval", help="score original vs updated corpora")
    _add_common(p_eval)
    p_eval.add_argument("--updated", required=True, help="updated corpus JSONL")
    p_eval.add_argument("--gt", default=None, help="injected ground-truth corpus JSONL")
    p_eval.add_argument("--out", required=True, help="output path stem")
    p_eval.add_argument("--format", choices=("csv", "md", "txt"), default="txt")

    p_serve = sub.add_parser("serve-fixtures", help="serve a fixture file over the wire protocol")
    p_serve.add_argument("--fixtures", required=True)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8420)

    return parser


def _cmd_extract(args, config: PipelineConfig) -> int:
    entries = load_manifest(args.manifest)
    lexicon = config.lexicon()
    lines = []
    for entry in entries:
        reports = {GROUND_TRUTH: entry.study.ground_truth_report, **entry.study.model_reports}
        for model, text in reports.items():
            parse = parse_ett(text, lexicon)
            findings = extract_measured_findings(text, lexicon)
            lines.append(
                json.dumps(
                    {
                        "study_id": entry.study.study_id,
                        "model": model,
                        "ett": {
                            "present": parse.observation.present,
                            "measurement_cm": parse.observation.measurement_cm,
                            "placement": parse.observation.placement.value
                            if parse.observation.placement
                            else None,
                        },
                        "findings": [
                            {
                                "object_name": f.object_name,
                                "category": f.category.value,
                                "values_cm": list(f.values_cm),
                                "sentence_index": f.sentence_index,
                                "char_span": list(f.char_span),
                                "polarity": f.polarity,
                                "region": f.region,
                                "ambiguous": f.ambiguous,
                            }
                            for f in findings
                        ],
                    },
                    sort_keys=True,
                )
            )
    Path(args.out).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return 0


def _cmd_run(args, config: PipelineConfig) -> int:
    if args.all_images:
        config = dataclasses.replace(config, all_images=True)
    if args.jobs is not None:
        config = dataclasses.replace(config, jobs=args.jobs)
    elif config.jobs is None:
        config = dataclasses.replace(config, jobs=os.cpu_count() or 1)
    entries = load_manifest(args.manifest)
    provider = provider_from_cli(args.backend, config)
    updated, audit_rows, failures = run_pipeline(entries, config, provider)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_corpus(out_dir / "updated.jsonl", updated)
    with (out_dir / "audit.jsonl").open("w", encoding="utf-8") as fh:
        for row in audit_rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    if failures:
        log.warning("%d studies failed and passed through unmodified", failures)
    return 0


def _cmd_inject(args, config: PipelineConfig) -> int:
    entries = load_manifest(args.manifest)
    store = FixtureStore(args.annotations)
    lexicon = config.lexicon()
    corpus = {}
    for entry in entries:
        updated = inject_ground_truth(
            entry.study.ground_truth_report,
            store.annotation_for(entry.study.study_id),
            entry.study,
            config.guidelines,
            lexicon=lexicon,
        )
        corpus[entry.study.study_id] = {GROUND_TRUTH: updated.text}
    write_corpus(args.out, corpus)
    return 0


def _cmd_eval(args, config: PipelineConfig) -> int:
    entries = load_manifest(args.manifest)
    if args.gt is not None:
        gt_rows = read_corpus(args.gt)
        gt_corpus = {sid: texts[GROUND_TRUTH] for sid, texts in gt_rows.items()}
    else:
        gt_corpus = gt_corpus_from_manifest(entries)
    original = model_corpus_from_manifest(entries)
    updated = read_corpus(args.updated)
    report = run_eval(gt_corpus, original, updated, config)
    rendered = render_comparison(report.rows, args.format)
    suffix = {"csv": ".csv", "md": ".md", "txt": ".txt"}[args.format]
    out = Path(args.out).with_suffix(suffix)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(rendered, encoding="utf-8")
    detail = render_detail_csv(
        {m.model: {"original": m.original, "updated": m.updated} for m in report.models}
    )
    out.with_name(out.stem + "_detail.csv").write_text(detail, encoding="utf-8")
    sys.stdout.write(rendered)
    return 0


def _cmd_serve(args) -> int:
    store = FixtureStore(args.fixtures)
    sys.stderr.write(f"serving fixtures from {args.fixtures} on {args.host}:{args.port}\n")
    run_server(store, args.host, args.port)
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "serve-fixtures":
            return _cmd_serve(args)
        config = load_config(args.config)
        if args.command == "extract":
            return _cmd_extract(args, config)
        if args.command == "run":
            return _cmd_run(args, config)
        if args.command == "inject-gt":
            return _cmd_inject(args, config)
        if args.command == "eval":
            return _cmd_eval(args, config)
        parser.error(f"unknown command {args.command!r}")
    except (IngestError, ConfigError) as exc:
        log.error("%s", exc)
        return 2
    except ChexfixError as exc:
        log.error("%s", exc)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
