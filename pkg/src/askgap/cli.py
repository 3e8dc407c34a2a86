"""Command line interface.

Subcommands: build (corpus -> pretraining dataset), plans (summaries ->
control plans), analyze (plan statistics or dataset statistics), rouge
(candidate/reference scoring).  Exit codes: 0 success, 1 I/O or config
error, 2 skip-rate abort.

Option precedence: explicit flag > ASKGAP_ENDPOINT (backend URL only) >
--config JSON file > built-in default.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Iterable, Sequence

from . import builder as builder_mod
from . import plans as plans_mod
from .builder import (
    BuildConfig,
    DatasetBuilder,
    Mode,
    Skip,
    instance_to_json,
)
from .corpus import DIALOGUE, PROSE, read_corpus, word_tokenize
from .errors import AskgapError, ConfigError, EmptyPlan, SkipRateExceeded
from .metrics import ROUGE1, ROUGE2, ROUGEL, VARIANTS, multi_ref_max
from .qg import BackendSpec, make_backend

logger = logging.getLogger("askgap")

# CLI strategy names; dashed forms are the documented spelling, module
# constants are accepted as aliases.
_STRATEGY_ALIASES = {
    "content-questions": plans_mod.CONTENT_QUESTIONS,
    "keywords": plans_mod.KEYWORDS,
    "blueprint": plans_mod.BLUEPRINT,
    plans_mod.CONTENT_QUESTIONS: plans_mod.CONTENT_QUESTIONS,
    plans_mod.BLUEPRINT: plans_mod.BLUEPRINT,
}


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return {str(k).replace("-", "_"): v for k, v in data.items()}


def _resolve(args: argparse.Namespace, config: dict, key: str, default):
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in config:
        return config[key]
    return default


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with default option values")
    parser.add_argument(
        "--log-level",
        default="info",
        choices=["debug", "info", "warning", "error"],
        help="logging verbosity",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="askgap",
        description="question-augmented gap-sentence pretraining data engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build a pretraining dataset from a corpus")
    p.add_argument("--corpus", required=True, help="input corpus JSONL")
    p.add_argument("--out", required=True, help="output dataset JSONL")
    p.add_argument("--report", help="report JSON path (default: OUT.report.json)")
    p.add_argument("--gsr", type=float, help="gap sentence ratio (default 0.45)")
    p.add_argument("--mask-rate", type=float, dest="mask_rate",
                   help="share of selected sentences masked (default 0.8)")
    p.add_argument("--prop", type=float,
                   help="share of question-bearing instances (default 0.25)")
    p.add_argument("--input-budget", type=int, dest="input_budget",
                   help="source token budget (default 512)")
    p.add_argument("--target-budget", type=int, dest="target_budget",
                   help="target token budget (default 256)")
    p.add_argument("--seed", type=int, help="run seed (default 0)")
    p.add_argument("--backend",
                   help="heuristic | recorded:PATH | http(s)://host:port")
    p.add_argument("--kind", choices=[PROSE, DIALOGUE], help="corpus kind")
    p.add_argument("--mode", choices=[m.value for m in builder_mod.QUESTION_MODES],
                   help="question-bearing mode to mix in (default ask_and_answer)")
    p.add_argument("--max-skip-rate", type=float, dest="max_skip_rate",
                   help="abort threshold on skipped documents (default 0.10)")
    p.add_argument("--workers", type=int, help="parallel workers (default 1)")
    p.add_argument("--cache", help="response cache path for remote backends "
                   "(default: OUT.cache.jsonl)")
    p.add_argument("--figures-dir", dest="figures_dir",
                   help="directory for report figures (default: beside report)")
    p.add_argument("--no-figures", action="store_true",
                   help="skip figure rendering")
    _add_common(p)

    p = sub.add_parser("plans", help="extract control plans from summaries")
    p.add_argument("--in", dest="infile", required=True,
                   help="summaries JSONL with doc_id/query_id/summary")
    p.add_argument("--out", required=True, help="output plan JSONL")
    p.add_argument("--strategy", required=True,
                   help="content-questions | keywords | blueprint")
    p.add_argument("--backend",
                   help="heuristic | recorded:PATH | http(s)://host:port")
    p.add_argument("--cache", help="response cache path for remote backends")
    _add_common(p)

    p = sub.add_parser("analyze",
                       help="plan statistics, or dataset statistics with "
                            "--dataset-stats")
    p.add_argument("--plans", nargs="*", default=[], help="plan JSONL files")
    p.add_argument("--summaries", required=True, help="summaries JSONL")
    p.add_argument("--json", dest="json_out", help="write statistics JSON here")
    p.add_argument("--dataset-stats", action="store_true",
                   help="report example/document counts and word lengths")
    p.add_argument("--figures-dir", dest="figures_dir",
                   help="directory for figures (default: beside --json, "
                        "only when --json is given)")
    p.add_argument("--no-figures", action="store_true",
                   help="skip figure rendering")
    _add_common(p)

    p = sub.add_parser("rouge", help="score candidates against references")
    p.add_argument("--candidates", required=True, help="JSONL with text field")
    p.add_argument("--references", required=True,
                   help="JSONL with text or texts field")
    p.add_argument("--variant", default="all",
                   choices=["all", ROUGE1, ROUGE2, ROUGEL])
    p.add_argument("--multi-ref", dest="multi_ref", choices=["max"],
                   help="aggregate multiple references by max F1")
    p.add_argument("--json", dest="json_out", help="write scores JSON here")
    _add_common(p)
    return parser


def _setup_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper()),
        format="%(levelname)s %(name)s: %(message)s",
    )


def _backend_from_args(backend_arg: str, cache_path: str | None):
    spec = BackendSpec.parse(backend_arg)
    return spec, make_backend(spec, cache_path=cache_path)


def _read_jsonl(path: str) -> Iterable[dict]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise ValueError(f"{path}:{lineno}: expected a JSON object")
            yield obj


def cmd_build(args: argparse.Namespace) -> int:
    config_file = _load_config_file(args.config)
    gsr = float(_resolve(args, config_file, "gsr", 0.45))
    mask_rate = float(_resolve(args, config_file, "mask_rate", 0.8))
    prop = float(_resolve(args, config_file, "prop", 0.25))
    input_budget = int(_resolve(args, config_file, "input_budget", 512))
    target_budget = int(_resolve(args, config_file, "target_budget", 256))
    seed = int(_resolve(args, config_file, "seed", 0))
    backend_arg = str(_resolve(args, config_file, "backend", "heuristic"))
    kind = str(_resolve(args, config_file, "kind", PROSE))
    mode = Mode(str(_resolve(args, config_file, "mode", Mode.ASK_AND_ANSWER.value)))
    max_skip_rate = float(_resolve(args, config_file, "max_skip_rate", 0.10))
    workers = int(_resolve(args, config_file, "workers", 1))

    cache_path = args.cache or f"{args.out}.cache.jsonl"
    spec, backend = _backend_from_args(backend_arg, cache_path)
    config = BuildConfig(
        gsr=gsr,
        mask_rate=mask_rate,
        ask_answer_proportion=prop,
        input_budget=input_budget,
        target_budget=target_budget,
        seed=seed,
        backend=spec,
        corpus_kind=kind,
        augmentation_mode=mode,
        max_skip_rate=max_skip_rate,
    )
    config.validate()
    report_path = args.report or f"{args.out}.report.json"
    builder = DatasetBuilder(config, backend=backend, workers=workers)
    aborted: SkipRateExceeded | None = None
    emitted = 0
    with open(args.out, "w", encoding="utf-8") as out:
        try:
            for item in builder.run(read_corpus(args.corpus)):
                if isinstance(item, Skip):
                    logger.debug("skip %s: %s", item.id, item.reason)
                    continue
                out.write(instance_to_json(item) + "\n")
                emitted += 1
                if emitted % 5000 == 0:
                    logger.info("emitted %d instances", emitted)
        except SkipRateExceeded as exc:
            aborted = exc
    with open(report_path, "w", encoding="utf-8") as fh:
        fh.write(builder.report.to_json() + "\n")
    if not args.no_figures:
        from .report import render_build_figures

        figures_dir = args.figures_dir or os.path.dirname(
            os.path.abspath(report_path)
        )
        for path in render_build_figures(builder.report, figures_dir):
            logger.info("wrote figure %s", path)
    logger.info(
        "emitted %d instances, skipped %d documents; report at %s",
        builder.report.emitted,
        builder.report.skipped,
        report_path,
    )
    if aborted is not None:
        logger.error("aborted: %s", aborted)
        return 2
    return 0


def cmd_plans(args: argparse.Namespace) -> int:
    if args.strategy not in _STRATEGY_ALIASES:
        raise ValueError(
            f"unknown strategy {args.strategy!r}; "
            f"choose from {', '.join(sorted(_STRATEGY_ALIASES))}"
        )
    config_file = _load_config_file(args.config)
    backend_arg = str(_resolve(args, config_file, "backend", "heuristic"))
    _spec, backend = _backend_from_args(backend_arg, args.cache)
    written = 0
    empty = 0
    with open(args.out, "w", encoding="utf-8") as out:
        for lineno, obj in enumerate(_read_jsonl(args.infile), start=1):
            doc_id = str(obj["doc_id"])
            query_id = str(obj.get("query_id", lineno - 1))
            summary = obj["summary"]
            try:
                plan = plans_mod.extract_plan(
                    summary, _STRATEGY_ALIASES[args.strategy], backend
                )
            except EmptyPlan:
                empty += 1
                logger.warning(
                    "no plan units survive for (%s, %s)", doc_id, query_id
                )
                continue
            record = plans_mod.plan_to_record(plan, doc_id, query_id)
            out.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")
            written += 1
    logger.info("wrote %d plans (%d empty) to %s", written, empty, args.out)
    return 0


def _dataset_stats(records: list[dict]) -> dict:
    doc_words: dict[str, int] = {}
    summary_word_counts: list[int] = []
    for obj in records:
        doc_id = str(obj["doc_id"])
        if "document" in obj and doc_id not in doc_words:
            doc_words[doc_id] = len(word_tokenize(obj["document"]))
        summary_word_counts.append(len(word_tokenize(obj["summary"])))
    n = len(records)
    stats = {
        "examples": n,
        "documents": len({str(obj["doc_id"]) for obj in records}),
        "mean_summary_words": (
            sum(summary_word_counts) / n if n else 0.0
        ),
    }
    if doc_words:
        stats["mean_document_words"] = sum(doc_words.values()) / len(doc_words)
    return stats


def cmd_analyze(args: argparse.Namespace) -> int:
    summaries: dict[tuple[str, str], str] = {}
    raw_records: list[dict] = []
    for lineno, obj in enumerate(_read_jsonl(args.summaries), start=1):
        doc_id = str(obj["doc_id"])
        query_id = str(obj.get("query_id", lineno - 1))
        summaries[(doc_id, query_id)] = obj["summary"]
        raw_records.append(obj)

    if args.dataset_stats:
        stats = _dataset_stats(raw_records)
        print("dataset statistics")
        print(f"  examples:            {stats['examples']}")
        print(f"  documents:           {stats['documents']}")
        if "mean_document_words" in stats:
            print(f"  mean document words: {stats['mean_document_words']:.2f}")
        print(f"  mean summary words:  {stats['mean_summary_words']:.2f}")
        if args.json_out:
            with open(args.json_out, "w", encoding="utf-8") as fh:
                json.dump(stats, fh, indent=2, sort_keys=True)
                fh.write("\n")
        return 0

    if not args.plans:
        raise ConfigError("analyze needs --plans files (or --dataset-stats)")
    triples: list[tuple[str, str, plans_mod.Plan]] = []
    for path in args.plans:
        triples.extend(plans_mod.read_plan_file(path))
    orphans = sorted(
        {
            (doc_id, query_id)
            for doc_id, query_id, _plan in triples
            if (doc_id, query_id) not in summaries
        }
    )
    if orphans:
        for doc_id, query_id in orphans:
            logger.error("plan (%s, %s) has no matching summary", doc_id, query_id)
        return 1
    reports = plans_mod.analyze_plans(triples, summaries)
    header = (
        f"{'strategy':<20} {'plans':>6} {'len ratio':>10} "
        f"{'R1 w/ summary':>14} {'x-query mean':>13} {'x-query max':>12}"
    )
    print(header)
    for strategy in sorted(reports):
        r = reports[strategy]
        mean_x = (
            f"{r.stats.mean_overlap:.4f}" if r.stats.mean_overlap is not None else "-"
        )
        max_x = (
            f"{r.stats.max_overlap:.4f}" if r.stats.max_overlap is not None else "-"
        )
        print(
            f"{strategy:<20} {r.plan_count:>6} {r.stats.length_ratio:>10.4f} "
            f"{r.summary_rouge1:>14.4f} {mean_x:>13} {max_x:>12}"
        )
    if args.json_out:
        payload = {s: reports[s].to_dict() for s in sorted(reports)}
        with open(args.json_out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if not args.no_figures and args.json_out:
        from .report import render_analysis_figures

        figures_dir = args.figures_dir or os.path.dirname(
            os.path.abspath(args.json_out)
        )
        for path in render_analysis_figures(reports, figures_dir):
            logger.info("wrote figure %s", path)
    return 0


def cmd_rouge(args: argparse.Namespace) -> int:
    candidates = list(_read_jsonl(args.candidates))
    references = list(_read_jsonl(args.references))
    if len(candidates) != len(references):
        logger.error(
            "count mismatch: %d candidates vs %d references",
            len(candidates),
            len(references),
        )
        return 1
    variants = list(VARIANTS) if args.variant == "all" else [args.variant]
    sums = {v: [0.0, 0.0, 0.0] for v in variants}
    for cand_obj, ref_obj in zip(candidates, references):
        cand = word_tokenize(cand_obj["text"])
        if "texts" in ref_obj:
            refs = [word_tokenize(t) for t in ref_obj["texts"]]
            if args.multi_ref != "max":
                refs = refs[:1]
        else:
            refs = [word_tokenize(ref_obj["text"])]
        for v in variants:
            score = multi_ref_max(cand, refs, v)
            sums[v][0] += score.precision
            sums[v][1] += score.recall
            sums[v][2] += score.f1
    n = len(candidates)
    payload = {}
    for v in variants:
        p, r, f1 = (x / n for x in sums[v]) if n else (0.0, 0.0, 0.0)
        payload[v] = {"precision": p, "recall": r, "f1": f1}
        print(f"{v:>7}  P {p:.4f}  R {r:.4f}  F1 {f1:.4f}")
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


_COMMANDS = {
    "build": cmd_build,
    "plans": cmd_plans,
    "analyze": cmd_analyze,
    "rouge": cmd_rouge,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    _setup_logging(args.log_level)
    try:
        return _COMMANDS[args.command](args)
    except (OSError, ValueError, KeyError, AskgapError) as exc:
        logger.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
