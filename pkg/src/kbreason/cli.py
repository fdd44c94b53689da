"""Command-line entry point: curation, proving, evaluation, sweeps, trace
verification, and replay-fixture recording."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .backends import EmbeddingCache
from .datasets import (
    build_clutrr_split,
    build_countries_tasks,
    build_rule_library,
    countries_mini_kb,
    load_corpus,
    save_corpus,
)
from .errors import BackendFailure, KBReasonError
from .evaluation import (
    MetricsReport,
    RunConfig,
    evaluate,
    make_backends,
    sweep,
    sweep_to_csv,
)
from .kb import KnowledgeBase, Triple, VerbalizationSchema
from .oracle import CompositionTable, RuleLibrary, verify_trace
from .prover import PromptSpec, ensemble_prove

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_BACKEND = 2


def _parse_lengths(text: str) -> list[int]:
    """Accepts "2..10" or a comma list like "2,3,5"."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(part) for part in text.split(",") if part]


def _parse_backend(pairs: Sequence[str]) -> dict[str, str]:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValueError(f"backend spec must be key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        if key not in ("planner", "translator"):
            raise ValueError(f"unknown backend key {key!r}")
        out[key] = value
    return out


def _parse_query(text: str) -> Triple:
    parts = text.split()
    if len(parts) != 3:
        raise ValueError(f"query must be 'subject relation object', got {text!r}")
    return Triple(*parts)


def _schema(name_or_path: str) -> VerbalizationSchema:
    if name_or_path in ("kinship", "countries"):
        return VerbalizationSchema.bundled(name_or_path)
    return VerbalizationSchema.from_file(name_or_path)


def _table(name_or_path: Optional[str]) -> Optional[CompositionTable]:
    if name_or_path is None:
        return None
    if name_or_path in ("kinship", "countries"):
        return CompositionTable.bundled(name_or_path)
    return CompositionTable.from_file(name_or_path)


def _guard_overwrite(path: Path, force: bool) -> None:
    if path.exists() and not force:
        raise ValueError(f"{path} exists; pass --force to overwrite")


def _cmd_curate(args: argparse.Namespace) -> int:
    out = Path(args.out)
    if args.dataset == "clutrr":
        corpus = build_clutrr_split(_parse_lengths(args.lengths), args.per_length,
                                    args.seed)
        manifest = save_corpus(corpus, out, force=args.force)
        rules_path = out / "rules.json"
        _guard_overwrite(rules_path, args.force)
        build_rule_library(corpus).to_file(rules_path)
        print(manifest)
    else:
        raw = countries_mini_kb() if args.kb is None else KnowledgeBase.from_file(args.kb)
        task = build_countries_tasks(raw, args.task, test_fraction=args.test_fraction,
                                     seed=args.seed)
        out.mkdir(parents=True, exist_ok=True)
        train_path = out / "train.tsv"
        manifest_path = out / "manifest.json"
        for path in (train_path, manifest_path):
            _guard_overwrite(path, args.force)
        task.train_kb.to_file(train_path)
        manifest_path.write_text(json.dumps({
            "type": "countries",
            "task": task.task,
            "seed": args.seed,
            "max_depth": task.max_depth,
            "removal_scheme": {
                "S1": "country->region",
                "S2": "S1 + country->subregion",
                "S3": "S2 + neighbors' locatedIn facts",
            }[task.task],
            "test_queries": [q.as_list() for q in task.test_queries],
            "removed": [t.as_list() for t in task.removed],
            "train_file": train_path.name,
        }, indent=2, sort_keys=True) + "\n")
        print(manifest_path)
    return EXIT_OK


def _cmd_prove(args: argparse.Namespace) -> int:
    kb = KnowledgeBase.from_file(args.kb)
    lib = RuleLibrary.from_file(args.rules)
    q = _parse_query(args.query)
    spec = PromptSpec(strategy=args.strategy, variant=args.variant,
                      n_examples=args.n_examples, k=args.k, seed=args.seed,
                      max_steps=args.max_steps)
    backend = _parse_backend(args.backend)
    cfg = RunConfig(prompt=spec, k_values=(args.k,),
                    planner=backend.get("planner", "template"),
                    translator=backend.get("translator", "hash"),
                    fixture=args.fixture)
    planner, translator = make_backends(cfg)
    schema = _schema(args.schema)
    table = _table(args.table)
    cache = EmbeddingCache(translator, schema)
    cache.precompute(kb)
    result = ensemble_prove(q, kb, lib, spec, planner, translator, schema,
                            table=table, cache=cache)
    payload = {
        "query": q.as_list(),
        "success_any": result.success_any,
        "first_success_index": result.first_success_index,
        "traces": [t.to_record() for t in result.per_prompt],
    }
    print(json.dumps(payload, indent=1, sort_keys=True))
    return EXIT_OK


def _report_out(report: MetricsReport, args: argparse.Namespace) -> None:
    if args.out:
        report.save(args.out, prefix=args.prefix, force=args.force)
    else:
        sys.stdout.write(report.to_csv())


def _cmd_evaluate(args: argparse.Namespace) -> int:
    overrides = {}
    if args.workers is not None:
        overrides["workers"] = args.workers
    cfg = RunConfig.from_file(args.config, **overrides)
    report = evaluate(cfg)
    if not report.recount():
        raise ValueError("report failed its self-consistency recount")
    _report_out(report, args)
    return EXIT_OK


def _cmd_sweep(args: argparse.Namespace) -> int:
    raw = json.loads(Path(args.config).read_text())
    base = RunConfig.from_file(args.config) if "grid" not in raw else None
    if base is not None:
        grid = [base]
    else:
        base_cfg = dict(raw.get("base", {}))
        grid = []
        for cell in raw["grid"]:
            merged = {**base_cfg, **cell}
            if isinstance(merged.get("prompt"), dict):
                merged["prompt"] = PromptSpec(**merged["prompt"])
            if "buckets" in merged:
                merged["buckets"] = tuple(merged["buckets"])
            if "k_values" in merged:
                merged["k_values"] = tuple(merged["k_values"])
            grid.append(RunConfig(**merged))
    if args.workers is not None:
        grid = [replace(cfg, workers=args.workers) for cfg in grid]
    cells = sweep(grid)
    csv_text = sweep_to_csv(cells)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{args.prefix}.csv"
        _guard_overwrite(csv_path, args.force)
        csv_path.write_text(csv_text)
        for i, cell in enumerate(cells):
            if cell.report is not None:
                cell.report.save(out, prefix=f"{args.prefix}-{i}", force=args.force)
    else:
        sys.stdout.write(csv_text)
    failures = [c for c in cells if c.error]
    for cell in failures:
        log.error("sweep cell error: %s", cell.error)
    return EXIT_OK


def _cmd_verify(args: argparse.Namespace) -> int:
    kb = KnowledgeBase.from_file(args.kb)
    record = json.loads(Path(args.trace).read_text())
    traces = record.get("traces", [record])
    table = _table(args.table)
    if table is None:
        raise ValueError("verify needs --table (kinship, countries, or a file)")
    results = []
    for trace in traces:
        q = Triple(*trace["query"]) if "query" in trace else _parse_query(args.query)
        steps = [Triple(s["s"], s["p"], s["o"]) for s in trace["steps"]]
        verdict = verify_trace(steps, q, table, kb)
        results.append({"query": q.as_list(), "reach": verdict.reach,
                        "verified": verdict.verified, "reason": verdict.reason})
    print(json.dumps(results, indent=1, sort_keys=True))
    return EXIT_OK


def _cmd_record_fixtures(args: argparse.Namespace) -> int:
    from .prover import record_oracle_fixture

    corpus = load_corpus(args.corpus)
    lib = build_rule_library(corpus)
    schema = _schema("kinship")
    spec = PromptSpec(strategy=args.strategy, variant=args.variant, k=args.k,
                      seed=args.seed)
    buckets = _parse_lengths(args.lengths) if args.lengths else sorted(
        {**corpus.rule_instances, **corpus.query_instances})
    items = []
    for length in buckets:
        instances = corpus.query_instances.get(length) or corpus.rule_instances.get(length, [])
        for inst in instances:
            items.append((inst.query, list(inst.facts)))
    fixture = record_oracle_fixture(items, lib, spec, schema)
    out = Path(args.out)
    _guard_overwrite(out, args.force)
    out.write_text(json.dumps(fixture, indent=1, sort_keys=True) + "\n")
    print(out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kbreason",
                                     description="KB proof-path reasoning toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    curate = sub.add_parser("curate", help="generate a benchmark split")
    curate.add_argument("dataset", choices=("clutrr", "countries"))
    curate.add_argument("--lengths", default="2..10")
    curate.add_argument("--per-length", type=int, default=50)
    curate.add_argument("--task", choices=("S1", "S2", "S3"), default="S1")
    curate.add_argument("--test-fraction", type=float, default=0.2)
    curate.add_argument("--kb", default=None, help="raw countries KB (default: bundled)")
    curate.add_argument("--seed", type=int, default=0)
    curate.add_argument("--out", required=True)
    curate.add_argument("--force", action="store_true")
    curate.set_defaults(func=_cmd_curate)

    prove = sub.add_parser("prove", help="prove one query, trace JSON on stdout")
    prove.add_argument("--kb", required=True)
    prove.add_argument("--rules", required=True)
    prove.add_argument("--query", required=True, help="'subject relation object'")
    prove.add_argument("--strategy", default="relation-match")
    prove.add_argument("--variant", default="lmlp")
    prove.add_argument("--n-examples", type=int, default=1)
    prove.add_argument("--k", type=int, default=1)
    prove.add_argument("--seed", type=int, default=0)
    prove.add_argument("--max-steps", type=int, default=20)
    prove.add_argument("--schema", default="kinship")
    prove.add_argument("--table", default=None)
    prove.add_argument("--backend", nargs="*", default=[],
                       help="planner=template|replay|remote translator=exact|hash|remote")
    prove.add_argument("--fixture", default=None)
    prove.set_defaults(func=_cmd_prove)

    ev = sub.add_parser("evaluate", help="run one evaluation config")
    ev.add_argument("--config", required=True)
    ev.add_argument("--out", default=None)
    ev.add_argument("--prefix", default="report")
    ev.add_argument("--workers", type=int, default=None)
    ev.add_argument("--force", action="store_true")
    ev.set_defaults(func=_cmd_evaluate)

    sw = sub.add_parser("sweep", help="run a grid of configs")
    sw.add_argument("--config", required=True)
    sw.add_argument("--out", default=None)
    sw.add_argument("--prefix", default="sweep")
    sw.add_argument("--workers", type=int, default=None)
    sw.add_argument("--force", action="store_true")
    sw.set_defaults(func=_cmd_sweep)

    vf = sub.add_parser("verify", help="check a trace file against a KB")
    vf.add_argument("--kb", required=True)
    vf.add_argument("--trace", required=True)
    vf.add_argument("--table", default="kinship")
    vf.add_argument("--query", default=None)
    vf.set_defaults(func=_cmd_verify)

    rf = sub.add_parser("record-fixtures",
                        help="record replay-planner fixtures from oracle proofs")
    rf.add_argument("--corpus", required=True)
    rf.add_argument("--out", required=True)
    rf.add_argument("--lengths", default=None)
    rf.add_argument("--strategy", default="relation-match")
    rf.add_argument("--variant", default="lmlp")
    rf.add_argument("--k", type=int, default=1)
    rf.add_argument("--seed", type=int, default=0)
    rf.add_argument("--force", action="store_true")
    rf.set_defaults(func=_cmd_record_fixtures)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except BackendFailure as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (KBReasonError, ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
