"""Metrics, ablation sweeps, and deterministic CSV/JSON report emission."""
from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

from .backends import (
    EmbeddingCache,
    ExactStringTranslator,
    HashNgramTranslator,
    PlannerBackend,
    RemotePlanner,
    RemoteTranslator,
    ReplayPlanner,
    TemplatePlanner,
    TranslatorBackend,
)
from .datasets import (
    ClutrrCorpus,
    CountriesTask,
    NoiseConfig,
    build_rule_library,
    countries_composition,
    countries_schema,
    inject_noise,
    kinship_composition,
    kinship_schema,
    load_corpus,
)
from .errors import BackendFailure
from .kb import KnowledgeBase, Triple, VerbalizationSchema
from .oracle import CompositionTable, RuleExample, RuleLibrary, compose_path, find_ground_paths
from .prover import PromptSpec, ensemble_prove

log = logging.getLogger(__name__)

PLANNERS = ("template", "replay", "remote")
TRANSLATORS = ("exact", "hash", "remote")

CSV_COLUMNS = ("bucket", "K", "N", "strategy", "variant", "noise_rate", "attempts",
               "reach_rate", "verified_rate", "mean_steps", "mean_ms_per_step")


@dataclass(frozen=True)
class RunConfig:
    """One evaluation run: which split, how to prompt, which backends."""

    corpus_dir: Optional[str] = None
    buckets: tuple[int, ...] = (5, 6, 7, 8, 9, 10)
    setting: str = "test-facts"
    prompt: PromptSpec = field(default_factory=PromptSpec)
    k_values: tuple[int, ...] = (1,)
    planner: str = "template"
    translator: str = "hash"
    fixture: Optional[str] = None
    noise: Optional[NoiseConfig] = None
    measure_time: bool = False
    workers: int = 1

    def __post_init__(self) -> None:
        if self.planner not in PLANNERS:
            raise ValueError(f"unknown planner {self.planner!r}")
        if self.translator not in TRANSLATORS:
            raise ValueError(f"unknown translator {self.translator!r}")
        if not self.k_values or any(k < 1 for k in self.k_values):
            raise ValueError("k_values must be non-empty positive counts")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "RunConfig":
        raw = json.loads(Path(path).read_text())
        raw.update(overrides)
        if "prompt" in raw and isinstance(raw["prompt"], dict):
            raw["prompt"] = PromptSpec(**raw["prompt"])
        if "noise" in raw and isinstance(raw["noise"], dict):
            raw["noise"] = NoiseConfig(**raw["noise"])
        if "buckets" in raw:
            raw["buckets"] = tuple(raw["buckets"])
        if "k_values" in raw:
            raw["k_values"] = tuple(raw["k_values"])
        return cls(**raw)

    def to_dict(self) -> dict:
        return asdict(self)


def make_backends(cfg: RunConfig) -> tuple[PlannerBackend, TranslatorBackend]:
    if cfg.planner == "template":
        planner: PlannerBackend = TemplatePlanner()
    elif cfg.planner == "replay":
        if cfg.fixture is None:
            raise ValueError("replay planner needs a fixture path")
        planner = ReplayPlanner(cfg.fixture)
    else:
        planner = RemotePlanner()
    if cfg.translator == "exact":
        translator: TranslatorBackend = ExactStringTranslator()
    elif cfg.translator == "hash":
        translator = HashNgramTranslator()
    else:
        translator = RemoteTranslator()
    return planner, translator


@dataclass(frozen=True)
class Row:
    bucket: str
    k: int
    n: int
    strategy: str
    variant: str
    noise_rate: float
    attempts: int
    reach_rate: float
    verified_rate: float
    mean_steps: float
    mean_ms_per_step: float

    def as_csv_fields(self) -> list[str]:
        return [
            self.bucket, str(self.k), str(self.n), self.strategy, self.variant,
            f"{self.noise_rate:.4f}", str(self.attempts), f"{self.reach_rate:.4f}",
            f"{self.verified_rate:.4f}", f"{self.mean_steps:.4f}",
            f"{self.mean_ms_per_step:.4f}",
        ]


@dataclass
class MetricsReport:
    rows: list[Row]
    verdicts: list[dict]
    config: dict

    def to_csv(self) -> str:
        lines = [",".join(CSV_COLUMNS)]
        lines += [",".join(row.as_csv_fields()) for row in self.rows]
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        payload = {
            "config": self.config,
            "rows": [asdict(row) for row in self.rows],
            "verdicts": self.verdicts,
        }
        return json.dumps(payload, indent=1, sort_keys=True) + "\n"

    def save(self, out_dir: str | Path, prefix: str = "report", force: bool = False) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for suffix, text in (("csv", self.to_csv()), ("json", self.to_json())):
            path = out / f"{prefix}.{suffix}"
            if path.exists() and not force:
                raise FileExistsError(f"{path} exists; pass force to overwrite")
            path.write_text(text)

    def recount(self) -> bool:
        """Check every row's rates against a recount over the verdict records."""
        by_bucket: dict[str, list[dict]] = {}
        for v in self.verdicts:
            by_bucket.setdefault(v["bucket"], []).append(v)
        for row in self.rows:
            verdicts = by_bucket.get(row.bucket, [])
            if len(verdicts) != row.attempts:
                return False
            if not verdicts:
                continue
            reach = sum(
                1 for v in verdicts
                if v["first_reach"] is not None and v["first_reach"] < row.k
            )
            verified = sum(
                1 for v in verdicts
                if v["first_verified"] is not None and v["first_verified"] < row.k
            )
            if abs(reach / len(verdicts) - row.reach_rate) > 1e-9:
                return False
            if abs(verified / len(verdicts) - row.verified_rate) > 1e-9:
                return False
        return True


def _run_query(
    index: int,
    bucket: str,
    q: Triple,
    kb: KnowledgeBase,
    lib: RuleLibrary,
    spec: PromptSpec,
    planner: PlannerBackend,
    translator: TranslatorBackend,
    schema: VerbalizationSchema,
    table: CompositionTable,
    cache: EmbeddingCache,
    measure_time: bool,
) -> dict:
    verdict = {
        "bucket": bucket,
        "index": index,
        "query": q.as_list(),
        "slots": [],
        "first_reach": None,
        "first_verified": None,
        "ms_per_step": 0.0,
    }
    try:
        start = time.perf_counter() if measure_time else 0.0
        result = ensemble_prove(q, kb, lib, spec, planner, translator, schema,
                                table=table, cache=cache, stop_on_success=False)
        elapsed_ms = (time.perf_counter() - start) * 1000.0 if measure_time else 0.0
    except BackendFailure as exc:
        log.error("backend failure on %s: %s", q, exc)
        verdict["error"] = str(exc)
        return verdict
    total_steps = 0
    for slot, trace in enumerate(result.per_prompt):
        total_steps += len(trace.steps)
        verdict["slots"].append({
            "reach": trace.reach,
            "verified": trace.verified,
            "status": trace.status,
            "steps": len(trace.steps),
        })
        if trace.reach and verdict["first_reach"] is None:
            verdict["first_reach"] = slot
        if trace.verified and verdict["first_verified"] is None:
            verdict["first_verified"] = slot
    if measure_time and total_steps:
        verdict["ms_per_step"] = elapsed_ms / total_steps
    return verdict


def _bucket_rows(
    bucket: str,
    verdicts: list[dict],
    k_values: Sequence[int],
    spec: PromptSpec,
    noise_rate: float,
) -> list[Row]:
    rows = []
    attempts = len(verdicts)
    for k in k_values:
        if attempts == 0:
            rows.append(Row(bucket, k, spec.n_examples, spec.strategy, spec.variant,
                            noise_rate, 0, 0.0, 0.0, 0.0, 0.0))
            continue
        reach = sum(1 for v in verdicts
                    if v["first_reach"] is not None and v["first_reach"] < k)
        verified = sum(1 for v in verdicts
                       if v["first_verified"] is not None and v["first_verified"] < k)
        step_counts = [s["steps"] for v in verdicts for s in v["slots"][:k]]
        mean_steps = sum(step_counts) / len(step_counts) if step_counts else 0.0
        mean_ms = sum(v["ms_per_step"] for v in verdicts) / attempts
        rows.append(Row(bucket, k, spec.n_examples, spec.strategy, spec.variant,
                        noise_rate, attempts, reach / attempts, verified / attempts,
                        mean_steps, mean_ms))
    return rows


def _evaluate_buckets(
    buckets: Sequence[tuple[str, list[Triple], KnowledgeBase]],
    lib: RuleLibrary,
    cfg: RunConfig,
    planner: PlannerBackend,
    translator: TranslatorBackend,
    schema: VerbalizationSchema,
    table: CompositionTable,
) -> MetricsReport:
    spec = replace(cfg.prompt, k=max(cfg.k_values))
    noise_rate = cfg.noise.rate if cfg.noise else 0.0
    rows: list[Row] = []
    verdicts: list[dict] = []
    for bucket, queries, kb in buckets:
        if cfg.noise:
            kb = inject_noise(kb, cfg.noise, protected=queries)
        cache = EmbeddingCache(translator, schema)
        cache.precompute(kb)

        def job(item: tuple[int, Triple]) -> dict:
            i, q = item
            return _run_query(i, bucket, q, kb, lib, spec, planner, translator,
                              schema, table, cache, cfg.measure_time)

        indexed = list(enumerate(queries))
        if cfg.workers > 1:
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                bucket_verdicts = list(pool.map(job, indexed))
        else:
            bucket_verdicts = [job(item) for item in indexed]
        verdicts.extend(bucket_verdicts)
        rows.extend(_bucket_rows(bucket, bucket_verdicts, cfg.k_values, spec, noise_rate))
    return MetricsReport(rows=rows, verdicts=verdicts, config=cfg.to_dict())


def evaluate(
    cfg: RunConfig,
    corpus: Optional[ClutrrCorpus] = None,
    lib: Optional[RuleLibrary] = None,
) -> MetricsReport:
    """Ensemble-prove every query of every requested bucket and tabulate
    reach/verified rates per (bucket, K).  Deterministic with deterministic
    backends; failures after backend retries count as failed queries."""
    if corpus is None:
        if cfg.corpus_dir is None:
            raise ValueError("config has no corpus_dir and no corpus was passed")
        corpus = load_corpus(cfg.corpus_dir)
    if lib is None:
        lib = build_rule_library(corpus)
    planner, translator = make_backends(cfg)
    schema = kinship_schema()
    table = kinship_composition()
    buckets = []
    for length in cfg.buckets:
        instances = corpus.query_instances.get(length, corpus.rule_instances.get(length, []))
        queries = [inst.query for inst in instances]
        kb = corpus.bucket_kb(length, cfg.setting) if instances else KnowledgeBase([])
        buckets.append((f"l{length}", queries, kb))
    return _evaluate_buckets(buckets, lib, cfg, planner, translator, schema, table)


def countries_rule_library(task: CountriesTask, max_examples: int = 6) -> RuleLibrary:
    """Grounded locatedIn demonstrations mined from the train KB.

    Uses non-test countries whose direct country->region fact survives, keeps
    the shortest multi-hop chain per distinct relation signature.
    """
    table = countries_composition()
    test_subjects = {q.subject for q in task.test_queries}
    examples: list[RuleExample] = []
    seen_signatures: set[tuple[str, ...]] = set()
    direct = [
        f for f in task.train_kb.facts
        if f.relation == "locatedIn" and f.subject not in test_subjects
    ]
    for fact in direct:
        if len(examples) >= max_examples:
            break
        paths = [
            p for p in find_ground_paths(task.train_kb, fact.subject, fact.object,
                                         task.max_depth)
            if len(p) >= 2 and fact not in p and compose_path(p, table) == "locatedIn"
        ]
        if not paths:
            continue
        best = min(paths, key=lambda p: (len(p), tuple(p)))
        signature = tuple(s.relation for s in best)
        if signature in seen_signatures:
            continue
        seen_signatures.add(signature)
        examples.append(RuleExample.from_steps(fact, best))
    return RuleLibrary(examples)


def evaluate_countries(
    task: CountriesTask,
    cfg: RunConfig,
    lib: Optional[RuleLibrary] = None,
) -> MetricsReport:
    """The countries analogue of evaluate(): one bucket named after the task."""
    if lib is None:
        lib = countries_rule_library(task)
    planner, translator = make_backends(cfg)
    buckets = [(task.task, list(task.test_queries), task.train_kb)]
    return _evaluate_buckets(buckets, lib, cfg, planner, translator,
                             countries_schema(), countries_composition())


@dataclass
class SweepCell:
    config: RunConfig
    report: Optional[MetricsReport]
    error: Optional[str] = None


def sweep(grid: Sequence[RunConfig], corpus: Optional[ClutrrCorpus] = None) -> list[SweepCell]:
    """One report per config; a failing cell is recorded and the sweep continues."""
    if not grid:
        raise ValueError("sweep grid must be non-empty")
    cells = []
    for cfg in grid:
        try:
            cells.append(SweepCell(cfg, evaluate(cfg, corpus=corpus)))
        except Exception as exc:  # noqa: BLE001 - cell isolation is the contract
            log.error("sweep cell failed (%s): %s", cfg, exc)
            cells.append(SweepCell(cfg, None, error=str(exc)))
    return cells


def sweep_to_csv(cells: Sequence[SweepCell]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for cell in cells:
        if cell.report is None:
            continue
        lines += [",".join(row.as_csv_fields()) for row in cell.report.rows]
    return "\n".join(lines) + "\n"
