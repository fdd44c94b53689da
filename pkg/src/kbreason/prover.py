"""Iterative proof-path generation: retrieve demonstrations, build a prompt,
then repeatedly propose candidate steps and project them onto the KB under the
chain-rule constraint until the target entity (or a budget) is reached."""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from typing import Optional, Sequence

from .backends import (
    EmbeddingCache,
    PlannerBackend,
    PromptState,
    TranslatorBackend,
    cosine,
    project,
    replay_key,
)
from .kb import KnowledgeBase, Triple, VerbalizationSchema
from .oracle import (
    CompositionTable,
    HornRule,
    RuleExample,
    RuleLibrary,
    atom_to_text,
    compose_path,
)

log = logging.getLogger(__name__)

STRATEGIES = ("relation-match", "task-similarity", "entity-match", "random", "none",
              "rule-only")
VARIANTS = ("lmlp", "lmlp-reverse", "only-rule", "no-prompt")


@dataclass(frozen=True)
class PromptSpec:
    """Prompting configuration: how examples are retrieved and rendered, how
    many prompts are ensembled, and the step budget of the proof loop."""

    strategy: str = "relation-match"
    variant: str = "lmlp"
    n_examples: int = 1
    k: int = 1
    max_steps: int = 20
    seed: int = 0
    exclude_used_facts: bool = True
    candidates: int = 10
    temperature: float = 0.8
    min_score: Optional[float] = None
    success_on: str = "reach"

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.n_examples < 1 or self.k < 1 or self.max_steps < 1:
            raise ValueError("n_examples, k and max_steps must be >= 1")
        if self.success_on not in ("reach", "verified"):
            raise ValueError(f"unknown success criterion {self.success_on!r}")


@dataclass(frozen=True)
class ProofTrace:
    query: Triple
    prompt_text: str
    steps: tuple[tuple[Triple, float], ...]
    status: str  # reached | max_steps | empty_slice
    reach: bool
    verified: bool

    @property
    def step_triples(self) -> list[Triple]:
        return [fact for fact, _ in self.steps]

    def to_record(self) -> dict:
        return {
            "query": self.query.as_list(),
            "prompt": self.prompt_text,
            "steps": [
                {"s": f.subject, "p": f.relation, "o": f.object, "score": score}
                for f, score in self.steps
            ],
            "status": self.status,
            "reach": self.reach,
            "verified": self.verified,
        }


@dataclass(frozen=True)
class EnsembleResult:
    per_prompt: tuple[ProofTrace, ...]
    success_any: bool
    first_success_index: Optional[int]

    def success_at(self, k: int) -> bool:
        if self.first_success_index is None:
            return False
        return self.first_success_index < k


def _task_text(t: Triple, schema: VerbalizationSchema) -> str:
    return schema.verbalize(t)


def retrieve_examples(
    q: Triple,
    lib: RuleLibrary,
    spec: PromptSpec,
    schema: VerbalizationSchema,
    translator: Optional[TranslatorBackend] = None,
    slot: int = 0,
) -> list[RuleExample]:
    """The N examples for one prompt slot.

    Slots index into a single seeded ordering of the pool, so the selections
    for K prompts are prefixes of one permutation (slot j sees examples
    [j*N, (j+1)*N) with wraparound).  Deterministic given (spec.seed, slot).
    """
    if spec.strategy == "none" or spec.variant == "no-prompt":
        return []
    pool = list(lib.examples)
    if not pool:
        raise ValueError("rule library is empty")
    if spec.strategy in ("relation-match", "rule-only"):
        filtered = lib.for_relation(q.relation)
        if not filtered:
            log.warning("no example for relation %r; falling back to random", q.relation)
            filtered = pool
    elif spec.strategy == "entity-match":
        filtered = [ex for ex in pool if ex.task.subject == q.subject]
        if not filtered:
            log.warning("no example for subject %r; falling back to random", q.subject)
            filtered = pool
    else:
        filtered = pool

    if spec.strategy == "task-similarity":
        if translator is None:
            raise ValueError("task-similarity retrieval needs a translator")
        query_vec = translator.embed(_task_text(q, schema))
        scored = [
            (-cosine(query_vec, translator.embed(_task_text(ex.task, schema))),
             _task_text(ex.task, schema), ex)
            for ex in filtered
        ]
        ordered = [ex for _, _, ex in sorted(scored, key=lambda s: (s[0], s[1]))]
    else:
        rng = random.Random(spec.seed)
        ordered = list(filtered)
        rng.shuffle(ordered)
    start = slot * spec.n_examples
    count = min(spec.n_examples, len(ordered))
    return [ordered[(start + t) % len(ordered)] for t in range(count)]


def _abstract_block(rule: HornRule, schema: VerbalizationSchema) -> str:
    lines = [f"Task: {atom_to_text(rule.head, schema)}"]
    lines += [
        f"Step {i}: {atom_to_text(atom, schema)}" for i, atom in enumerate(rule.body, 1)
    ]
    return "\n".join(lines)


def _grounded_block(ex: RuleExample, schema: VerbalizationSchema) -> str:
    lines = [f"Task: {schema.verbalize(ex.task)}"]
    lines += [
        f"Step {i}: {schema.verbalize(step)}" for i, step in enumerate(ex.steps, 1)
    ]
    return "\n".join(lines)


def build_prompt(
    examples: Sequence[RuleExample],
    q: Triple,
    spec: PromptSpec,
    schema: VerbalizationSchema,
) -> str:
    """Byte-exact prompt text for a variant.

    lmlp renders each example as its abstract rule block followed by its
    grounded block; lmlp-reverse swaps the two; only-rule keeps the abstract
    block alone; no-prompt is just the task line.  Examples are separated by a
    blank line, and the query task line ends the prompt with a newline.
    """
    task_line = f"Task: {_task_text(q, schema)}"
    if spec.variant == "no-prompt" or not examples:
        return task_line + "\n"
    blocks = []
    for ex in examples:
        abstract = _abstract_block(ex.abstract, schema)
        grounded = _grounded_block(ex, schema)
        if spec.variant == "lmlp":
            blocks.append(abstract + "\n" + grounded)
        elif spec.variant == "lmlp-reverse":
            blocks.append(grounded + "\n" + abstract)
        elif spec.variant == "only-rule":
            blocks.append(abstract)
        else:
            raise AssertionError(spec.variant)
    return "\n\n".join(blocks) + "\n\n" + task_line + "\n"


def extend_prompt(prompt: str, step_index: int, step_text: str) -> str:
    """Append an accepted projected fact to the prompt (never the raw output)."""
    return f"{prompt}Step {step_index}: {step_text}\n"


def prove(
    q: Triple,
    kb: KnowledgeBase,
    lib: RuleLibrary,
    spec: PromptSpec,
    planner: PlannerBackend,
    translator: TranslatorBackend,
    schema: VerbalizationSchema,
    table: Optional[CompositionTable] = None,
    cache: Optional[EmbeddingCache] = None,
    examples: Optional[Sequence[RuleExample]] = None,
) -> ProofTrace:
    """One greedy proof attempt.

    Each iteration slices the KB to facts whose subject is the frontier
    entity (minus used facts and the query triple), asks the planner for
    candidate sentences, projects the globally best candidate onto the slice,
    appends the winner to the prompt, and advances the frontier until the
    target entity, an empty slice, or the step budget.
    """
    if examples is None:
        examples = retrieve_examples(q, lib, spec, schema, translator=translator)
    prompt = build_prompt(examples, q, spec, schema)
    rule = examples[0].abstract if examples else None
    if cache is None:
        cache = EmbeddingCache(translator, schema)
    steps: list[tuple[Triple, float]] = []
    used: set[Triple] = set()
    current = q.subject
    status = "max_steps"
    for i in range(1, spec.max_steps + 1):
        slice_facts = [
            f for f in kb.facts_with_subject(current)
            if f != q and (not spec.exclude_used_facts or f not in used)
        ]
        if not slice_facts:
            status = "empty_slice"
            break
        state = PromptState(text=prompt, current=current, step_index=i, rule=rule,
                            schema=schema)
        candidates = planner.propose(state, spec.candidates, spec.temperature, spec.seed)
        result = project(candidates, slice_facts, translator, schema, cache)
        if spec.min_score is not None and result.score < spec.min_score:
            status = "empty_slice"  # nothing acceptable left in the slice
            break
        steps.append((result.fact, result.score))
        used.add(result.fact)
        prompt = extend_prompt(prompt, i, schema.verbalize(result.fact))
        current = result.fact.object
        if current == q.object:
            status = "reached"
            break
    reach = status == "reached"
    verified = False
    if reach and table is not None:
        verified = compose_path([f for f, _ in steps], table) == q.relation
    return ProofTrace(query=q, prompt_text=prompt, steps=tuple(steps), status=status,
                      reach=reach, verified=verified)


def _succeeded(trace: ProofTrace, spec: PromptSpec) -> bool:
    return trace.verified if spec.success_on == "verified" else trace.reach


def ensemble_prove(
    q: Triple,
    kb: KnowledgeBase,
    lib: RuleLibrary,
    spec: PromptSpec,
    planner: PlannerBackend,
    translator: TranslatorBackend,
    schema: VerbalizationSchema,
    table: Optional[CompositionTable] = None,
    cache: Optional[EmbeddingCache] = None,
    stop_on_success: bool = True,
) -> EnsembleResult:
    """K alternative prompts for one task; success if any slot succeeds.

    Slot selections are prefixes of one seeded ordering, so success is
    structurally nondecreasing in K for a fixed seed.
    """
    traces: list[ProofTrace] = []
    first_success: Optional[int] = None
    for slot in range(spec.k):
        examples = retrieve_examples(q, lib, spec, schema, translator=translator,
                                     slot=slot)
        trace = prove(q, kb, lib, spec, planner, translator, schema, table=table,
                      cache=cache, examples=examples)
        traces.append(trace)
        if _succeeded(trace, spec) and first_success is None:
            first_success = slot
            if stop_on_success:
                break
    return EnsembleResult(
        per_prompt=tuple(traces),
        success_any=first_success is not None,
        first_success_index=first_success,
    )


def record_oracle_fixture(
    items: Sequence[tuple[Triple, Sequence[Triple]]],
    lib: RuleLibrary,
    spec: PromptSpec,
    schema: VerbalizationSchema,
    translator: Optional[TranslatorBackend] = None,
) -> dict[str, list[str]]:
    """Replay fixture that makes a ReplayPlanner emit known proof steps.

    For each (query, proof steps) pair, simulates the prompt evolution prove()
    produces when every projected winner equals the proposed sentence (the
    exact-string translator guarantees this) and records the next step's
    verbalization at each prompt hash, for every ensemble slot.
    """
    fixture: dict[str, list[str]] = {}
    for q, proof_steps in items:
        for slot in range(spec.k):
            examples = retrieve_examples(q, lib, spec, schema, translator=translator,
                                         slot=slot)
            prompt = build_prompt(examples, q, spec, schema)
            for i, fact in enumerate(proof_steps, 1):
                text = schema.verbalize(fact)
                key = replay_key(prompt, spec.candidates)
                previous = fixture.get(key)
                if previous is not None and previous[0] != text:
                    log.warning(
                        "conflicting recordings for one prompt (same task, different "
                        "proofs); keeping the last — record per bucket to avoid this"
                    )
                fixture[key] = [text] * spec.candidates
                prompt = extend_prompt(prompt, i, text)
    return fixture
