"""Symbolic ground truth: unification, backward chaining, path search,
relation composition, and rule-library extraction."""
from __future__ import annotations

import json
import logging
import string
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .errors import ChainBroken
from .kb import EntityId, KnowledgeBase, RelationId, Triple, VerbalizationSchema

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Variable:
    name: str

    def __repr__(self) -> str:
        return f"?{self.name}"


Term = Union[Variable, EntityId]


@dataclass(frozen=True)
class Atom:
    """A binary predicate whose arguments are variables or entity constants."""

    relation: RelationId
    arg1: Term
    arg2: Term

    def substitute(self, bindings: dict[str, "Term"]) -> "Atom":
        return Atom(self.relation, _walk(self.arg1, bindings), _walk(self.arg2, bindings))

    def is_ground(self) -> bool:
        return not isinstance(self.arg1, Variable) and not isinstance(self.arg2, Variable)

    def to_triple(self) -> Triple:
        if not self.is_ground():
            raise ValueError(f"atom is not ground: {self}")
        return Triple(self.arg1, self.relation, self.arg2)


def _walk(term: Term, bindings: dict[str, Term]) -> Term:
    """Follow variable-to-variable aliases until a constant or free variable."""
    while isinstance(term, Variable) and term.name in bindings:
        term = bindings[term.name]
    return term


@dataclass(frozen=True)
class HornRule:
    """A chain rule: head(A, Z) <- body1(A, B), body2(B, C), ..., bodyN(Y, Z)."""

    head: Atom
    body: tuple[Atom, ...]

    def __post_init__(self) -> None:
        if not self.body:
            raise ValueError("rule body must be non-empty")

    @classmethod
    def chain(cls, head_relation: RelationId, body_relations: Sequence[RelationId]) -> "HornRule":
        """Build a chain rule over fresh variables A, B, C, ..."""
        names = _variable_names(len(body_relations) + 1)
        variables = [Variable(n) for n in names]
        body = tuple(
            Atom(r, variables[i], variables[i + 1]) for i, r in enumerate(body_relations)
        )
        head = Atom(head_relation, variables[0], variables[-1])
        return cls(head, body)

    def renamed(self, suffix: str) -> "HornRule":
        def rename(term: Term) -> Term:
            return Variable(term.name + suffix) if isinstance(term, Variable) else term

        return HornRule(
            Atom(self.head.relation, rename(self.head.arg1), rename(self.head.arg2)),
            tuple(Atom(a.relation, rename(a.arg1), rename(a.arg2)) for a in self.body),
        )


AbstractRule = HornRule


def _variable_names(count: int) -> list[str]:
    letters = string.ascii_uppercase
    names = []
    for i in range(count):
        name = letters[i % 26] if i < 26 else f"{letters[i % 26]}{i // 26}"
        names.append(name)
    return names


def unify(a: Atom, t: Triple, bindings: dict[str, Term]) -> Optional[dict[str, Term]]:
    """Minimal extension of ``bindings`` making ``a`` ground-equal to ``t``.

    Returns None on failure; the input mapping is never mutated.
    """
    if a.relation != t.relation:
        return None
    out = dict(bindings)
    for term, value in ((a.arg1, t.subject), (a.arg2, t.object)):
        resolved = _walk(term, out)
        if isinstance(resolved, Variable):
            out[resolved.name] = value
        elif resolved != value:
            return None
    return out


@dataclass(frozen=True)
class Proof:
    """A chain of KB facts establishing a goal triple."""

    goal: Triple
    steps: tuple[Triple, ...]
    depth: int


def check_chain(steps: Sequence[Triple]) -> None:
    for prev, nxt in zip(steps, steps[1:]):
        if prev.object != nxt.subject:
            raise ChainBroken(f"{prev} -> {nxt}")


def backward_chain(
    goal: Triple,
    kb: KnowledgeBase,
    rules: Sequence[HornRule],
    max_depth: int,
) -> list[Proof]:
    """All fact-chain proofs of ``goal`` using at most ``max_depth`` rule expansions.

    SLD resolution with leftmost atom selection; rules are tried before the
    direct fact lookup at each node, in rule order then KB fact order.  Proof
    chains never revisit an entity, so they are simple paths from the goal
    subject to the goal object.  Duplicate chains (reachable through different
    expansion orders) are reported once, at the smallest depth found.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    found: dict[tuple[Triple, ...], int] = {}

    def solve(
        pending: tuple[Atom, ...],
        bindings: dict[str, Term],
        steps: tuple[Triple, ...],
        visited: frozenset[EntityId],
        budget: int,
        depth_used: int,
    ) -> None:
        if not pending:
            prior = found.get(steps)
            if prior is None or depth_used < prior:
                found[steps] = depth_used
            return
        atom = pending[0].substitute(bindings)
        if budget > 0:
            for i, rule in enumerate(rules):
                fresh = rule.renamed(f"#{depth_used}.{i}")
                b = _unify_atoms(fresh.head, atom, bindings)
                if b is not None:
                    solve(fresh.body + pending[1:], b, steps, visited, budget - 1,
                          depth_used + 1)
        candidates = (
            kb.facts_with_subject(atom.arg1)
            if not isinstance(atom.arg1, Variable)
            else kb.facts
        )
        for fact in candidates:
            b = unify(atom, fact, bindings)
            if b is None:
                continue
            if fact.object in visited:
                continue
            solve(pending[1:], b, steps + (fact,), visited | {fact.object},
                  budget, depth_used)

    start = Atom(goal.relation, goal.subject, goal.object)
    solve((start,), {}, (), frozenset({goal.subject}), max_depth, 0)
    ordered = sorted(found.items(), key=lambda item: (len(item[0]), item[0]))
    return [Proof(goal, steps, depth) for steps, depth in ordered]


def _unify_atoms(
    head: Atom, goal: Atom, bindings: dict[str, Term]
) -> Optional[dict[str, Term]]:
    """Unify a (fresh-variable) rule head with a possibly non-ground goal atom."""
    if head.relation != goal.relation:
        return None
    out = dict(bindings)
    for h_term, g_term in ((head.arg1, goal.arg1), (head.arg2, goal.arg2)):
        h = _walk(h_term, out)
        g = _walk(g_term, out)
        if isinstance(g, Variable) and isinstance(h, Variable):
            if g.name != h.name:
                out[g.name] = h
        elif isinstance(h, Variable):
            out[h.name] = g
        elif isinstance(g, Variable):
            out[g.name] = h
        elif h != g:
            return None
    return out


def find_ground_paths(
    kb: KnowledgeBase, src: EntityId, dst: EntityId, max_len: int
) -> list[list[Triple]]:
    """All simple fact chains from ``src`` to ``dst`` of length <= ``max_len``."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    paths: list[list[Triple]] = []

    def walk(current: EntityId, visited: frozenset[EntityId], chain: list[Triple]) -> None:
        for fact in kb.facts_with_subject(current):
            if fact.object in visited:
                continue
            next_chain = chain + [fact]
            if fact.object == dst:
                paths.append(next_chain)
            elif len(next_chain) < max_len:
                walk(fact.object, visited | {fact.object}, next_chain)

    if src != dst:
        walk(src, frozenset({src}), [])
    paths.sort(key=lambda p: (len(p), tuple(p)))
    return paths


class CompositionTable:
    """Partial map (r1, r2) -> r3 used to fold a fact chain into one relation."""

    def __init__(self, entries: Iterable[tuple[RelationId, RelationId, RelationId]]) -> None:
        self._map: dict[tuple[RelationId, RelationId], RelationId] = {}
        for r1, r2, r3 in entries:
            existing = self._map.get((r1, r2))
            if existing is not None and existing != r3:
                raise ValueError(f"conflicting entries for ({r1}, {r2})")
            self._map[(r1, r2)] = r3

    @classmethod
    def from_file(cls, path: str | Path) -> "CompositionTable":
        return cls(tuple(e) for e in json.loads(Path(path).read_text()))

    @classmethod
    def bundled(cls, name: str) -> "CompositionTable":
        text = resources.files("kbreason.data").joinpath(f"{name}_composition.json").read_text()
        return cls(tuple(e) for e in json.loads(text))

    def compose(self, r1: RelationId, r2: RelationId) -> Optional[RelationId]:
        return self._map.get((r1, r2))

    def items(self) -> list[tuple[RelationId, RelationId, RelationId]]:
        return [(r1, r2, r3) for (r1, r2), r3 in self._map.items()]


def compose_path(steps: Sequence[Triple], table: CompositionTable) -> Optional[RelationId]:
    """Left-fold of the table over the chain's relations; None if unmapped."""
    if not steps:
        return None
    check_chain(steps)
    result: Optional[RelationId] = steps[0].relation
    for step in steps[1:]:
        if result is None:
            return None
        result = table.compose(result, step.relation)
    return result


@dataclass(frozen=True)
class Verdict:
    reach: bool
    verified: bool
    reason: str = ""


def verify_trace(
    steps: Sequence[Triple],
    query: Triple,
    table: CompositionTable,
    kb: KnowledgeBase,
) -> Verdict:
    """Automatic trace check: reach (last object hits the target through a
    valid in-KB chain) and verified (reach plus composition agreement)."""
    if not steps:
        return Verdict(False, False, "empty trace")
    try:
        check_chain(steps)
    except ChainBroken as exc:
        return Verdict(False, False, f"chain broken: {exc}")
    outside = [s for s in steps if s not in kb]
    if outside:
        return Verdict(False, False, f"step not in KB: {outside[0]}")
    if steps[0].subject != query.subject:
        return Verdict(False, False, "first subject differs from query subject")
    if steps[-1].object != query.object:
        return Verdict(False, False, "last object differs from query target")
    composed = compose_path(steps, table)
    if composed != query.relation:
        return Verdict(True, False, f"composes to {composed!r}, not {query.relation!r}")
    return Verdict(True, True)


@dataclass(frozen=True)
class RuleExample:
    """A grounded proof demonstration: a task triple and its fact-chain steps."""

    task: Triple
    steps: tuple[Triple, ...]
    abstract: HornRule = field(compare=False)

    @classmethod
    def from_steps(cls, task: Triple, steps: Sequence[Triple]) -> "RuleExample":
        return cls(task, tuple(steps), abstract_steps(task, steps))


def abstract_steps(task: Triple, steps: Sequence[Triple]) -> HornRule:
    """Replace entities by variables A, B, C, ... in first-appearance order."""
    check_chain(steps)
    mapping: dict[EntityId, Variable] = {}

    def var_for(entity: EntityId) -> Variable:
        if entity not in mapping:
            mapping[entity] = Variable(_variable_names(len(mapping) + 1)[-1])
        return mapping[entity]

    var_for(task.subject)
    body = tuple(Atom(s.relation, var_for(s.subject), var_for(s.object)) for s in steps)
    head = Atom(task.relation, var_for(task.subject), var_for(task.object))
    return HornRule(head, body)


def abstract_example(ex: RuleExample) -> HornRule:
    return abstract_steps(ex.task, ex.steps)


class RuleLibrary:
    """Rule examples indexed by task relation."""

    def __init__(self, examples: Iterable[RuleExample] = ()) -> None:
        self.examples: list[RuleExample] = list(examples)
        self.by_relation: dict[RelationId, list[int]] = {}
        for i, ex in enumerate(self.examples):
            self.by_relation.setdefault(ex.task.relation, []).append(i)

    def __len__(self) -> int:
        return len(self.examples)

    def for_relation(self, relation: RelationId) -> list[RuleExample]:
        return [self.examples[i] for i in self.by_relation.get(relation, [])]

    def to_file(self, path: str | Path) -> None:
        records = []
        for ex in self.examples:
            records.append({
                "task": ex.task.as_list(),
                "steps": [s.as_list() for s in ex.steps],
                "abstract": {
                    "head": _atom_record(ex.abstract.head),
                    "body": [_atom_record(a) for a in ex.abstract.body],
                },
            })
        Path(path).write_text(json.dumps(records, indent=1) + "\n")

    @classmethod
    def from_file(cls, path: str | Path) -> "RuleLibrary":
        records = json.loads(Path(path).read_text())
        examples = []
        for rec in records:
            task = Triple(*rec["task"])
            steps = tuple(Triple(*s) for s in rec["steps"])
            examples.append(RuleExample.from_steps(task, steps))
        return cls(examples)


def _atom_record(atom: Atom) -> list[str]:
    def encode(term: Term) -> str:
        return f"?{term.name}" if isinstance(term, Variable) else term

    return [encode(atom.arg1), atom.relation, encode(atom.arg2)]


def atom_to_text(atom: Atom, schema: VerbalizationSchema) -> str:
    """Render an atom like a fact, with variable names as surface entities."""
    def surface(term: Term) -> str:
        return term.name if isinstance(term, Variable) else term

    return schema.verbalize(Triple(surface(atom.arg1), atom.relation, surface(atom.arg2)))


def extract_rule_library(
    train_kbs: Sequence[tuple[Triple, KnowledgeBase]],
    max_len: int,
    table: CompositionTable,
) -> RuleLibrary:
    """One grounded example per provable training query.

    Keeps the shortest fact chain whose composition equals the task relation,
    tie-broken lexicographically; unprovable queries are skipped with a warning.
    """
    if max_len < 2:
        raise ValueError("max_len must be >= 2")
    examples = []
    for task, kb in train_kbs:
        candidates = [
            p for p in find_ground_paths(kb, task.subject, task.object, max_len)
            if task not in p and compose_path(p, table) == task.relation
        ]
        if not candidates:
            log.warning("skipping unprovable training query %s", task)
            continue
        best = min(candidates, key=lambda p: (len(p), tuple(p)))
        examples.append(RuleExample.from_steps(task, best))
    return RuleLibrary(examples)
