"""Fact triples, verbalization schemas, and subject-indexed knowledge bases."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator

from .errors import UnknownRelation, UnparsableText

EntityId = str
RelationId = str


@dataclass(frozen=True, order=True)
class Triple:
    """A (subject, relation, object) fact."""

    subject: EntityId
    relation: RelationId
    object: EntityId

    def __post_init__(self) -> None:
        for part in (self.subject, self.relation, self.object):
            if not part or part != part.strip():
                raise ValueError(f"triple parts must be non-empty and trimmed: {self!r}")

    def as_list(self) -> list[str]:
        return [self.subject, self.relation, self.object]


class VerbalizationSchema:
    """Renders triples to canonical text and parses them back.

    Templates are plain strings with ``{s}`` and ``{o}`` placeholders, one per
    relation, loaded from a JSON map so new domains need no code changes.
    """

    def __init__(self, templates: dict[RelationId, str], style: str = "infix") -> None:
        self.style = style
        self.templates = dict(templates)
        self._patterns: dict[RelationId, re.Pattern[str]] = {}
        for relation, template in self.templates.items():
            if "{s}" not in template or "{o}" not in template:
                raise ValueError(f"template for {relation!r} lacks {{s}}/{{o}}")
            pattern = re.escape(template).replace(r"\{s\}", "(?P<s>.+?)").replace(
                r"\{o\}", "(?P<o>.+)"
            )
            self._patterns[relation] = re.compile(f"^{pattern}$")

    @classmethod
    def from_file(cls, path: str | Path) -> "VerbalizationSchema":
        data = json.loads(Path(path).read_text())
        return cls(data["templates"], style=data.get("style", "infix"))

    @classmethod
    def bundled(cls, name: str) -> "VerbalizationSchema":
        """Load a schema shipped in the package data directory."""
        text = resources.files("kbreason.data").joinpath(f"{name}_schema.json").read_text()
        data = json.loads(text)
        return cls(data["templates"], style=data.get("style", "infix"))

    @property
    def relations(self) -> list[RelationId]:
        return list(self.templates)

    def verbalize(self, t: Triple) -> str:
        if t.relation not in self.templates:
            raise UnknownRelation(t.relation)
        return self.templates[t.relation].format(s=t.subject, o=t.object)

    def parse(self, text: str) -> Triple:
        stripped = text.strip()
        for relation, pattern in self._patterns.items():
            m = pattern.match(stripped)
            if m:
                return Triple(m.group("s").strip(), relation, m.group("o").strip())
        raise UnparsableText(text)


def verbalize(t: Triple, schema: VerbalizationSchema) -> str:
    return schema.verbalize(t)


def parse_predicate(text: str, schema: VerbalizationSchema) -> Triple:
    return schema.parse(text)


class KnowledgeBase:
    """An immutable, subject-indexed fact set.

    Facts keep insertion order (duplicates dropped); the subject index covers
    exactly the fact set in that order, so downstream tie-breaks reproduce.
    """

    facts: tuple[Triple, ...]
    subject_index: dict[EntityId, tuple[Triple, ...]]
    entity_vocab: tuple[EntityId, ...]
    relation_vocab: tuple[RelationId, ...]

    def __init__(self, facts: Iterable[Triple] = ()) -> None:
        seen: dict[Triple, None] = {}
        for f in facts:
            seen.setdefault(f)
        ordered = tuple(seen)
        index: dict[EntityId, list[Triple]] = {}
        entities: dict[EntityId, None] = {}
        relations: dict[RelationId, None] = {}
        for f in ordered:
            index.setdefault(f.subject, []).append(f)
            entities.setdefault(f.subject)
            entities.setdefault(f.object)
            relations.setdefault(f.relation)
        object.__setattr__(self, "facts", ordered)
        object.__setattr__(self, "subject_index", {s: tuple(fs) for s, fs in index.items()})
        object.__setattr__(self, "entity_vocab", tuple(entities))
        object.__setattr__(self, "relation_vocab", tuple(relations))

    def __len__(self) -> int:
        return len(self.facts)

    def __contains__(self, t: Triple) -> bool:
        return t in self._fact_set

    def __iter__(self) -> Iterator[Triple]:
        return iter(self.facts)

    @property
    def _fact_set(self) -> frozenset[Triple]:
        cached = self.__dict__.get("_fact_set_cache")
        if cached is None:
            cached = frozenset(self.facts)
            self.__dict__["_fact_set_cache"] = cached
        return cached

    def facts_with_subject(self, s: EntityId) -> list[Triple]:
        return list(self.subject_index.get(s, ()))

    def union(self, other: "KnowledgeBase | Iterable[Triple]") -> "KnowledgeBase":
        extra = other.facts if isinstance(other, KnowledgeBase) else tuple(other)
        return KnowledgeBase(self.facts + tuple(extra))

    @classmethod
    def from_file(cls, path: str | Path) -> "KnowledgeBase":
        """Load line-delimited facts: tab-separated triples or {"s","p","o"} JSON."""
        facts = []
        for line in Path(path).read_text().splitlines():
            line = line.strip()
            if not line:
                continue
            facts.append(parse_fact_line(line))
        return cls(facts)

    def to_file(self, path: str | Path) -> None:
        lines = [f"{f.subject}\t{f.relation}\t{f.object}" for f in self.facts]
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def parse_fact_line(line: str) -> Triple:
    if line.startswith("{"):
        record = json.loads(line)
        return Triple(record["s"], record["p"], record["o"])
    parts = line.split("\t")
    if len(parts) != 3:
        raise UnparsableText(line)
    return Triple(parts[0].strip(), parts[1].strip(), parts[2].strip())
