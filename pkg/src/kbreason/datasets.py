"""Synthetic benchmark curation: kinship graphs with controllable proof
length, countries-style link-prediction tasks, noise injection, and paired
natural-language story rendering."""
from __future__ import annotations

import hashlib
import json
import logging
import random
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import InfeasibleSize, UnprovableTestQuery, VocabTooSmall
from .kb import EntityId, KnowledgeBase, RelationId, Triple, VerbalizationSchema
from .oracle import CompositionTable, RuleLibrary, compose_path, extract_rule_library, find_ground_paths

log = logging.getLogger(__name__)

RULE_LENGTHS = (2, 3, 4)


def _load_data_json(name: str):
    return json.loads(resources.files("kbreason.data").joinpath(name).read_text())


def kinship_schema() -> VerbalizationSchema:
    return VerbalizationSchema.bundled("kinship")


def countries_schema() -> VerbalizationSchema:
    return VerbalizationSchema.bundled("countries")


def kinship_composition() -> CompositionTable:
    return CompositionTable.bundled("kinship")


def countries_composition() -> CompositionTable:
    return CompositionTable.bundled("countries")


def countries_mini_kb() -> KnowledgeBase:
    text = resources.files("kbreason.data").joinpath("countries_mini.tsv").read_text()
    from .kb import parse_fact_line

    return KnowledgeBase(parse_fact_line(line) for line in text.splitlines() if line.strip())


def derive_seed(seed: int, *parts) -> int:
    key = json.dumps([seed, *parts]).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "big")


@dataclass
class Person:
    name: str
    gender: str  # "male" | "female"
    father: Optional[str] = None
    mother: Optional[str] = None
    spouse: Optional[str] = None
    children: list[str] = field(default_factory=list)


@dataclass
class FamilyGraph:
    """A gender-consistent family tree and its emitted core kinship facts.

    Only parent/child, spouse, and sibling edges are emitted; derived
    relations (grandparents, uncles, in-laws, ...) appear as composition
    targets, which keeps the composition table total over length-2 fact paths.
    """

    people: dict[str, Person]
    facts: KnowledgeBase
    seed: int


def _sibling_pairs(people: dict[str, Person]) -> list[tuple[str, str]]:
    pairs = []
    for name, p in people.items():
        if p.father is None:
            continue
        for other, q in people.items():
            if other != name and q.father == p.father and q.mother == p.mother:
                pairs.append((name, other))
    return pairs


def generate_family_graph(n_entities: int, seed: int) -> FamilyGraph:
    """Deterministic family tree: monogamous couples, all children born to
    couples, spouses always married in from outside (so siblings are full
    siblings and spouses have no blood relatives in the graph)."""
    if n_entities < 4:
        raise InfeasibleSize(f"need at least 4 entities, got {n_entities}")
    rng = random.Random(derive_seed(seed, "family"))
    names = _load_data_json("names.json")
    male_pool = list(names["male"])
    female_pool = list(names["female"])
    rng.shuffle(male_pool)
    rng.shuffle(female_pool)
    counters = {"male": 0, "female": 0}

    people: dict[str, Person] = {}

    def new_person(gender: str) -> str:
        pool = male_pool if gender == "male" else female_pool
        i = counters[gender]
        counters[gender] += 1
        name = pool[i % len(pool)] if i < len(pool) else f"{pool[i % len(pool)]}{i // len(pool)}"
        people[name] = Person(name=name, gender=gender)
        return name

    def marry(a: str, b: str) -> None:
        people[a].spouse = b
        people[b].spouse = a

    husband = new_person("male")
    wife = new_person("female")
    marry(husband, wife)
    couples = [(husband, wife)]

    while len(people) < n_entities:
        singles = [
            p.name for p in people.values()
            if p.spouse is None and p.father is not None
        ]
        if singles and rng.random() < 0.35:
            who = rng.choice(sorted(singles))
            other = new_person("female" if people[who].gender == "male" else "male")
            marry(who, other)
            pair = (who, other) if people[who].gender == "male" else (other, who)
            couples.append(pair)
        else:
            father, mother = couples[rng.randrange(len(couples))]
            gender = rng.choice(["male", "female"])
            child = new_person(gender)
            people[child].father = father
            people[child].mother = mother
            people[father].children.append(child)
            people[mother].children.append(child)

    facts: list[Triple] = []
    for name in people:
        p = people[name]
        if p.father:
            facts.append(Triple(name, "father", p.father))
        if p.mother:
            facts.append(Triple(name, "mother", p.mother))
        if p.spouse:
            facts.append(Triple(name, "husband" if people[p.spouse].gender == "male" else "wife",
                                p.spouse))
        for child in p.children:
            facts.append(Triple(name, "son" if people[child].gender == "male" else "daughter",
                                child))
    for a, b in _sibling_pairs(people):
        facts.append(Triple(a, "brother" if people[b].gender == "male" else "sister", b))
    return FamilyGraph(people=people, facts=KnowledgeBase(facts), seed=seed)


def sample_relation_chain(
    graph: FamilyGraph,
    length: int,
    rng: random.Random,
    table: CompositionTable,
    node_budget: int = 100_000,
) -> Optional[tuple[list[Triple], RelationId]]:
    """A simple fact chain of the exact length whose left-fold composition is
    defined, or None if the budget runs out."""
    budget = [node_budget]

    def extend(current: EntityId, chain: list[Triple], visited: set[EntityId],
               run: Optional[RelationId]) -> Optional[list[Triple]]:
        if len(chain) == length:
            return list(chain)
        if budget[0] <= 0:
            return None
        budget[0] -= 1
        edges = list(graph.facts.facts_with_subject(current))
        rng.shuffle(edges)
        for edge in edges:
            if edge.object in visited:
                continue
            new_run = edge.relation if run is None else table.compose(run, edge.relation)
            if new_run is None:
                continue
            chain.append(edge)
            visited.add(edge.object)
            result = extend(edge.object, chain, visited, new_run)
            if result is not None:
                return result
            chain.pop()
            visited.remove(edge.object)
        return None

    starts = sorted(graph.facts.subject_index)
    rng.shuffle(starts)
    for start in starts:
        chain = extend(start, [], {start}, None)
        if chain is not None:
            relation = compose_path(chain, table)
            assert relation is not None
            return chain, relation
    return None


@dataclass(frozen=True)
class Instance:
    """One reasoning instance: a query plus the facts of its own story."""

    query: Triple
    facts: tuple[Triple, ...]

    def kb(self) -> KnowledgeBase:
        return KnowledgeBase(self.facts)


@dataclass
class ClutrrCorpus:
    """Generated kinship benchmark: rule-extraction instances (short lengths)
    and query splits (long lengths)."""

    rule_instances: dict[int, list[Instance]]
    query_instances: dict[int, list[Instance]]
    seed: int
    per_length: int

    def rule_pairs(self) -> list[tuple[Triple, KnowledgeBase]]:
        pairs = []
        for length in sorted(self.rule_instances):
            for inst in self.rule_instances[length]:
                pairs.append((inst.query, inst.kb()))
        return pairs

    def distractor_pool(self) -> KnowledgeBase:
        facts: list[Triple] = []
        for length in sorted(self.rule_instances):
            for inst in self.rule_instances[length]:
                facts.extend(inst.facts)
        return KnowledgeBase(facts)

    def bucket_kb(self, length: int, setting: str = "test-facts") -> KnowledgeBase:
        """The fact set F for one query bucket: the bucket's own facts, plus
        the rule-corpus facts as distractors in the all-facts setting."""
        instances = self.query_instances.get(length) or self.rule_instances[length]
        facts: list[Triple] = []
        for inst in instances:
            facts.extend(inst.facts)
        kb = KnowledgeBase(facts)
        if setting == "all-facts":
            kb = kb.union(self.distractor_pool())
        elif setting != "test-facts":
            raise ValueError(f"unknown setting {setting!r}")
        return kb


def build_clutrr_split(
    lengths: Sequence[int],
    per_length: int,
    seed: int,
    graph_extra_entities: int = 8,
    max_attempts: int = 40,
) -> ClutrrCorpus:
    """Kinship instances for each requested length; lengths 2-4 feed the rule
    library, 5+ feed the query splits.  Bit-reproducible per seed."""
    if any(length < 2 or length > 10 for length in lengths):
        raise ValueError("lengths must lie in [2, 10]")
    table = kinship_composition()
    rule_instances: dict[int, list[Instance]] = {}
    query_instances: dict[int, list[Instance]] = {}
    for length in sorted(lengths):
        bucket: list[Instance] = []
        for j in range(per_length):
            inst_seed = derive_seed(seed, "clutrr", length, j)
            instance = None
            for attempt in range(max_attempts):
                graph = generate_family_graph(length + graph_extra_entities,
                                              derive_seed(inst_seed, attempt))
                rng = random.Random(derive_seed(inst_seed, "chain", attempt))
                sampled = sample_relation_chain(graph, length, rng, table)
                if sampled is None:
                    continue
                chain, relation = sampled
                query = Triple(chain[0].subject, relation, chain[-1].object)
                if query in chain:
                    continue
                instance = Instance(query=query, facts=tuple(chain))
                break
            if instance is None:
                raise UnprovableTestQuery(
                    f"could not sample a length-{length} instance (seed {seed}, index {j})"
                )
            bucket.append(instance)
        target = rule_instances if length in RULE_LENGTHS else query_instances
        target[length] = bucket
    return ClutrrCorpus(rule_instances=rule_instances, query_instances=query_instances,
                        seed=seed, per_length=per_length)


def build_rule_library(corpus: ClutrrCorpus, max_len: int = 4) -> RuleLibrary:
    return extract_rule_library(corpus.rule_pairs(), max_len, kinship_composition())


@dataclass(frozen=True)
class NoiseConfig:
    rate: float
    base: int = 5000
    seed: int = 0

    @property
    def count(self) -> int:
        return int(round(self.rate * self.base))


def inject_noise(
    kb: KnowledgeBase,
    cfg: NoiseConfig,
    protected: Iterable[Triple] = (),
) -> KnowledgeBase:
    """Adds exactly round(rate * base) uniformly sampled distinct facts over
    the KB's own vocabulary, never touching existing or protected triples."""
    needed = cfg.count
    if needed == 0:
        return kb
    entities = list(kb.entity_vocab)
    relations = list(kb.relation_vocab)
    if not entities or not relations:
        raise VocabTooSmall("cannot sample noise from an empty vocabulary")
    protected_set = set(protected)
    rng = random.Random(derive_seed(cfg.seed, "noise"))
    added: list[Triple] = []
    added_set: set[Triple] = set()
    attempts = 0
    cap = max(100_000, needed * 200)
    while len(added) < needed:
        attempts += 1
        if attempts > cap:
            raise VocabTooSmall(
                f"could not find {needed} distinct noise facts in {cap} attempts"
            )
        s = rng.choice(entities)
        o = rng.choice(entities)
        if s == o:
            continue
        p = rng.choice(relations)
        t = Triple(s, p, o)
        if t in kb or t in protected_set or t in added_set:
            continue
        added.append(t)
        added_set.add(t)
    return kb.union(added)


@dataclass
class CountriesTask:
    task: str
    train_kb: KnowledgeBase
    test_queries: list[Triple]
    max_depth: int
    removed: tuple[Triple, ...]


COUNTRIES_DEPTH = {"S1": 2, "S2": 3, "S3": 4}


def _classify_geo(raw: KnowledgeBase) -> tuple[set[str], set[str], set[str]]:
    located_subjects = {f.subject for f in raw.facts if f.relation == "locatedIn"}
    located_objects = {f.object for f in raw.facts if f.relation == "locatedIn"}
    regions = located_objects - located_subjects
    subregions = located_objects & located_subjects
    countries = located_subjects - located_objects
    return countries, subregions, regions


def build_countries_tasks(
    raw: KnowledgeBase,
    task: str,
    test_fraction: float = 0.2,
    seed: int = 0,
) -> CountriesTask:
    """Hold out test countries and remove location facts per task difficulty.

    S1 removes the test country's direct country->region fact; S2 also its
    country->subregion facts; S3 additionally the region-path facts of all its
    neighbors.  Candidates whose query would become unprovable within the
    task's depth bound are skipped (resampled).
    """
    if task not in COUNTRIES_DEPTH:
        raise ValueError(f"unknown countries task {task!r}")
    table = countries_composition()
    countries, subregions, regions = _classify_geo(raw)
    region_of = {
        f.subject: f.object
        for f in raw.facts
        if f.relation == "locatedIn" and f.subject in countries and f.object in regions
    }
    neighbors: dict[str, list[str]] = {}
    for f in raw.facts:
        if f.relation == "neighborOf":
            neighbors.setdefault(f.subject, []).append(f.object)

    def removals(c: str) -> set[Triple]:
        out = {Triple(c, "locatedIn", region_of[c])}
        if task in ("S2", "S3"):
            out |= {
                f for f in raw.facts_with_subject(c)
                if f.relation == "locatedIn" and f.object in subregions
            }
        if task == "S3":
            for n in neighbors.get(c, []):
                out |= {
                    f for f in raw.facts_with_subject(n)
                    if f.relation == "locatedIn"
                }
        return out

    depth = COUNTRIES_DEPTH[task]
    rng = random.Random(derive_seed(seed, "countries", task))
    candidates = sorted(c for c in countries if c in region_of)
    rng.shuffle(candidates)
    target = max(1, int(round(test_fraction * len(candidates))))

    def provable(c: str, removed: set[Triple]) -> bool:
        kb = KnowledgeBase(f for f in raw.facts if f not in removed)
        goal_region = region_of[c]
        for path in find_ground_paths(kb, c, goal_region, depth):
            if compose_path(path, table) == "locatedIn":
                return True
        return False

    removed: set[Triple] = set()
    chosen: list[str] = []
    for c in candidates:
        if len(chosen) >= target:
            break
        tentative = removed | removals(c)
        if all(provable(x, tentative) for x in chosen + [c]):
            removed = tentative
            chosen.append(c)
        else:
            log.debug("skipping unprovable test country %s for %s", c, task)
    if not chosen:
        raise UnprovableTestQuery(f"no provable test countries for task {task}")
    train_kb = KnowledgeBase(f for f in raw.facts if f not in removed)
    queries = [Triple(c, "locatedIn", region_of[c]) for c in sorted(chosen)]
    return CountriesTask(task=task, train_kb=train_kb, test_queries=queries,
                         max_depth=depth, removed=tuple(sorted(removed)))


class StoryTemplates:
    """Sentence templates per relation, with a parser that inverts them."""

    def __init__(self, templates: Optional[dict[str, list[str]]] = None) -> None:
        self.templates = templates or _load_data_json("story_templates.json")
        self._patterns: list[tuple[str, re.Pattern[str]]] = []
        for relation, variants in self.templates.items():
            for template in variants:
                pattern = re.escape(template).replace(r"\{s\}", "(?P<s>.+?)").replace(
                    r"\{o\}", "(?P<o>.+?)"
                )
                self._patterns.append((relation, re.compile(f"^{pattern}$")))

    def render(self, fact: Triple, rng: random.Random) -> str:
        variants = self.templates[fact.relation]
        template = variants[rng.randrange(len(variants))]
        return template.format(s=fact.subject, o=fact.object)

    def parse_sentence(self, sentence: str) -> Triple:
        for relation, pattern in self._patterns:
            m = pattern.match(sentence.strip())
            if m:
                return Triple(m.group("s"), relation, m.group("o"))
        raise ValueError(f"no story template matches: {sentence!r}")


def render_story(
    facts: Sequence[Triple],
    schema: VerbalizationSchema,
    seed: int = 0,
    templates: Optional[StoryTemplates] = None,
) -> str:
    """One templated sentence per fact, in seeded shuffled order."""
    del schema  # kinship-only; the template inventory fixes the surface forms
    if not facts:
        return ""
    templates = templates or StoryTemplates()
    rng = random.Random(derive_seed(seed, "story"))
    sentences = [templates.render(f, rng) for f in facts]
    rng.shuffle(sentences)
    return " ".join(sentences)


def parse_story(story: str, templates: Optional[StoryTemplates] = None) -> list[Triple]:
    templates = templates or StoryTemplates()
    if not story.strip():
        return []
    sentences = re.split(r"(?<=\.)\s+", story.strip())
    return [templates.parse_sentence(s) for s in sentences if s]


def save_corpus(corpus: ClutrrCorpus, out_dir: str | Path, force: bool = False) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest_path = out / "manifest.json"
    if manifest_path.exists() and not force:
        raise FileExistsError(f"{manifest_path} exists; pass force to overwrite")
    buckets = {}
    for group, instances in (("rules", corpus.rule_instances),
                             ("queries", corpus.query_instances)):
        for length, bucket in sorted(instances.items()):
            name = f"l{length}.jsonl"
            lines = [
                json.dumps({"query": inst.query.as_list(),
                            "facts": [f.as_list() for f in inst.facts]})
                for inst in bucket
            ]
            (out / name).write_text("\n".join(lines) + "\n")
            buckets[str(length)] = {"group": group, "file": name, "count": len(bucket)}
    manifest = {
        "type": "clutrr-style",
        "seed": corpus.seed,
        "per_length": corpus.per_length,
        "buckets": buckets,
        "noise_sampling": "vocab-uniform",
    }
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_path


def load_corpus(in_dir: str | Path) -> ClutrrCorpus:
    src = Path(in_dir)
    manifest = json.loads((src / "manifest.json").read_text())
    rule_instances: dict[int, list[Instance]] = {}
    query_instances: dict[int, list[Instance]] = {}
    for length_str, meta in manifest["buckets"].items():
        length = int(length_str)
        bucket = []
        for line in (src / meta["file"]).read_text().splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            bucket.append(Instance(
                query=Triple(*rec["query"]),
                facts=tuple(Triple(*f) for f in rec["facts"]),
            ))
        target = rule_instances if meta["group"] == "rules" else query_instances
        target[length] = bucket
    return ClutrrCorpus(rule_instances=rule_instances, query_instances=query_instances,
                        seed=manifest["seed"], per_length=manifest["per_length"])
