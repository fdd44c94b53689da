import pytest

from kbreason.backends import (
    EmbeddingCache,
    ExactStringTranslator,
    HashNgramTranslator,
    ReplayPlanner,
    TemplatePlanner,
)
from kbreason.kb import KnowledgeBase, Triple
from kbreason.oracle import RuleExample, RuleLibrary
from kbreason.prover import (
    PromptSpec,
    build_prompt,
    ensemble_prove,
    extend_prompt,
    prove,
    record_oracle_fixture,
    retrieve_examples,
)


def sister_library():
    task = Triple("George", "sister", "Nancy")
    steps = [Triple("George", "brother", "Dale"), Triple("Dale", "sister", "Nancy")]
    return RuleLibrary([RuleExample.from_steps(task, steps)])


def sister_kb():
    return KnowledgeBase([
        Triple("Joseph", "brother", "Dale"),
        Triple("Dale", "sister", "Katherine"),
        Triple("Joseph", "father", "George"),
    ])


QUERY = Triple("Joseph", "sister", "Katherine")


def test_prompt_spec_validation():
    with pytest.raises(ValueError):
        PromptSpec(strategy="nope")
    with pytest.raises(ValueError):
        PromptSpec(variant="nope")
    with pytest.raises(ValueError):
        PromptSpec(k=0)
    with pytest.raises(ValueError):
        PromptSpec(success_on="maybe")


def test_build_prompt_variants(schema):
    lib = sister_library()
    examples = lib.examples
    lmlp = build_prompt(examples, QUERY, PromptSpec(variant="lmlp"), schema)
    assert lmlp == (
        "Task: A's sister is C\n"
        "Step 1: A's brother is B\n"
        "Step 2: B's sister is C\n"
        "Task: George's sister is Nancy\n"
        "Step 1: George's brother is Dale\n"
        "Step 2: Dale's sister is Nancy\n\n"
        "Task: Joseph's sister is Katherine\n"
    )
    reverse = build_prompt(examples, QUERY, PromptSpec(variant="lmlp-reverse"), schema)
    assert reverse.index("George's sister") < reverse.index("A's sister")
    only_rule = build_prompt(examples, QUERY, PromptSpec(variant="only-rule"), schema)
    assert "George" not in only_rule
    no_prompt = build_prompt([], QUERY, PromptSpec(variant="no-prompt"), schema)
    assert no_prompt == "Task: Joseph's sister is Katherine\n"


def test_extend_prompt_appends_step_line():
    assert extend_prompt("Task: q\n", 1, "x's brother is y") == \
        "Task: q\nStep 1: x's brother is y\n"


def test_retrieve_relation_match_and_fallback(schema, caplog):
    lib = sister_library()
    spec = PromptSpec(strategy="relation-match")
    got = retrieve_examples(QUERY, lib, spec, schema)
    assert [ex.task.relation for ex in got] == ["sister"]
    other = Triple("Joseph", "uncle", "Katherine")
    with caplog.at_level("WARNING"):
        fallback = retrieve_examples(other, lib, spec, schema)
    assert len(fallback) == 1
    assert "falling back" in caplog.text


def test_retrieve_task_similarity_orders_by_cosine(schema):
    near = RuleExample.from_steps(
        Triple("Joseph", "sister", "Nancy"),
        [Triple("Joseph", "brother", "D"), Triple("D", "sister", "Nancy")])
    far = RuleExample.from_steps(
        Triple("zzz", "uncle", "qqq"),
        [Triple("zzz", "father", "m"), Triple("m", "brother", "qqq")])
    lib = RuleLibrary([far, near])
    spec = PromptSpec(strategy="task-similarity")
    got = retrieve_examples(QUERY, lib, spec, schema, translator=HashNgramTranslator())
    assert got[0] is near
    with pytest.raises(ValueError):
        retrieve_examples(QUERY, lib, spec, schema)


def test_retrieve_prefix_slots_rotate(schema):
    examples = [
        RuleExample.from_steps(
            Triple(f"s{i}", "sister", f"o{i}"),
            [Triple(f"s{i}", "brother", f"m{i}"), Triple(f"m{i}", "sister", f"o{i}")])
        for i in range(4)
    ]
    lib = RuleLibrary(examples)
    spec = PromptSpec(strategy="relation-match", n_examples=1, k=4)
    picks = [retrieve_examples(QUERY, lib, spec, schema, slot=j)[0] for j in range(4)]
    assert len({ex.task.subject for ex in picks}) == 4
    # slots wrap around past the pool size
    again = retrieve_examples(QUERY, lib, spec, schema, slot=4)[0]
    assert again is picks[0]


def test_prove_reaches_target(schema, table):
    trace = prove(QUERY, sister_kb(), sister_library(), PromptSpec(), TemplatePlanner(),
                  HashNgramTranslator(), schema, table=table)
    assert trace.status == "reached"
    assert trace.reach and trace.verified
    assert trace.step_triples == [
        Triple("Joseph", "brother", "Dale"),
        Triple("Dale", "sister", "Katherine"),
    ]
    assert trace.prompt_text.endswith("Step 2: Dale's sister is Katherine\n")


def test_prove_empty_slice(schema, table):
    kb = KnowledgeBase([Triple("Joseph", "brother", "Dale")])
    trace = prove(QUERY, kb, sister_library(), PromptSpec(), TemplatePlanner(),
                  HashNgramTranslator(), schema, table=table)
    assert trace.status == "empty_slice"
    assert not trace.reach and not trace.verified


def test_prove_excludes_query_triple(schema, table):
    kb = sister_kb().union([QUERY])
    trace = prove(QUERY, kb, sister_library(), PromptSpec(), TemplatePlanner(),
                  HashNgramTranslator(), schema, table=table)
    assert QUERY not in trace.step_triples
    assert trace.reach


def test_prove_max_steps_budget(schema, table):
    kb = KnowledgeBase([
        Triple("a", "brother", "b"), Triple("b", "brother", "a"),
        Triple("a", "father", "f"), Triple("b", "father", "f"),
    ])
    q = Triple("a", "sister", "nowhere")
    spec = PromptSpec(max_steps=3)
    trace = prove(q, kb, sister_library(), spec, TemplatePlanner(),
                  HashNgramTranslator(), schema, table=table)
    assert len(trace.steps) <= 3
    assert trace.status in ("max_steps", "empty_slice")
    assert not trace.reach


def test_trace_record_shape(schema, table):
    trace = prove(QUERY, sister_kb(), sister_library(), PromptSpec(), TemplatePlanner(),
                  HashNgramTranslator(), schema, table=table)
    record = trace.to_record()
    assert record["query"] == ["Joseph", "sister", "Katherine"]
    assert record["status"] == "reached"
    assert record["steps"][0]["s"] == "Joseph"
    assert 0.0 <= record["steps"][0]["score"] <= 1.0


def test_oracle_fixture_replays_exact_steps(schema, table):
    lib = sister_library()
    spec = PromptSpec(k=2)
    steps = [Triple("Joseph", "brother", "Dale"), Triple("Dale", "sister", "Katherine")]
    fixture = record_oracle_fixture([(QUERY, steps)], lib, spec, schema)
    planner = ReplayPlanner(fixture)
    translator = ExactStringTranslator()
    result = ensemble_prove(QUERY, sister_kb(), lib, spec, planner, translator, schema,
                            table=table)
    assert result.success_any
    assert result.first_success_index == 0
    trace = result.per_prompt[0]
    assert trace.step_triples == steps
    assert all(score == pytest.approx(1.0) for _, score in trace.steps)


def test_ensemble_success_at_is_monotone(schema, table):
    lib = sister_library()
    spec = PromptSpec(k=3)
    result = ensemble_prove(QUERY, sister_kb(), lib, spec, TemplatePlanner(),
                            HashNgramTranslator(), schema, table=table,
                            stop_on_success=False)
    flags = [result.success_at(k) for k in (1, 2, 3)]
    assert flags == sorted(flags)


def test_min_score_cutoff(schema, table):
    spec = PromptSpec(min_score=1.01)
    trace = prove(QUERY, sister_kb(), sister_library(), spec, TemplatePlanner(),
                  HashNgramTranslator(), schema, table=table)
    assert trace.steps == ()
    assert trace.status == "empty_slice"


def test_chain_constraint_always_holds(small_corpus, small_library, schema, table):
    translator = HashNgramTranslator()
    planner = TemplatePlanner()
    for length, bucket in small_corpus.query_instances.items():
        kb = small_corpus.bucket_kb(length)
        cache = EmbeddingCache(translator, schema)
        cache.precompute(kb)
        for inst in bucket[:4]:
            trace = prove(inst.query, kb, small_library, PromptSpec(), planner,
                          translator, schema, table=table, cache=cache)
            steps = trace.step_triples
            for prev, nxt in zip(steps, steps[1:]):
                assert prev.object == nxt.subject
            assert all(s in kb for s in steps)
