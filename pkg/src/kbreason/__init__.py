"""Knowledge-base proof-path reasoning: prompt-driven greedy provers with
cosine projection onto facts, a symbolic backward-chaining oracle, synthetic
benchmark curation, and a deterministic evaluation harness."""
from .backends import (
    EmbeddingCache,
    ExactStringTranslator,
    HashNgramTranslator,
    PlannerBackend,
    PromptState,
    RemoteConfig,
    RemotePlanner,
    RemoteTranslator,
    ReplayPlanner,
    TemplatePlanner,
    TranslatorBackend,
    cosine,
    hash_embed,
    project,
)
from .datasets import (
    ClutrrCorpus,
    CountriesTask,
    FamilyGraph,
    Instance,
    NoiseConfig,
    build_clutrr_split,
    build_countries_tasks,
    build_rule_library,
    countries_mini_kb,
    generate_family_graph,
    inject_noise,
    load_corpus,
    parse_story,
    render_story,
    save_corpus,
)
from .errors import KBReasonError
from .evaluation import (
    MetricsReport,
    RunConfig,
    evaluate,
    evaluate_countries,
    make_backends,
    sweep,
)
from .kb import KnowledgeBase, Triple, VerbalizationSchema
from .oracle import (
    CompositionTable,
    HornRule,
    Proof,
    RuleExample,
    RuleLibrary,
    backward_chain,
    compose_path,
    extract_rule_library,
    find_ground_paths,
    verify_trace,
)
from .prover import (
    EnsembleResult,
    PromptSpec,
    ProofTrace,
    build_prompt,
    ensemble_prove,
    prove,
    record_oracle_fixture,
    retrieve_examples,
)

__version__ = "0.1.0"

__all__ = [
    "ClutrrCorpus",
    "CompositionTable",
    "CountriesTask",
    "EmbeddingCache",
    "EnsembleResult",
    "ExactStringTranslator",
    "FamilyGraph",
    "HashNgramTranslator",
    "HornRule",
    "Instance",
    "KBReasonError",
    "KnowledgeBase",
    "MetricsReport",
    "NoiseConfig",
    "PlannerBackend",
    "PromptSpec",
    "PromptState",
    "Proof",
    "ProofTrace",
    "RemoteConfig",
    "RemotePlanner",
    "RemoteTranslator",
    "ReplayPlanner",
    "RuleExample",
    "RuleLibrary",
    "RunConfig",
    "TemplatePlanner",
    "TranslatorBackend",
    "Triple",
    "VerbalizationSchema",
    "backward_chain",
    "build_clutrr_split",
    "build_countries_tasks",
    "build_prompt",
    "build_rule_library",
    "compose_path",
    "cosine",
    "countries_mini_kb",
    "ensemble_prove",
    "evaluate",
    "evaluate_countries",
    "extract_rule_library",
    "find_ground_paths",
    "generate_family_graph",
    "hash_embed",
    "inject_noise",
    "load_corpus",
    "make_backends",
    "parse_story",
    "project",
    "prove",
    "record_oracle_fixture",
    "render_story",
    "retrieve_examples",
    "save_corpus",
    "sweep",
    "verify_trace",
]
