"""Planner and translator backends.

Planners propose candidate next-step sentences from a growing prompt;
translators embed sentences so candidates can be projected onto the most
similar KB fact by cosine similarity.  Deterministic desk-scale backends are
provided alongside remote HTTP backends with record-replay fixtures.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol, Sequence

import numpy as np

from .errors import (
    CapacityExceeded,
    DimensionMismatch,
    EmptySlice,
    EmptyText,
    ProtocolError,
    ReplayMiss,
    TransportError,
    ZeroVector,
)
from .kb import EntityId, KnowledgeBase, Triple, VerbalizationSchema
from .oracle import HornRule

log = logging.getLogger(__name__)

PLACEHOLDER_OBJECT = "?ENT"

EmbeddingVector = np.ndarray


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine undefined for zero-norm vector")
    return float(np.dot(a, b) / (na * nb))


@dataclass(frozen=True)
class PromptState:
    """What a planner sees at one step: the prompt text plus the structured
    context deterministic planners rely on.  Remote planners use only .text."""

    text: str
    current: EntityId
    step_index: int
    rule: Optional[HornRule]
    schema: VerbalizationSchema


class PlannerBackend(Protocol):
    def propose(self, state: PromptState, n: int, temperature: float, seed: int) -> list[str]:
        ...


class TranslatorBackend(Protocol):
    def embed(self, text: str) -> EmbeddingVector:
        ...


_HASH_SALT = b"kbreason.hash_embed.v1"


def _stable_hash64(data: bytes) -> int:
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "big")


def hash_embed(text: str, dim: int = 256) -> EmbeddingVector:
    """Signed feature hashing of character 3-grams, L2-normalized.

    Deterministic across runs and platforms: buckets and signs come from a
    fixed 64-bit blake2b hash with a constant salt.
    """
    if dim < 64:
        raise ValueError("dim must be >= 64")
    stripped = text.strip()
    if not stripped:
        raise EmptyText(repr(text))
    lowered = stripped.lower()
    grams = (
        [lowered[i:i + 3] for i in range(len(lowered) - 2)]
        if len(lowered) >= 3
        else [lowered]
    )
    vec = np.zeros(dim, dtype=np.float64)
    for gram in grams:
        h = _stable_hash64(_HASH_SALT + gram.encode("utf-8"))
        bucket = h % dim
        sign = 1.0 if (h >> 63) & 1 else -1.0
        vec[bucket] += sign
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        # Sign cancellation; fall back to an unsigned count in bucket 0.
        vec[0] = 1.0
        norm = 1.0
    return vec / norm


class HashNgramTranslator:
    """Deterministic desk-scale translator backed by hash_embed."""

    def __init__(self, dim: int = 256) -> None:
        self.dim = dim

    def embed(self, text: str) -> EmbeddingVector:
        return hash_embed(text, self.dim)


class ExactStringTranslator:
    """Degenerate translator: one-hot over exact (trimmed) strings.

    Cosine is 1.0 for identical strings and 0.0 otherwise, which makes
    projection equivalent to exact string search.
    """

    def __init__(self, capacity: int = 16384) -> None:
        self.capacity = capacity
        self._vocab: dict[str, int] = {}

    def embed(self, text: str) -> EmbeddingVector:
        stripped = text.strip()
        if not stripped:
            raise EmptyText(repr(text))
        index = self._vocab.get(stripped)
        if index is None:
            index = len(self._vocab)
            if index >= self.capacity:
                raise CapacityExceeded(f"more than {self.capacity} distinct strings")
            self._vocab[stripped] = index
        vec = np.zeros(self.capacity, dtype=np.float32)
        vec[index] = 1.0
        return vec


@dataclass(frozen=True)
class ProjectionResult:
    fact: Triple
    score: float
    candidate_index: int


class EmbeddingCache:
    """Write-once cache of fact embeddings for one (KB, translator, schema)."""

    def __init__(self, translator: TranslatorBackend, schema: VerbalizationSchema) -> None:
        self.translator = translator
        self.schema = schema
        self._vectors: dict[Triple, EmbeddingVector] = {}
        self._texts: dict[Triple, str] = {}

    def text(self, fact: Triple) -> str:
        cached = self._texts.get(fact)
        if cached is None:
            cached = self.schema.verbalize(fact)
            self._texts[fact] = cached
        return cached

    def vector(self, fact: Triple) -> EmbeddingVector:
        cached = self._vectors.get(fact)
        if cached is None:
            cached = self.translator.embed(self.text(fact))
            self._vectors[fact] = cached
        return cached

    def precompute(self, kb: KnowledgeBase) -> None:
        for fact in kb.facts:
            self.vector(fact)


def project(
    candidates: Sequence[str],
    slice_facts: Sequence[Triple],
    translator: TranslatorBackend,
    schema: VerbalizationSchema,
    cache: Optional[EmbeddingCache] = None,
) -> ProjectionResult:
    """Best (candidate, fact) pair by cosine, restricted to the given slice.

    Ties break toward the lower candidate index, then the lexicographically
    smaller fact rendering.
    """
    if not slice_facts:
        raise EmptySlice("no facts to project onto")
    if not candidates:
        raise ValueError("candidates must be non-empty")
    if cache is None:
        cache = EmbeddingCache(translator, schema)
    best_key: Optional[tuple[float, int, str]] = None
    best_fact: Optional[Triple] = None
    for i, candidate in enumerate(candidates):
        cand_vec = translator.embed(candidate)
        for fact in slice_facts:
            score = cosine(cand_vec, cache.vector(fact))
            key = (-score, i, cache.text(fact))
            if best_key is None or key < best_key:
                best_key = key
                best_fact = fact
    assert best_key is not None and best_fact is not None
    return ProjectionResult(fact=best_fact, score=-best_key[0], candidate_index=best_key[1])


class TemplatePlanner:
    """Deterministic planner that reads the retrieved abstract rule.

    The first candidate verbalizes the rule's next body atom with the current
    entity as subject and a placeholder object; the rest vary the relation
    over the schema vocabulary in a seeded order.  Temperature controls the
    exploration breadth: at 0 only the rule-guided candidate (or the single
    top vocabulary pick past the rule body) is proposed; at 1 the full request
    is filled with distinct relations.
    """

    def propose(self, state: PromptState, n: int, temperature: float, seed: int) -> list[str]:
        schema = state.schema
        candidates: list[str] = []

        def add(relation: str) -> None:
            text = schema.templates[relation].format(s=state.current, o=PLACEHOLDER_OBJECT)
            if text not in candidates:
                candidates.append(text)

        rule = state.rule
        if rule is not None and 1 <= state.step_index <= len(rule.body):
            add(rule.body[state.step_index - 1].relation)
        rng = random.Random(f"{seed}:{_stable_hash64(state.text.encode('utf-8'))}")
        vocab = list(schema.templates)
        rng.shuffle(vocab)
        distinct_limit = min(n, max(1, int(round(temperature * n))))
        for relation in vocab:
            if len(candidates) >= distinct_limit:
                break
            add(relation)
        distinct = len(candidates)
        while len(candidates) < n:  # vocab smaller than n: pad with repeats
            candidates.append(candidates[len(candidates) % distinct])
        return candidates[:n]


def replay_key(prompt: str, n: int) -> str:
    body = json.dumps({"n": n, "prompt": prompt}, sort_keys=True)
    return f"{_stable_hash64(body.encode('utf-8')):016x}"


class ReplayPlanner:
    """Serves recorded propose() responses; no generation, no network."""

    def __init__(self, fixture: dict[str, list[str]] | str | Path) -> None:
        if isinstance(fixture, (str, Path)):
            fixture = json.loads(Path(fixture).read_text())
        self.fixture = dict(fixture)

    def propose(self, state: PromptState, n: int, temperature: float, seed: int) -> list[str]:
        key = replay_key(state.text, n)
        if key not in self.fixture:
            raise ReplayMiss(f"no recorded response for prompt hash {key}")
        response = list(self.fixture[key])
        while len(response) < n:
            response.append(response[-1])
        return response[:n]


@dataclass
class RemoteConfig:
    """Remote endpoint settings; URL and token default to environment variables."""

    url: str = ""
    token_env: str = "KBREASON_API_TOKEN"
    max_tokens: int = 32
    stop: tuple[str, ...] = ("\n",)
    timeout: float = 30.0
    retries: int = 3
    backoff: float = 0.5

    def headers(self) -> dict[str, str]:
        token = os.environ.get(self.token_env, "")
        headers = {"Content-Type": "application/json"}
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers


def _request_hash(body: dict) -> str:
    return f"{_stable_hash64(json.dumps(body, sort_keys=True).encode('utf-8')):016x}"


class _FixtureStore:
    def __init__(self, path: Optional[str | Path]) -> None:
        self.path = Path(path) if path else None
        self.entries: dict[str, object] = {}
        if self.path and self.path.exists():
            self.entries = json.loads(self.path.read_text())

    def get(self, key: str):
        return self.entries.get(key)

    def put(self, key: str, value) -> None:
        self.entries[key] = value
        if self.path:
            self.path.write_text(json.dumps(self.entries, indent=1, sort_keys=True) + "\n")


class _RemoteClient:
    """Shared HTTP plumbing: retries with capped exponential backoff plus
    optional record/replay of the request-response pairs."""

    def __init__(self, config: RemoteConfig, mode: str = "live",
                 fixture_path: Optional[str | Path] = None) -> None:
        if mode not in ("live", "record", "replay"):
            raise ValueError(f"unknown mode {mode!r}")
        self.config = config
        self.mode = mode
        self.fixture = _FixtureStore(fixture_path)

    def post(self, body: dict) -> dict:
        key = _request_hash(body)
        if self.mode == "replay":
            cached = self.fixture.get(key)
            if cached is None:
                raise ReplayMiss(f"no recorded response for request hash {key}")
            return cached  # type: ignore[return-value]
        response = self._post_with_retries(body)
        if self.mode == "record":
            self.fixture.put(key, response)
        return response

    def _post_with_retries(self, body: dict) -> dict:
        import httpx

        delay = self.config.backoff
        last_error: Exception | None = None
        for attempt in range(self.config.retries):
            try:
                r = httpx.post(self.config.url, json=body,
                               headers=self.config.headers(),
                               timeout=self.config.timeout)
                r.raise_for_status()
                return r.json()
            except httpx.HTTPError as exc:
                last_error = exc
                log.warning("remote call failed (attempt %d/%d): %s",
                            attempt + 1, self.config.retries, exc)
                if attempt + 1 < self.config.retries:
                    time.sleep(min(delay, 8.0))
                    delay *= 2
        raise TransportError(str(last_error))


class RemotePlanner:
    """Completions-style HTTP planner (prompt, n, temperature, max_tokens, stop)."""

    def __init__(self, config: Optional[RemoteConfig] = None, mode: str = "live",
                 fixture_path: Optional[str | Path] = None) -> None:
        config = config or RemoteConfig(url=os.environ.get("KBREASON_COMPLETIONS_URL", ""))
        self._client = _RemoteClient(config, mode, fixture_path)

    def propose(self, state: PromptState, n: int, temperature: float, seed: int) -> list[str]:
        body = {
            "prompt": state.text,
            "n": n,
            "temperature": temperature,
            "max_tokens": self._client.config.max_tokens,
            "stop": list(self._client.config.stop),
        }
        response = self._client.post(body)
        try:
            texts = [choice["text"].strip() for choice in response["choices"]]
        except (KeyError, TypeError) as exc:
            raise ProtocolError(f"malformed completion response: {exc}") from exc
        if not texts:
            raise ProtocolError("completion response had no choices")
        while len(texts) < n:
            texts.append(texts[-1])
        return texts[:n]


class RemoteTranslator:
    """Embeddings-style HTTP translator (input list -> vector list)."""

    def __init__(self, config: Optional[RemoteConfig] = None, mode: str = "live",
                 fixture_path: Optional[str | Path] = None) -> None:
        config = config or RemoteConfig(url=os.environ.get("KBREASON_EMBEDDINGS_URL", ""))
        self._client = _RemoteClient(config, mode, fixture_path)

    def embed(self, text: str) -> EmbeddingVector:
        stripped = text.strip()
        if not stripped:
            raise EmptyText(repr(text))
        response = self._client.post({"input": [stripped]})
        try:
            values = response["data"][0]["embedding"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(f"malformed embedding response: {exc}") from exc
        return np.asarray(values, dtype=np.float64)
