"""Per-agent associative memory: scored records, top-k retrieval, reflection.

Retrieval ranks records by a weighted sum of recency (exponential half-life
decay), importance (1-10, normalized), and relevance (cosine similarity to a
query embedding, shifted to [0, 1]). Reflection fires once the accumulated
importance of appended records reaches a threshold.

Offline determinism: embeddings come from a token-hash bag-of-words
projection and importance from a length-bucket heuristic, so scripted
sessions replay identically without any model in the loop.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol

import numpy as np


class MemoryError_(Exception):
    """Base class for memory-store errors (trailing underscore avoids the builtin)."""


class ValidationError(MemoryError_):
    pass


class ConfigurationError(MemoryError_):
    pass


class PreconditionError(MemoryError_):
    pass


class ReflectionError(MemoryError_):
    """The backend failed to produce usable insight statements."""


class MemoryKind(str, Enum):
    OBSERVATION = "observation"
    REFLECTION = "reflection"
    PLAN = "plan"
    SPEECH = "speech"


DEFAULT_DIMENSION = 64
DEFAULT_HALF_LIFE = 100.0
DEFAULT_WEIGHTS = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
DEFAULT_REFLECTION_THRESHOLD = 50

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def embed_text(text: str, dimension: int = DEFAULT_DIMENSION) -> np.ndarray:
    """Deterministic bag-of-words feature hashing into a unit vector.

    Each token lands in a bucket chosen by a stable hash with a stable sign,
    then the vector is L2-normalized. Independent of PYTHONHASHSEED.
    """
    vec = np.zeros(dimension, dtype=np.float64)
    for token in _TOKEN_RE.findall(text.lower()):
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        value = int.from_bytes(digest, "big")
        index = value % dimension
        sign = 1.0 if (value >> 32) & 1 else -1.0
        vec[index] += sign
    norm = float(np.linalg.norm(vec))
    if norm > 0:
        vec /= norm
    return vec


def heuristic_importance(text: str) -> int:
    """Length-bucket importance for offline mode: longer statements rate higher."""
    return max(1, min(10, 1 + len(text) // 25))


@dataclass
class MemoryRecord:
    id: int
    tick: int
    kind: MemoryKind
    text: str
    importance: int
    embedding: np.ndarray
    last_access: int

    def __post_init__(self) -> None:
        if not self.text:
            raise ValidationError("memory text must be non-empty")
        if not 1 <= self.importance <= 10:
            raise ValidationError(f"importance {self.importance} outside [1, 10]")
        if self.last_access < self.tick:
            raise ValidationError("last_access must be >= creation tick")
        self.embedding = np.asarray(self.embedding, dtype=np.float64)


@dataclass
class MemoryStore:
    dimension: int = DEFAULT_DIMENSION
    records: list[MemoryRecord] = field(default_factory=list)
    importance_accumulator: int = 0
    _next_id: int = 0

    def new_record(
        self, tick: int, kind: MemoryKind, text: str, importance: int | None = None
    ) -> MemoryRecord:
        """Build a well-formed record with a store-assigned id and embedding."""
        record = MemoryRecord(
            id=self._next_id,
            tick=tick,
            kind=kind,
            text=text,
            importance=heuristic_importance(text) if importance is None else importance,
            embedding=embed_text(text, self.dimension),
            last_access=tick,
        )
        self._next_id += 1
        return record

    def remember(
        self, tick: int, kind: MemoryKind, text: str, importance: int | None = None
    ) -> MemoryRecord:
        record = self.new_record(tick, kind, text, importance)
        append_memory(self, record)
        return record


def append_memory(store: MemoryStore, record: MemoryRecord) -> MemoryStore:
    """Insert keeping (tick, id) order; bump the reflection accumulator."""
    if len(record.embedding) != store.dimension:
        raise ValidationError(
            f"embedding length {len(record.embedding)} != store dimension {store.dimension}"
        )
    key = (record.tick, record.id)
    position = len(store.records)
    while position > 0 and (store.records[position - 1].tick, store.records[position - 1].id) > key:
        position -= 1
    store.records.insert(position, record)
    store.importance_accumulator += record.importance
    return store


def recency_score(record: MemoryRecord, now: int, half_life: float = DEFAULT_HALF_LIFE) -> float:
    if now < record.last_access:
        raise ValidationError("now must be >= the record's last access tick")
    return 0.5 ** ((now - record.last_access) / half_life)


def relevance_score(record: MemoryRecord, query_embedding: np.ndarray) -> float:
    query = np.asarray(query_embedding, dtype=np.float64)
    if query.shape != record.embedding.shape:
        raise ValidationError("query embedding dimension mismatch")
    norm_r = float(np.linalg.norm(record.embedding))
    norm_q = float(np.linalg.norm(query))
    if norm_r == 0.0 or norm_q == 0.0:
        return 0.5
    cosine = float(np.dot(record.embedding, query)) / (norm_r * norm_q)
    cosine = max(-1.0, min(1.0, cosine))
    return (cosine + 1.0) / 2.0


def retrieval_score(
    record: MemoryRecord,
    query_embedding: np.ndarray,
    now: int,
    weights: tuple[float, float, float] = DEFAULT_WEIGHTS,
    half_life: float = DEFAULT_HALF_LIFE,
) -> float:
    w_recency, w_importance, w_relevance = weights
    if w_recency == 0 and w_importance == 0 and w_relevance == 0:
        raise ConfigurationError("retrieval weights must not all be zero")
    return (
        w_recency * recency_score(record, now, half_life)
        + w_importance * (record.importance / 10.0)
        + w_relevance * relevance_score(record, query_embedding)
    )


def retrieve_top_k(
    store: MemoryStore,
    query_embedding: np.ndarray,
    k: int,
    now: int,
    weights: tuple[float, float, float] = DEFAULT_WEIGHTS,
    half_life: float = DEFAULT_HALF_LIFE,
) -> list[MemoryRecord]:
    """The k highest-scoring records; ties go to the more recent tick, then lower id.

    Retrieved records get their last_access set to now, so re-retrieving
    them immediately scores recency 1.
    """
    if k < 0:
        raise ValidationError("k must be >= 0")
    scored = [
        (retrieval_score(r, query_embedding, now, weights, half_life), r)
        for r in store.records
    ]
    scored.sort(key=lambda pair: (-pair[0], -pair[1].tick, pair[1].id))
    chosen = [record for _, record in scored[:k]]
    for record in chosen:
        record.last_access = now
    return chosen


def should_reflect(store: MemoryStore, reflection_threshold: int = DEFAULT_REFLECTION_THRESHOLD) -> bool:
    return store.importance_accumulator >= reflection_threshold


@dataclass(frozen=True)
class Insight:
    text: str
    importance: int


class ReflectionBackend(Protocol):
    def insights_for(self, memories: list[MemoryRecord], now: int) -> list[Insight]:
        """Produce 1-3 insight statements grounded in the given memories."""
        ...


REFLECTION_CONTEXT_SIZE = 8


def synthesize_reflection(
    store: MemoryStore,
    backend: ReflectionBackend,
    now: int,
    reflection_threshold: int = DEFAULT_REFLECTION_THRESHOLD,
    force: bool = False,
    weights: tuple[float, float, float] = DEFAULT_WEIGHTS,
    half_life: float = DEFAULT_HALF_LIFE,
) -> list[MemoryRecord]:
    """Ask the backend for 1-3 insights over the top-retrieved recent memories.

    On any backend failure nothing is appended and the accumulator is left
    untouched. `force` covers the self_reflect action, which reflects
    regardless of the threshold.
    """
    if not force and not should_reflect(store, reflection_threshold):
        raise PreconditionError(
            f"accumulator {store.importance_accumulator} below threshold {reflection_threshold}"
        )
    # Zero query embedding makes relevance a constant, so the context is
    # effectively the recency+importance front of the stream.
    context = retrieve_top_k(
        store, np.zeros(store.dimension), REFLECTION_CONTEXT_SIZE, now, weights, half_life
    )
    insights = backend.insights_for(context, now)
    if not 1 <= len(insights) <= 3:
        raise ReflectionError(f"expected 1-3 insights, got {len(insights)}")
    for insight in insights:
        if not insight.text:
            raise ReflectionError("insight text must be non-empty")
        if not 1 <= insight.importance <= 10:
            raise ReflectionError(f"insight importance {insight.importance} outside [1, 10]")
    records = []
    for insight in insights:
        records.append(
            store.remember(now, MemoryKind.REFLECTION, insight.text, insight.importance)
        )
    store.importance_accumulator = 0
    return records
