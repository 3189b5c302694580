"""Embedding-based retrieval: encoders, a persistent embedding cache, and an
exact flat L2 index over the knowledge base.

The index is a full-scan (no approximation) nearest-neighbor structure; at
knowledge-base scale (a few thousand pairs) an exact scan is fast and removes
recall as a confounder. Raw L2 distances are rescaled to a similarity in
(0, 1] via 1 / (1 + d), which preserves the distance ranking exactly.

Index snapshot byte layout (all integers little-endian):

    magic   4 bytes  b"RGIX"
    version u32      currently 1
    dim     u32
    count   u32      number of entries
    id_len  u32      encoder id length, then that many UTF-8 bytes
    entries count times:
        id_len u32, id UTF-8 bytes, dim float32 values
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np

from ragmt.corpus import Corpus, normalize_text

_MAGIC = b"RGIX"
_VERSION = 1


class RetrievalError(RuntimeError):
    """Encoder mismatch, malformed snapshot, or failed embedding call."""


@dataclass
class Embedding:
    vector: np.ndarray
    dim: int
    encoder_id: str

    def __post_init__(self) -> None:
        self.vector = np.asarray(self.vector, dtype=np.float64)
        if self.vector.ndim != 1 or self.vector.shape[0] != self.dim:
            raise RetrievalError(f"vector length {self.vector.shape} != dim {self.dim}")
        if not np.all(np.isfinite(self.vector)):
            raise RetrievalError("embedding has non-finite components")


@dataclass(frozen=True)
class RetrieverConfig:
    k: int = 5
    normalize_vectors: bool = False

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass(frozen=True)
class RetrievalHit:
    pair_id: str
    distance: float
    similarity: float
    rank: int

    def to_dict(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "distance": self.distance,
            "similarity": self.similarity,
            "rank": self.rank,
        }


@runtime_checkable
class Encoder(Protocol):
    encoder_id: str
    dim: int

    def encode(self, text: str) -> np.ndarray: ...


def mock_embed(text: str, dim: int, seed: int) -> Embedding:
    """Deterministic hermetic embedding derived from hashed character n-grams.

    Character 1-3-grams of the normalized text are feature-hashed into `dim`
    signed buckets and the result is L2-normalized, so equal texts map to
    equal unit vectors and texts sharing most n-grams land close together.
    Stable across processes (no Python hash randomization).
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    norm = normalize_text(text)
    vec = np.zeros(dim, dtype=np.float64)
    feats = [norm[i : i + n] for n in (1, 2, 3) for i in range(len(norm) - n + 1)]
    if not feats:
        feats = [""]
    for feat in feats:
        digest = hashlib.sha256(f"{seed}|{len(feat)}|{feat}".encode("utf-8")).digest()
        bucket = int.from_bytes(digest[:8], "little") % dim
        sign = 1.0 if digest[8] % 2 == 0 else -1.0
        vec[bucket] += sign
    length = float(np.linalg.norm(vec))
    if length == 0.0:
        vec[0] = 1.0
        length = 1.0
    return Embedding(vector=vec / length, dim=dim, encoder_id=f"mock-d{dim}-s{seed}")


@dataclass(frozen=True)
class MockEncoder:
    dim: int = 64
    seed: int = 0

    @property
    def encoder_id(self) -> str:
        return f"mock-d{self.dim}-s{self.seed}"

    def encode(self, text: str) -> np.ndarray:
        return mock_embed(text, self.dim, self.seed).vector


@dataclass
class RemoteEncoder:
    """OpenAI-style embeddings endpoint; credential from the environment."""

    model: str = "text-embedding-ada-002"
    dim: int = 1536
    base_url: str = "https://api.openai.com/v1"
    api_key_env: str = "RAGMT_API_KEY"
    timeout: float = 60.0
    max_transport_retries: int = 3

    @property
    def encoder_id(self) -> str:
        return f"remote:{self.model}"

    def encode(self, text: str) -> np.ndarray:
        import os
        import time

        import httpx

        api_key = os.environ.get(self.api_key_env, "")
        if not api_key:
            raise RetrievalError(f"no API credential in ${self.api_key_env}")
        attempts = []
        for attempt in range(1, self.max_transport_retries + 1):
            try:
                resp = httpx.post(
                    f"{self.base_url.rstrip('/')}/embeddings",
                    json={"model": self.model, "input": text},
                    headers={"Authorization": f"Bearer {api_key}"},
                    timeout=self.timeout,
                )
                resp.raise_for_status()
                vec = np.asarray(resp.json()["data"][0]["embedding"], dtype=np.float64)
                if vec.shape[0] != self.dim:
                    raise RetrievalError(
                        f"encoder returned dim {vec.shape[0]}, expected {self.dim}"
                    )
                return vec
            except RetrievalError:
                raise
            except Exception as exc:  # noqa: BLE001 - recorded and retried
                attempts.append(f"attempt {attempt}: {exc}")
                if attempt < self.max_transport_retries:
                    time.sleep(min(2.0 ** attempt, 10.0))
        raise RetrievalError(f"embedding calls failed: {attempts}")


class EmbeddingCache:
    """Persistent append-only cache keyed by (encoder_id, normalized text).

    Remote embedding calls cost money; caching makes repeated sweeps over the
    same corpus cheap and rerunnable. Reads are lock-free after load; writes
    are serialized in-process.
    """

    def __init__(self, path: str | Path | None):
        self.path = Path(path) if path is not None else None
        self._store: dict[tuple[str, str], np.ndarray] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    rec = json.loads(line)
                    key = (rec["encoder_id"], rec["text_key"])
                    self._store[key] = np.asarray(rec["vector"], dtype=np.float64)

    @staticmethod
    def _text_key(text: str) -> str:
        return hashlib.sha256(normalize_text(text).encode("utf-8")).hexdigest()

    def get(self, encoder_id: str, text: str) -> np.ndarray | None:
        return self._store.get((encoder_id, self._text_key(text)))

    def put(self, encoder_id: str, text: str, vector: np.ndarray) -> None:
        key = (encoder_id, self._text_key(text))
        with self._lock:
            if key in self._store:
                return
            self._store[key] = np.asarray(vector, dtype=np.float64)
            if self.path is not None:
                rec = {
                    "encoder_id": encoder_id,
                    "text_key": key[1],
                    "vector": [float(x) for x in vector],
                }
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(rec) + "\n")

    def __len__(self) -> int:
        return len(self._store)


def embed(text: str, encoder: Encoder, cache: EmbeddingCache | None = None) -> Embedding:
    """Embed one text, serving repeats from the cache."""
    if not normalize_text(text):
        raise ValueError("text must be non-empty")
    if cache is not None:
        cached = cache.get(encoder.encoder_id, text)
        if cached is not None:
            return Embedding(vector=cached, dim=encoder.dim, encoder_id=encoder.encoder_id)
    vec = encoder.encode(text)
    emb = Embedding(vector=vec, dim=encoder.dim, encoder_id=encoder.encoder_id)
    if cache is not None:
        cache.put(encoder.encoder_id, text, emb.vector)
    return emb


@dataclass
class VectorIndex:
    """Exact flat index: ids in insertion order plus an (n, dim) float32
    matrix. Entry order equals knowledge-base corpus order."""

    ids: list[str]
    matrix: np.ndarray
    dim: int
    encoder_id: str

    def __len__(self) -> int:
        return len(self.ids)


def build_index(kb: Corpus, encoder: Encoder, cache: EmbeddingCache | None = None) -> VectorIndex:
    """Embed every knowledge-base source sentence into a fresh index.

    Any embedding failure aborts the whole build; no partial index escapes.
    """
    if len(kb) == 0:
        raise RetrievalError("cannot build an index over an empty knowledge base")
    vectors = np.zeros((len(kb), encoder.dim), dtype=np.float32)
    ids = []
    for i, pair in enumerate(kb.pairs):
        emb = embed(pair.source_ja, encoder, cache)
        vectors[i] = emb.vector.astype(np.float32)
        ids.append(pair.id)
    return VectorIndex(ids=ids, matrix=vectors, dim=encoder.dim, encoder_id=encoder.encoder_id)


def save_index(index: VectorIndex, path: str | Path) -> None:
    with open(path, "wb") as fh:
        enc = index.encoder_id.encode("utf-8")
        fh.write(_MAGIC)
        fh.write(struct.pack("<III", _VERSION, index.dim, len(index.ids)))
        fh.write(struct.pack("<I", len(enc)))
        fh.write(enc)
        for i, pair_id in enumerate(index.ids):
            raw = pair_id.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(index.matrix[i].astype("<f4").tobytes())


def load_index(path: str | Path) -> VectorIndex:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise RetrievalError(f"{path}: not an index snapshot")
        version, dim, count = struct.unpack("<III", fh.read(12))
        if version != _VERSION:
            raise RetrievalError(f"{path}: unsupported snapshot version {version}")
        (enc_len,) = struct.unpack("<I", fh.read(4))
        encoder_id = fh.read(enc_len).decode("utf-8")
        ids = []
        matrix = np.zeros((count, dim), dtype=np.float32)
        for i in range(count):
            (id_len,) = struct.unpack("<I", fh.read(4))
            ids.append(fh.read(id_len).decode("utf-8"))
            matrix[i] = np.frombuffer(fh.read(4 * dim), dtype="<f4")
    return VectorIndex(ids=ids, matrix=matrix, dim=dim, encoder_id=encoder_id)


def similarity(d: float) -> float:
    """Rescale an L2 distance into (0, 1]: similarity = 1 / (1 + d)."""
    if not math.isfinite(d) or d < 0:
        raise ValueError(f"distance must be finite and >= 0, got {d}")
    return 1.0 / (1.0 + d)


def search(index: VectorIndex, query: Embedding, cfg: RetrieverConfig) -> list[RetrievalHit]:
    """Exact top-k scan by ascending L2 distance.

    Ties are broken by insertion order so retrieval (and therefore prompts)
    stay reproducible.
    """
    if query.dim != index.dim:
        raise RetrievalError(f"query dim {query.dim} != index dim {index.dim}")
    if query.encoder_id != index.encoder_id:
        raise RetrievalError(
            f"query encoder {query.encoder_id!r} != index encoder {index.encoder_id!r}"
        )
    matrix = index.matrix.astype(np.float64)
    q = query.vector
    if cfg.normalize_vectors:
        norms = np.linalg.norm(matrix, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        matrix = matrix / norms
        q_norm = np.linalg.norm(q)
        q = q / q_norm if q_norm > 0 else q
    distances = np.sqrt(((matrix - q) ** 2).sum(axis=1))
    order = np.argsort(distances, kind="stable")
    hits = []
    for rank, idx in enumerate(order[: min(cfg.k, len(index.ids))], start=1):
        d = float(distances[idx])
        hits.append(
            RetrievalHit(pair_id=index.ids[idx], distance=d, similarity=similarity(d), rank=rank)
        )
    return hits
