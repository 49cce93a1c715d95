"""Per-token vector stores and the cosine metric.

Two interchangeable on-disk encodings carry contextual vectors:

* NAVF binary: magic ``NAVF``, u32 version (=1), u32 dim, then per record
  [u32 id length, UTF-8 sent_id, u32 n_tokens, n_tokens x dim little-endian
  f32].  All integers little-endian.  Round-trips are bit-exact.
* JSONL: one ``{"sent_id": ..., "dim": ..., "vectors": [[...], ...]}``
  object per line.

Static word-vector tables use the common text layout: a ``<count> <dim>``
header line, then ``word f1 ... fdim`` rows.
"""

from __future__ import annotations

import json
import math
import struct
from typing import Iterable

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmbeddingFormatError,
    EmbeddingLookupError,
    OovError,
    ZeroVectorError,
)
from .treebank import Token

NAVF_MAGIC = b"NAVF"
NAVF_VERSION = 1


def cosine(u, v) -> float:
    """Cosine similarity in 64-bit arithmetic, clamped to [-1, 1].

    Raises ZeroVectorError for zero-norm input rather than returning 0.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatchError(f"cosine of shapes {u.shape} and {v.shape}")
    norm_u = math.sqrt(float(np.dot(u, u)))
    norm_v = math.sqrt(float(np.dot(v, v)))
    if norm_u == 0.0 or norm_v == 0.0:
        raise ZeroVectorError("cosine is undefined for zero-norm vectors")
    score = float(np.dot(u, v)) / (norm_u * norm_v)
    return max(-1.0, min(1.0, score))


class EmbeddingStore:
    """Immutable map from sent_id to an (n_tokens, dim) float32 matrix."""

    def __init__(self, dim: int, records: dict[str, np.ndarray] | None = None):
        self.dim = dim
        self._records: dict[str, np.ndarray] = {}
        for sent_id, vectors in (records or {}).items():
            self.add(sent_id, vectors)

    def add(self, sent_id: str, vectors) -> None:
        matrix = np.asarray(vectors, dtype=np.float32)
        if matrix.ndim != 2 or matrix.shape[1] != self.dim:
            raise DimensionMismatchError(
                f"record {sent_id!r} has shape {matrix.shape}, store dim is {self.dim}"
            )
        self._records[sent_id] = matrix

    def __contains__(self, sent_id: str) -> bool:
        return sent_id in self._records

    def __len__(self) -> int:
        return len(self._records)

    def sent_ids(self) -> list[str]:
        return list(self._records)

    def record(self, sent_id: str) -> np.ndarray:
        try:
            return self._records[sent_id]
        except KeyError:
            raise EmbeddingLookupError(f"no embedding record for sentence {sent_id!r}") from None

    def n_tokens(self, sent_id: str) -> int:
        return self.record(sent_id).shape[0]

    def vector_for(self, sent_id: str, token_index: int) -> np.ndarray:
        """Row for the 1-based ``token_index`` of ``sent_id``."""
        matrix = self.record(sent_id)
        if not 1 <= token_index <= matrix.shape[0]:
            raise EmbeddingLookupError(
                f"token index {token_index} out of range 1..{matrix.shape[0]} "
                f"for sentence {sent_id!r}"
            )
        return matrix[token_index - 1]


def vector_for(store: EmbeddingStore, sent_id: str, token_index: int) -> np.ndarray:
    return store.vector_for(sent_id, token_index)


def save_navf(store: EmbeddingStore, path) -> None:
    with open(path, "wb") as handle:
        handle.write(NAVF_MAGIC)
        handle.write(struct.pack("<II", NAVF_VERSION, store.dim))
        for sent_id in store.sent_ids():
            matrix = store.record(sent_id)
            encoded = sent_id.encode("utf-8")
            handle.write(struct.pack("<I", len(encoded)))
            handle.write(encoded)
            handle.write(struct.pack("<I", matrix.shape[0]))
            handle.write(matrix.astype("<f4", copy=False).tobytes(order="C"))


def _read_exact(handle, count: int, what: str) -> bytes:
    data = handle.read(count)
    if len(data) != count:
        raise EmbeddingFormatError(f"truncated NAVF file while reading {what}")
    return data


def load_navf(path) -> EmbeddingStore:
    with open(path, "rb") as handle:
        magic = handle.read(4)
        if magic != NAVF_MAGIC:
            raise EmbeddingFormatError(f"bad magic {magic!r}, expected {NAVF_MAGIC!r}")
        version, dim = struct.unpack("<II", _read_exact(handle, 8, "header"))
        if version != NAVF_VERSION:
            raise EmbeddingFormatError(f"unsupported NAVF version {version}")
        store = EmbeddingStore(dim=dim)
        while True:
            length_bytes = handle.read(4)
            if not length_bytes:
                break
            if len(length_bytes) != 4:
                raise EmbeddingFormatError("truncated NAVF file while reading record header")
            (id_len,) = struct.unpack("<I", length_bytes)
            sent_id = _read_exact(handle, id_len, "sent_id").decode("utf-8")
            (n_tokens,) = struct.unpack("<I", _read_exact(handle, 4, "token count"))
            payload = _read_exact(handle, n_tokens * dim * 4, f"vectors of {sent_id!r}")
            matrix = np.frombuffer(payload, dtype="<f4").reshape(n_tokens, dim)
            store.add(sent_id, matrix)
        return store


def save_jsonl(store: EmbeddingStore, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for sent_id in store.sent_ids():
            matrix = store.record(sent_id)
            row = {
                "sent_id": sent_id,
                "dim": store.dim,
                "vectors": [[float(x) for x in vector] for vector in matrix],
            }
            handle.write(json.dumps(row, ensure_ascii=False) + "\n")


def load_jsonl(path) -> EmbeddingStore:
    store: EmbeddingStore | None = None
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                sent_id, dim, vectors = row["sent_id"], row["dim"], row["vectors"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise EmbeddingFormatError(f"line {line_no}: bad embedding row ({exc})") from None
            if store is None:
                store = EmbeddingStore(dim=int(dim))
            elif int(dim) != store.dim:
                raise EmbeddingFormatError(
                    f"line {line_no}: dim {dim} differs from store dim {store.dim}"
                )
            store.add(sent_id, np.asarray(vectors, dtype=np.float32).reshape(-1, int(dim)))
    return store if store is not None else EmbeddingStore(dim=0)


def load_embeddings(path) -> EmbeddingStore:
    """Load either encoding, sniffing the NAVF magic bytes."""
    with open(path, "rb") as handle:
        magic = handle.read(4)
    if magic == NAVF_MAGIC:
        return load_navf(path)
    return load_jsonl(path)


class StaticTable:
    """Uncontextualized word vectors with surface/lowercase/lemma fallback."""

    def __init__(self, dim: int, vectors: dict[str, np.ndarray] | None = None):
        self.dim = dim
        self.vectors = vectors or {}

    def __len__(self) -> int:
        return len(self.vectors)

    def lookup(self, word: str) -> np.ndarray | None:
        return self.vectors.get(word)


def load_static_table(path) -> StaticTable:
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().split()
        if len(header) != 2:
            raise EmbeddingFormatError("static table must start with '<count> <dim>'")
        count, dim = int(header[0]), int(header[1])
        vectors: dict[str, np.ndarray] = {}
        for line_no, line in enumerate(handle, start=2):
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise EmbeddingFormatError(
                    f"line {line_no}: expected {dim + 1} fields, found {len(parts)}"
                )
            vectors[parts[0]] = np.asarray([float(x) for x in parts[1:]], dtype=np.float32)
    if len(vectors) != count:
        raise EmbeddingFormatError(
            f"header announced {count} words, file carries {len(vectors)}"
        )
    return StaticTable(dim=dim, vectors=vectors)


def save_static_table(table: StaticTable, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(f"{len(table.vectors)} {table.dim}\n")
        for word, vector in table.vectors.items():
            values = " ".join(repr(float(x)) for x in vector)
            handle.write(f"{word} {values}\n")


def static_vector(table: StaticTable, token: Token) -> np.ndarray:
    """Vector for a token: surface form, then lowercased form, then lemma."""
    for key in (token.form, token.form.lower(), token.lemma):
        vector = table.lookup(key)
        if vector is not None:
            return vector
    raise OovError(
        f"{token.form!r} (lemma {token.lemma!r}) is out of vocabulary"
    )


def build_store(records: Iterable[tuple[str, np.ndarray]], dim: int) -> EmbeddingStore:
    store = EmbeddingStore(dim=dim)
    for sent_id, vectors in records:
        store.add(sent_id, vectors)
    return store
