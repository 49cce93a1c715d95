"""Writers for the two embedding-file encodings the enrichment toolkit reads.

NAVF binary: magic ``NAVF``, u32 version (=1), u32 dim, then per record
[u32 id length, UTF-8 sent_id, u32 n_tokens, n_tokens x dim little-endian
f32].  JSONL: one ``{"sent_id", "dim", "vectors"}`` object per line.
"""

from __future__ import annotations

import json
import struct

import numpy as np

NAVF_MAGIC = b"NAVF"
NAVF_VERSION = 1

FORMAT_NAVF = "navf"
FORMAT_JSONL = "jsonl"
FORMATS = (FORMAT_NAVF, FORMAT_JSONL)


class EmbeddingWriter:
    """Appends records in request order; single-threaded by design."""

    def __init__(self, path, fmt: str, dim: int):
        if fmt not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
        self.fmt = fmt
        self.dim = dim
        self.records = 0
        if fmt == FORMAT_NAVF:
            self._handle = open(path, "wb")
            self._handle.write(NAVF_MAGIC)
            self._handle.write(struct.pack("<II", NAVF_VERSION, dim))
        else:
            self._handle = open(path, "w", encoding="utf-8")

    def write(self, sent_id: str, vectors: np.ndarray) -> None:
        matrix = np.asarray(vectors, dtype=np.float32)
        if matrix.ndim != 2 or matrix.shape[1] != self.dim:
            raise ValueError(
                f"record {sent_id!r} has shape {matrix.shape}, writer dim is {self.dim}"
            )
        if self.fmt == FORMAT_NAVF:
            encoded = sent_id.encode("utf-8")
            self._handle.write(struct.pack("<I", len(encoded)))
            self._handle.write(encoded)
            self._handle.write(struct.pack("<I", matrix.shape[0]))
            self._handle.write(matrix.astype("<f4", copy=False).tobytes(order="C"))
        else:
            row = {
                "sent_id": sent_id,
                "dim": self.dim,
                "vectors": [[float(x) for x in vector] for vector in matrix],
            }
            self._handle.write(json.dumps(row, ensure_ascii=False) + "\n")
        self.records += 1

    def close(self) -> None:
        self._handle.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False
