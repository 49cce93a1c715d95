"""Per-token contextual vectors from a masked language model.

Each request carries pre-tokenized words; a word's vector is the mean of
its subword vectors from a chosen hidden layer (final by default, special
tokens excluded).  Inference runs in eval mode with gradients off, so
identical inputs always produce identical vectors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer

from .formats import EmbeddingWriter

# Fraction of skipped requests above which a run is considered broken.
MAX_SKIP_FRACTION = 0.01


@dataclass(frozen=True)
class EncodeRequest:
    sent_id: str
    tokens: tuple[str, ...]


@dataclass
class EncodeSummary:
    records: int
    skipped: list[tuple[str, str]]  # (sent_id, reason)

    @property
    def requests(self) -> int:
        return self.records + len(self.skipped)

    def skip_fraction(self) -> float:
        return len(self.skipped) / self.requests if self.requests else 0.0


class SkipBudgetExceeded(RuntimeError):
    """More than MAX_SKIP_FRACTION of the requests could not be aligned."""


def read_requests(path) -> list[EncodeRequest]:
    """Load ``{"sent_id": ..., "tokens": [...]}`` JSONL rows."""
    requests = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            tokens = row.get("tokens")
            if not row.get("sent_id") or not tokens:
                raise ValueError(f"line {line_no}: request needs sent_id and tokens")
            requests.append(
                EncodeRequest(sent_id=str(row["sent_id"]), tokens=tuple(tokens))
            )
    return requests


def requests_from_conllu(path) -> list[EncodeRequest]:
    """Derive requests from a CoNLL-U file (integer-id rows only).

    Sentences without a ``# sent_id`` comment get positional ids s1, s2, ...
    matching the enrichment pipeline's rule.
    """
    requests: list[EncodeRequest] = []
    sent_id = ""
    tokens: list[str] = []

    def flush():
        nonlocal sent_id, tokens
        if tokens:
            requests.append(
                EncodeRequest(
                    sent_id=sent_id or f"s{len(requests) + 1}", tokens=tuple(tokens)
                )
            )
        sent_id, tokens = "", []

    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line:
                flush()
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("sent_id") and "=" in body:
                    sent_id = body.split("=", 1)[1].strip()
                continue
            columns = line.split("\t")
            if len(columns) == 10 and columns[0].isdigit():
                tokens.append(columns[1])
    flush()
    return requests


class MaskedLmEncoder:
    def __init__(self, model_id: str, device: str = "cpu", layer: int = -1):
        self.tokenizer = AutoTokenizer.from_pretrained(model_id)
        if not self.tokenizer.is_fast:
            raise ValueError("a fast tokenizer is required for word alignment")
        self.model = AutoModel.from_pretrained(model_id)
        self.model.eval()
        self.device = torch.device(device)
        self.model.to(self.device)
        self.layer = layer
        self.dim = int(self.model.config.hidden_size)

    def encode_batch(
        self, batch: list[EncodeRequest]
    ) -> list[tuple[EncodeRequest, np.ndarray | None, str]]:
        """Returns (request, matrix or None, skip reason) per request, in order."""
        outcomes: list[tuple[np.ndarray | None, str]] = [None] * len(batch)
        cleaned: list[tuple[int, EncodeRequest]] = []
        for index, request in enumerate(batch):
            if any(not word.strip() for word in request.tokens):
                outcomes[index] = (None, "empty word cannot be aligned")
            else:
                cleaned.append((index, request))
        if cleaned:
            encoding = self.tokenizer(
                [list(r.tokens) for _, r in cleaned],
                is_split_into_words=True,
                padding=True,
                truncation=True,
                return_tensors="pt",
            )
            with torch.no_grad():
                output = self.model(
                    **{k: v.to(self.device) for k, v in encoding.items()},
                    output_hidden_states=True,
                )
            hidden = output.hidden_states[self.layer].cpu().numpy()
            for i, (index, request) in enumerate(cleaned):
                word_ids = encoding.word_ids(batch_index=i)
                pieces: dict[int, list[int]] = {}
                for position, word_index in enumerate(word_ids):
                    if word_index is not None:
                        pieces.setdefault(word_index, []).append(position)
                if len(pieces) != len(request.tokens):
                    missing = len(request.tokens) - len(pieces)
                    outcomes[index] = (
                        None,
                        f"{missing} word(s) lost in subword alignment",
                    )
                    continue
                matrix = np.stack(
                    [
                        hidden[i, pieces[w]].mean(axis=0)
                        for w in range(len(request.tokens))
                    ]
                ).astype(np.float32)
                outcomes[index] = (matrix, "")
        return [
            (request, outcome[0], outcome[1])
            for request, outcome in zip(batch, outcomes)
        ]


def _batches(requests: list[EncodeRequest], size: int) -> Iterator[list[EncodeRequest]]:
    for start in range(0, len(requests), size):
        yield requests[start : start + size]


def encode_corpus(
    requests: Iterable[EncodeRequest],
    model_id: str,
    output_path,
    fmt: str = "navf",
    batch_size: int = 16,
    device: str = "cpu",
    layer: int = -1,
    error_path=None,
) -> EncodeSummary:
    """Encode every request into one embedding record, preserving order.

    Requests whose words cannot be aligned to subwords are skipped and listed
    in the error report; the run fails (SkipBudgetExceeded) when more than
    MAX_SKIP_FRACTION of the requests are skipped.
    """
    requests = list(requests)
    seen: set[str] = set()
    for request in requests:
        if request.sent_id in seen:
            raise ValueError(f"duplicate sent_id {request.sent_id!r} in request stream")
        seen.add(request.sent_id)
    encoder = MaskedLmEncoder(model_id, device=device, layer=layer)
    skipped: list[tuple[str, str]] = []
    with EmbeddingWriter(output_path, fmt, encoder.dim) as writer:
        for batch in _batches(requests, batch_size):
            for request, matrix, reason in encoder.encode_batch(batch):
                if matrix is None:
                    skipped.append((request.sent_id, reason))
                else:
                    writer.write(request.sent_id, matrix)
        summary = EncodeSummary(records=writer.records, skipped=skipped)
    if error_path is not None:
        with open(error_path, "w", encoding="utf-8") as handle:
            for sent_id, reason in skipped:
                handle.write(
                    json.dumps({"sent_id": sent_id, "reason": reason}) + "\n"
                )
    if summary.skip_fraction() > MAX_SKIP_FRACTION:
        raise SkipBudgetExceeded(
            f"{len(skipped)} of {summary.requests} requests skipped "
            f"({summary.skip_fraction():.1%} > {MAX_SKIP_FRACTION:.0%})"
        )
    return summary


def load_static_table(path) -> tuple[int, dict[str, np.ndarray]]:
    """Text table: '<count> <dim>' header, then 'word f1 ... fdim' rows."""
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().split()
        if len(header) != 2:
            raise ValueError("static table must start with '<count> <dim>'")
        count, dim = int(header[0]), int(header[1])
        vectors: dict[str, np.ndarray] = {}
        for line in handle:
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise ValueError(f"bad static row for {parts[0]!r}")
            vectors[parts[0]] = np.asarray([float(x) for x in parts[1:]], dtype=np.float32)
    if len(vectors) != count:
        raise ValueError(f"header announced {count} rows, found {len(vectors)}")
    return dim, vectors


def encode_static(
    requests: Iterable[EncodeRequest],
    table_path,
    output_path,
    fmt: str = "navf",
    error_path=None,
) -> EncodeSummary:
    """Copy per-token vectors from a static table (surface, then lowercase).

    A request containing any out-of-vocabulary token is skipped, keeping
    records aligned with full sentences.
    """
    requests = list(requests)
    dim, vectors = load_static_table(table_path)
    skipped: list[tuple[str, str]] = []
    with EmbeddingWriter(output_path, fmt, dim) as writer:
        for request in requests:
            rows = []
            missing = None
            for word in request.tokens:
                vector = vectors.get(word)
                if vector is None:
                    vector = vectors.get(word.lower())
                if vector is None:
                    missing = word
                    break
                rows.append(vector)
            if missing is not None:
                skipped.append((request.sent_id, f"out-of-vocabulary token {missing!r}"))
                continue
            writer.write(request.sent_id, np.stack(rows))
        summary = EncodeSummary(records=writer.records, skipped=skipped)
    if error_path is not None:
        with open(error_path, "w", encoding="utf-8") as handle:
            for sent_id, reason in skipped:
                handle.write(json.dumps({"sent_id": sent_id, "reason": reason}) + "\n")
    return summary
