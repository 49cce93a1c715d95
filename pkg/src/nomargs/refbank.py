"""Per-verb banks of labeled verbal argument vectors.

A bank is built by scanning a parsed reference corpus for sentences
containing each target verb, reading the arguments off simple active and
passive dependency patterns, and storing the head-word vector of every
argument together with its relation label.  Banks persist to a versioned
binary file whose float payload round-trips bit-exactly.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .embedstore import EmbeddingStore
from .errors import (
    DimensionMismatchError,
    RefBankBuildError,
    RefBankFormatError,
    ZeroVectorError,
)
from .treebank import Sentence

BANK_MAGIC = b"NARB"
BANK_VERSION = 1

DEFAULT_SENTENCE_CAP = 1500

VERBAL_UPOS = ("VERB", "AUX")

# nmod subtypes that do not encode a preposition and therefore cannot become
# an nmod:X argument label.
_NON_PREPOSITIONAL_NMOD = ("nmod:poss", "nmod:npmod", "nmod:tmod")


@dataclass(frozen=True)
class RefArgument:
    verb_lemma: str
    label: str
    vector: np.ndarray
    source: tuple[str, int]  # (sent_id, token index)
    ordinal: int

    def __eq__(self, other) -> bool:  # vectors need array comparison
        return (
            isinstance(other, RefArgument)
            and self.verb_lemma == other.verb_lemma
            and self.label == other.label
            and self.source == other.source
            and self.ordinal == other.ordinal
            and np.array_equal(self.vector, other.vector)
        )

    def __hash__(self) -> int:
        return hash((self.verb_lemma, self.label, self.source, self.ordinal))


def _is_prepositional_nmod(deprel: str) -> bool:
    return (
        deprel.startswith("nmod:")
        and deprel not in _NON_PREPOSITIONAL_NMOD
    )


def extract_verbal_arguments(sentence: Sentence, verb: int) -> list[tuple[str, int]]:
    """Arguments of the verb at ``verb``: (label, head index) pairs in token order.

    Active clauses map nsubj/dobj/nmod:X through unchanged.  A clause is
    passive when the verb has an nsubjpass or auxpass child; then nsubjpass
    becomes dobj, the by-phrase becomes nsubj, and other nmod:X survive.
    At most one argument per label, first in token order.
    """
    children = [(t.id, t.deprel) for t in sentence.tokens if t.head == verb]
    passive = any(rel in ("nsubjpass", "auxpass") for _, rel in children)
    found: dict[str, int] = {}
    for head, rel in children:
        if passive:
            if rel == "nsubjpass":
                label = "dobj"
            elif rel == "nmod:by":
                label = "nsubj"
            elif _is_prepositional_nmod(rel):
                label = rel
            else:
                continue
        else:
            if rel in ("nsubj", "dobj"):
                label = rel
            elif _is_prepositional_nmod(rel):
                label = rel
            else:
                continue
        found.setdefault(label, head)
    return sorted(found.items(), key=lambda pair: pair[1])


class RefBank:
    """Immutable after construction; per-verb argument lists keep dense ordinals."""

    def __init__(self, dim: int, sentence_cap: int = DEFAULT_SENTENCE_CAP):
        self.dim = dim
        self.sentence_cap = sentence_cap
        self._args: dict[str, list[RefArgument]] = {}

    def add(self, verb_lemma: str, label: str, vector, source: tuple[str, int]) -> RefArgument:
        matrix = np.asarray(vector, dtype=np.float32)
        if matrix.shape != (self.dim,):
            raise DimensionMismatchError(
                f"vector of shape {matrix.shape} in a dim-{self.dim} bank"
            )
        args = self._args.setdefault(verb_lemma, [])
        argument = RefArgument(
            verb_lemma=verb_lemma,
            label=label,
            vector=matrix,
            source=source,
            ordinal=len(args),
        )
        args.append(argument)
        return argument

    def verbs(self) -> list[str]:
        return list(self._args)

    def arguments(self, verb_lemma: str) -> list[RefArgument]:
        return list(self._args.get(verb_lemma, ()))

    def size(self, verb_lemma: str) -> int:
        return len(self._args.get(verb_lemma, ()))

    def __len__(self) -> int:
        return sum(len(v) for v in self._args.values())

    def stats(self) -> dict[str, dict[str, int]]:
        """Per-verb argument and contributing-sentence counts."""
        out = {}
        for verb, args in self._args.items():
            out[verb] = {
                "arguments": len(args),
                "sentences": len({a.source[0] for a in args}),
            }
        return out


def build_refbank(
    corpus: Iterable[Sentence],
    verbs: Iterable[str],
    store: EmbeddingStore,
    cap: int = DEFAULT_SENTENCE_CAP,
) -> RefBank:
    """Scan the corpus in order, collecting argument vectors per target verb.

    A sentence counts toward a verb's cap only when it contributes at least
    one argument; scanning stops for that verb once ``cap`` sentences have
    contributed.  One argument per label per sentence (first wins), even
    when the verb occurs several times.
    """
    targets = set(verbs)
    bank = RefBank(dim=store.dim, sentence_cap=cap)
    contributed: dict[str, int] = {verb: 0 for verb in targets}
    for sentence in corpus:
        lemmas_here = {
            t.lemma.lower()
            for t in sentence.tokens
            if t.upos in VERBAL_UPOS and t.lemma.lower() in targets
        }
        # Sorted so bank insertion order (and the persisted bytes) never
        # depends on set-iteration order.
        for verb in sorted(lemmas_here):
            if contributed[verb] >= cap:
                continue
            found: dict[str, int] = {}
            for token in sentence.tokens:
                if token.upos in VERBAL_UPOS and token.lemma.lower() == verb:
                    for label, head in extract_verbal_arguments(sentence, token.id):
                        found.setdefault(label, head)
            if not found:
                continue
            if sentence.sent_id not in store:
                raise RefBankBuildError(
                    f"no embedding record for reference sentence {sentence.sent_id!r}"
                )
            if store.n_tokens(sentence.sent_id) != len(sentence.tokens):
                raise RefBankBuildError(
                    f"embedding record for {sentence.sent_id!r} has "
                    f"{store.n_tokens(sentence.sent_id)} rows, sentence has "
                    f"{len(sentence.tokens)} tokens"
                )
            for label, head in sorted(found.items(), key=lambda pair: pair[1]):
                vector = store.vector_for(sentence.sent_id, head)
                bank.add(verb, label, vector, (sentence.sent_id, head))
            contributed[verb] += 1
    return bank


def save_refbank(bank: RefBank, path) -> None:
    """Deterministic serialization: same bank contents, same bytes."""
    strings: dict[str, int] = {}
    rows = []
    for verb in bank.verbs():
        for arg in bank.arguments(verb):
            for s in (arg.verb_lemma, arg.label, arg.source[0]):
                if s not in strings:
                    strings[s] = len(strings)
            rows.append(arg)
    with open(path, "wb") as handle:
        handle.write(BANK_MAGIC)
        handle.write(struct.pack("<III", BANK_VERSION, bank.dim, bank.sentence_cap))
        handle.write(struct.pack("<I", len(strings)))
        for s in strings:
            encoded = s.encode("utf-8")
            handle.write(struct.pack("<I", len(encoded)))
            handle.write(encoded)
        handle.write(struct.pack("<I", len(rows)))
        for arg in rows:
            handle.write(
                struct.pack(
                    "<IIIII",
                    strings[arg.verb_lemma],
                    strings[arg.label],
                    strings[arg.source[0]],
                    arg.source[1],
                    arg.ordinal,
                )
            )
            handle.write(arg.vector.astype("<f4", copy=False).tobytes(order="C"))


def _read_exact(handle, count: int, what: str) -> bytes:
    data = handle.read(count)
    if len(data) != count:
        raise RefBankFormatError(f"truncated bank file while reading {what}")
    return data


def load_refbank(path) -> RefBank:
    with open(path, "rb") as handle:
        magic = handle.read(4)
        if magic != BANK_MAGIC:
            raise RefBankFormatError(f"bad magic {magic!r}, expected {BANK_MAGIC!r}")
        version, dim, cap = struct.unpack("<III", _read_exact(handle, 12, "header"))
        if version != BANK_VERSION:
            raise RefBankFormatError(f"unsupported bank version {version}")
        (n_strings,) = struct.unpack("<I", _read_exact(handle, 4, "string count"))
        strings = []
        for _ in range(n_strings):
            (length,) = struct.unpack("<I", _read_exact(handle, 4, "string length"))
            strings.append(_read_exact(handle, length, "string").decode("utf-8"))
        (n_args,) = struct.unpack("<I", _read_exact(handle, 4, "argument count"))
        bank = RefBank(dim=dim, sentence_cap=cap)
        for i in range(n_args):
            verb_i, label_i, sent_i, token_index, ordinal = struct.unpack(
                "<IIIII", _read_exact(handle, 20, f"argument {i} header")
            )
            payload = _read_exact(handle, dim * 4, f"argument {i} vector")
            vector = np.frombuffer(payload, dtype="<f4")
            argument = bank.add(
                strings[verb_i], strings[label_i], vector, (strings[sent_i], token_index)
            )
            if argument.ordinal != ordinal:
                raise RefBankFormatError(
                    f"argument {i}: stored ordinal {ordinal} is not dense"
                )
        if handle.read(1):
            raise RefBankFormatError("trailing bytes after the last argument")
    return bank


def query_knn(
    bank: RefBank, verb: str, q, k: int
) -> list[tuple[RefArgument, float]]:
    """The k reference arguments nearest to ``q`` by cosine, best first.

    Ties break toward the lower ordinal, so results are deterministic.
    Returns min(k, bank size) pairs.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (bank.dim,):
        raise DimensionMismatchError(f"query of shape {q.shape} against dim-{bank.dim} bank")
    norm_q = math.sqrt(float(np.dot(q, q)))
    if norm_q == 0.0:
        raise ZeroVectorError("cannot query with a zero-norm vector")
    args = bank.arguments(verb)
    scored = []
    for arg in args:
        v = arg.vector.astype(np.float64)
        norm_v = math.sqrt(float(np.dot(v, v)))
        if norm_v == 0.0:
            raise ZeroVectorError(
                f"bank holds a zero-norm vector (verb {verb!r}, ordinal {arg.ordinal})"
            )
        score = float(np.dot(q, v)) / (norm_q * norm_v)
        scored.append((arg, max(-1.0, min(1.0, score))))
    scored.sort(key=lambda pair: (-pair[1], pair[0].ordinal))
    return scored[:k]


def label_centroids(bank: RefBank, verb: str) -> dict[str, np.ndarray]:
    """Arithmetic mean vector per label; labels without members are absent."""
    grouped: dict[str, list[np.ndarray]] = {}
    for arg in bank.arguments(verb):
        grouped.setdefault(arg.label, []).append(arg.vector)
    return {
        label: np.mean(np.stack(vectors).astype(np.float64), axis=0)
        for label, vectors in grouped.items()
    }


def bank_vectors(bank: RefBank, verb: str) -> Sequence[np.ndarray]:
    return [arg.vector for arg in bank.arguments(verb)]
