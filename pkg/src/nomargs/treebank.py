"""CoNLL-U sentences: parsing, validation, querying, and serialization.

Relation names follow UDv1 (``dobj``, ``nmod:of``, ``nsubjpass``).  A
rename table can be supplied at parse time to fold UDv2 corpora into that
inventory.  Extra argument arcs live in the ``deps`` (enhanced) column as
``head:relation`` pairs; the primary tree is never touched.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace
from typing import IO, Iterable, Mapping

from .errors import ConlluParseError, TreeStructureError

# UDv2 -> UDv1 relation renames; subtypes survive the prefix rules
# (obl:with -> nmod:with).
UDV2_TO_UDV1_RENAMES: dict[str, str] = {
    "obj": "dobj",
    "obl": "nmod",
    "nsubj:pass": "nsubjpass",
    "csubj:pass": "csubjpass",
    "aux:pass": "auxpass",
}


@dataclass(frozen=True)
class Token:
    """One syntactic word (multiword-token ranges and empty nodes are not Tokens)."""

    id: int
    form: str
    lemma: str
    upos: str
    head: int
    deprel: str
    deps: tuple[tuple[int, str], ...] = ()
    misc: tuple[tuple[str, str | None], ...] = ()
    # Kept verbatim so files round-trip; never interpreted.
    xpos: str = "_"
    feats: str = "_"

    def misc_value(self, key: str) -> str | None:
        for k, v in self.misc:
            if k == key:
                return v
        return None


@dataclass(frozen=True)
class Sentence:
    """An immutable dependency tree plus everything needed to re-emit its block.

    ``extras`` holds comment lines, multiword-token ranges and empty nodes
    verbatim, each anchored to the number of real tokens preceding it.
    """

    sent_id: str
    tokens: tuple[Token, ...]
    extras: tuple[tuple[int, str], ...] = ()

    def __len__(self) -> int:
        return len(self.tokens)

    def token(self, index: int) -> Token:
        """Return the token with 1-based ``index``."""
        if not 1 <= index <= len(self.tokens):
            raise IndexError(f"token index {index} out of range 1..{len(self.tokens)}")
        return self.tokens[index - 1]

    @property
    def comments(self) -> tuple[str, ...]:
        return tuple(line for _, line in self.extras if line.startswith("#"))

    def children(self, head: int) -> list[Token]:
        return [t for t in self.tokens if t.head == head]

    def subtree(self, head: int) -> list[int]:
        """All 1-based indices in the subtree rooted at ``head``, ascending."""
        self.token(head)
        kids: dict[int, list[int]] = {}
        for t in self.tokens:
            kids.setdefault(t.head, []).append(t.id)
        out: list[int] = []
        stack = [head]
        while stack:
            node = stack.pop()
            out.append(node)
            stack.extend(kids.get(node, ()))
        return sorted(out)


def relation_matches(deprel: str, pattern: str) -> bool:
    """True if ``deprel`` matches ``pattern``.

    Patterns are exact (``compound``) or prefixed (``nmod:*``, matching
    ``nmod`` itself and every ``nmod:X`` subtype).
    """
    if pattern.endswith(":*"):
        base = pattern[:-2]
        return deprel == base or deprel.startswith(base + ":")
    return deprel == pattern


def children_by_relation(
    sentence: Sentence, head: int, relations: Iterable[str]
) -> list[tuple[int, str]]:
    """Children of ``head`` (primary arcs) whose deprel matches any pattern.

    Returned in token order as ``(index, deprel)`` pairs; each child appears
    at most once even when several patterns match it.
    """
    if not 1 <= head <= len(sentence.tokens):
        raise IndexError(f"head index {head} out of range 1..{len(sentence.tokens)}")
    patterns = tuple(relations)
    out = []
    for tok in sentence.tokens:
        if tok.head == head and any(relation_matches(tok.deprel, p) for p in patterns):
            out.append((tok.id, tok.deprel))
    return out


def validate_sentence(sentence: Sentence) -> None:
    """Check the Sentence invariants; raise TreeStructureError on violation."""
    n = len(sentence.tokens)
    sid = sentence.sent_id
    for pos, tok in enumerate(sentence.tokens, start=1):
        if tok.id != pos:
            raise TreeStructureError(
                f"token ids must be contiguous 1..n, found {tok.id} at position {pos}", sid
            )
        if tok.head == tok.id:
            raise TreeStructureError(f"token {tok.id} is its own head", sid)
        if not 0 <= tok.head <= n:
            raise TreeStructureError(f"token {tok.id} has head {tok.head} out of range", sid)
        for dep_head, rel in tok.deps:
            if not 0 <= dep_head <= n:
                raise TreeStructureError(
                    f"token {tok.id} has enhanced head {dep_head} out of range", sid
                )
            if not rel:
                raise TreeStructureError(f"token {tok.id} has an empty enhanced relation", sid)
    roots = [t.id for t in sentence.tokens if t.head == 0]
    if n and len(roots) != 1:
        raise TreeStructureError(f"expected exactly one root, found {roots}", sid)
    # Every token must reach the root by following heads (no cycles).
    for tok in sentence.tokens:
        seen = set()
        node = tok.id
        while node != 0:
            if node in seen:
                raise TreeStructureError(f"cycle through token {node}", sid)
            seen.add(node)
            node = sentence.tokens[node - 1].head


def _apply_rename(deprel: str, renames: Mapping[str, str]) -> str:
    if deprel in renames:
        return renames[deprel]
    base, sep, subtype = deprel.partition(":")
    if sep and base in renames:
        return f"{renames[base]}:{subtype}"
    return deprel


def _parse_deps(raw: str, renames: Mapping[str, str]) -> tuple[tuple[int, str], ...]:
    if raw == "_" or raw == "":
        return ()
    out = []
    for part in raw.split("|"):
        head_str, sep, rel = part.partition(":")
        if not sep or not rel:
            raise ValueError(f"bad deps entry {part!r}")
        out.append((int(head_str), _apply_rename(rel, renames)))
    return tuple(out)


def _parse_misc(raw: str) -> tuple[tuple[str, str | None], ...]:
    if raw == "_":
        return ()
    out = []
    for part in raw.split("|"):
        key, sep, value = part.partition("=")
        out.append((key, value if sep else None))
    return tuple(out)


def _format_misc(misc: tuple[tuple[str, str | None], ...]) -> str:
    if not misc:
        return "_"
    return "|".join(k if v is None else f"{k}={v}" for k, v in misc)


def _format_deps(deps: tuple[tuple[int, str], ...]) -> str:
    if not deps:
        return "_"
    return "|".join(f"{h}:{r}" for h, r in sorted(deps))


def parse_conllu(
    stream: IO[str] | str,
    renames: Mapping[str, str] | None = None,
) -> list[Sentence]:
    """Parse a CoNLL-U stream into validated sentences.

    Multiword-token ranges (``1-2``) and empty nodes (``1.1``) are carried
    through verbatim and excluded from the tree.  ``renames`` (if given) is
    applied to every primary and enhanced relation.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    renames = renames or {}
    sentences: list[Sentence] = []

    tokens: list[Token] = []
    extras: list[tuple[int, str]] = []
    sent_id = ""

    def flush(line_number: int) -> None:
        nonlocal tokens, extras, sent_id
        if not tokens and not extras:
            return
        sentence = Sentence(sent_id=sent_id, tokens=tuple(tokens), extras=tuple(extras))
        try:
            validate_sentence(sentence)
        except TreeStructureError as exc:
            if not sentence.sent_id:
                raise TreeStructureError(str(exc), f"ending at line {line_number}") from exc
            raise
        sentences.append(sentence)
        tokens, extras, sent_id = [], [], ""

    line_no = 0
    for line_no, line in enumerate(stream, start=1):
        line = line.rstrip("\n")
        if line == "":
            flush(line_no)
            continue
        if line.startswith("#"):
            extras.append((len(tokens), line))
            body = line[1:].strip()
            if body.startswith("sent_id") and "=" in body:
                sent_id = body.split("=", 1)[1].strip()
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ConlluParseError(
                f"expected 10 tab-separated columns, found {len(cols)}", line_no
            )
        if "-" in cols[0] or "." in cols[0]:
            extras.append((len(tokens), line))
            continue
        try:
            tok_id = int(cols[0])
            head = int(cols[6])
        except ValueError as exc:
            raise ConlluParseError(f"non-integer id or head: {exc}", line_no) from None
        try:
            deps = _parse_deps(cols[8], renames)
        except ValueError as exc:
            raise ConlluParseError(str(exc), line_no) from None
        tokens.append(
            Token(
                id=tok_id,
                form=cols[1],
                lemma=cols[2],
                upos=cols[3],
                xpos=cols[4],
                feats=cols[5],
                head=head,
                deprel=_apply_rename(cols[7], renames),
                deps=deps,
                misc=_parse_misc(cols[9]),
            )
        )
    flush(line_no + 1)
    return sentences


def serialize_conllu(sentences: Iterable[Sentence]) -> str:
    """Render sentences as CoNLL-U text (LF endings, one blank line per block)."""
    chunks: list[str] = []
    for sentence in sentences:
        lines: list[str] = []
        extras = list(sentence.extras)
        for count in range(len(sentence.tokens) + 1):
            while extras and extras[0][0] == count:
                lines.append(extras.pop(0)[1])
            if count < len(sentence.tokens):
                t = sentence.tokens[count]
                lines.append(
                    "\t".join(
                        (
                            str(t.id),
                            t.form,
                            t.lemma,
                            t.upos,
                            t.xpos,
                            t.feats,
                            str(t.head),
                            t.deprel,
                            _format_deps(t.deps),
                            _format_misc(t.misc),
                        )
                    )
                )
        chunks.append("\n".join(lines) + "\n\n")
    return "".join(chunks)


def load_conllu_file(path, renames: Mapping[str, str] | None = None) -> list[Sentence]:
    with open(path, encoding="utf-8") as handle:
        return parse_conllu(handle, renames)


def save_conllu_file(path, sentences: Iterable[Sentence]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(serialize_conllu(sentences))


def with_extra_arcs(sentence: Sentence, arcs: Mapping[int, list[tuple[int, str]]]) -> Sentence:
    """Copy of ``sentence`` whose tokens gain the given enhanced arcs.

    ``arcs`` maps a dependent token index to ``(head, relation)`` pairs;
    already-present pairs are skipped, so the operation is idempotent.
    """
    if not arcs:
        return sentence
    new_tokens = list(sentence.tokens)
    for dep_index, pairs in arcs.items():
        tok = sentence.token(dep_index)
        deps = list(tok.deps)
        for pair in pairs:
            if pair not in deps:
                deps.append(pair)
        new_tokens[dep_index - 1] = replace(tok, deps=tuple(sorted(deps)))
    return replace(sentence, tokens=tuple(new_tokens))
