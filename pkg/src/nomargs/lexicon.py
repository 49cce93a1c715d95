"""Noun-to-verb lexicon: JSON loading, dependency-pattern matching, baseline labeling.

Each entry maps a deverbal noun lemma to its verb and to dependency-tree
patterns describing how the noun's arguments can be realized.  A pattern is
a set of constraints over the noun's direct children; fulfilled patterns
yield role bindings (SUBJECT/OBJECT/PP/UNKNOWN) that the baseline labeler
converts into verbal UD relations.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Iterator

from .errors import LexiconError
from .treebank import Sentence, relation_matches

ROLES = ("SUBJECT", "OBJECT", "PP", "UNKNOWN")

# Constraint relations are limited to the child relations a deverbal noun's
# arguments can take; `nmod:*` stands for any prepositional subtype.
_CONSTRAINT_REL = re.compile(r"^(compound|amod|nmod(:(\*|[a-z_']+))?)$")


@dataclass(frozen=True)
class Constraint:
    rel: str
    role: str
    required: bool = True


@dataclass(frozen=True)
class DepPattern:
    constraints: tuple[Constraint, ...]


@dataclass(frozen=True)
class LexiconEntry:
    noun_lemma: str
    verb_lemma: str
    patterns: tuple[DepPattern, ...] = ()


@dataclass(frozen=True)
class Binding:
    """One constraint matched against a child of the noun."""

    role: str
    head: int
    rel: str  # the child's actual deprel, carrying the preposition for PP


@dataclass(frozen=True)
class PatternMatch:
    pattern: DepPattern
    bindings: tuple[Binding, ...]


class Lexicon:
    """Mapping of noun lemma to LexiconEntry, plus load-time warnings."""

    def __init__(self, entries: dict[str, LexiconEntry], warnings: list[str] | None = None):
        self.entries = entries
        self.warnings = warnings or []

    def __contains__(self, noun_lemma: str) -> bool:
        return noun_lemma in self.entries

    def __getitem__(self, noun_lemma: str) -> LexiconEntry:
        return self.entries[noun_lemma]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[str]:
        return iter(self.entries)

    def get(self, noun_lemma: str) -> LexiconEntry | None:
        return self.entries.get(noun_lemma)

    def verbs(self) -> set[str]:
        return {entry.verb_lemma for entry in self.entries.values()}


def role_to_relation(role: str, matched_rel: str) -> str | None:
    """Map a NomLex-style role to its verbal UD relation.

    PP takes its preposition from the matched arc (nmod:for -> nmod:for).
    UNKNOWN has no verbal label and maps to None.
    """
    if role == "SUBJECT":
        return "nsubj"
    if role == "OBJECT":
        return "dobj"
    if role == "PP":
        if matched_rel.startswith("nmod:") and matched_rel != "nmod:poss":
            return matched_rel
        return None  # no preposition observable on this arc
    return None


def _parse_constraint(raw: object, where: str) -> Constraint:
    if not isinstance(raw, dict):
        raise LexiconError(f"{where}: constraint must be an object")
    rel = raw.get("rel")
    role = raw.get("role")
    required = raw.get("required", True)
    if not isinstance(rel, str) or not (_CONSTRAINT_REL.match(rel) or rel == "nmod:poss"):
        raise LexiconError(f"{where}: bad constraint relation {rel!r}")
    if role not in ROLES:
        raise LexiconError(f"{where}: bad role {role!r}")
    if not isinstance(required, bool):
        raise LexiconError(f"{where}: 'required' must be boolean")
    if role == "PP" and (not rel.startswith("nmod:") or rel == "nmod:poss"):
        raise LexiconError(f"{where}: PP role needs a prepositional nmod relation, got {rel!r}")
    return Constraint(rel=rel, role=role, required=required)


def load_lexicon(path) -> Lexicon:
    """Load the JSON lexicon; duplicate noun lemmas keep the last entry (warned)."""
    with open(path, encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise LexiconError(f"not valid JSON: {exc}") from None
    return lexicon_from_dict(data)


def lexicon_from_dict(data: object) -> Lexicon:
    if not isinstance(data, dict) or not isinstance(data.get("nouns", []), list):
        raise LexiconError("top level must be an object with a 'nouns' array")
    entries: dict[str, LexiconEntry] = {}
    warnings: list[str] = []
    for i, raw in enumerate(data.get("nouns", [])):
        where = f"nouns[{i}]"
        if not isinstance(raw, dict):
            raise LexiconError(f"{where}: entry must be an object")
        noun = raw.get("noun")
        verb = raw.get("verb")
        for name, value in (("noun", noun), ("verb", verb)):
            if not isinstance(value, str) or not value:
                raise LexiconError(f"{where}: missing or empty {name!r}")
            if value != value.lower():
                raise LexiconError(f"{where}: {name!r} must be lowercase, got {value!r}")
        where = f"entry {noun!r}"
        patterns = []
        for j, raw_pattern in enumerate(raw.get("patterns", [])):
            if not isinstance(raw_pattern, dict) or not raw_pattern.get("constraints"):
                raise LexiconError(f"{where}: patterns[{j}] needs a nonempty constraint list")
            constraints = tuple(
                _parse_constraint(c, f"{where} patterns[{j}]")
                for c in raw_pattern["constraints"]
            )
            patterns.append(DepPattern(constraints=constraints))
        if noun in entries:
            warnings.append(f"duplicate noun {noun!r}: keeping the last entry")
        entries[noun] = LexiconEntry(
            noun_lemma=noun, verb_lemma=verb, patterns=tuple(patterns)
        )
    return Lexicon(entries, warnings)


def lexicon_to_dict(lexicon: Lexicon) -> dict:
    return {
        "nouns": [
            {
                "noun": entry.noun_lemma,
                "verb": entry.verb_lemma,
                "patterns": [
                    {
                        "constraints": [
                            {"rel": c.rel, "role": c.role, "required": c.required}
                            for c in pattern.constraints
                        ]
                    }
                    for pattern in entry.patterns
                ],
            }
            for entry in lexicon.entries.values()
        ]
    }


def save_lexicon(lexicon: Lexicon, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(lexicon_to_dict(lexicon), handle, ensure_ascii=False, indent=2)
        handle.write("\n")


def _assign(
    constraints: tuple[Constraint, ...],
    children: list[tuple[int, str]],
    used: set[int],
    pos: int,
) -> list[tuple[int, int, str]] | None:
    """First assignment (constraint order, then token order) binding every
    remaining required constraint to a distinct matching child.

    Returns ``(constraint index, head, deprel)`` triples, or None when some
    required constraint cannot be bound.
    """
    while pos < len(constraints) and not constraints[pos].required:
        pos += 1
    if pos == len(constraints):
        return []
    constraint = constraints[pos]
    for head, rel in children:
        if head in used or not relation_matches(rel, constraint.rel):
            continue
        used.add(head)
        rest = _assign(constraints, children, used, pos + 1)
        if rest is not None:
            return [(pos, head, rel)] + rest
        used.remove(head)
    return None


def match_patterns(
    entry: LexiconEntry, sentence: Sentence, noun: int
) -> list[PatternMatch]:
    """All fulfilled patterns of ``entry`` at the noun instance, in lexicon order.

    A pattern is fulfilled when every required constraint binds a distinct
    child; optional constraints are then bound greedily where possible.
    """
    children = [(t.id, t.deprel) for t in sentence.tokens if t.head == noun]
    matches = []
    for pattern in entry.patterns:
        used: set[int] = set()
        required = _assign(pattern.constraints, children, used, 0)
        if required is None:
            continue
        bound: dict[int, tuple[int, str]] = {i: (head, rel) for i, head, rel in required}
        for i, constraint in enumerate(pattern.constraints):
            if constraint.required:
                continue
            for head, rel in children:
                if head not in used and relation_matches(rel, constraint.rel):
                    used.add(head)
                    bound[i] = (head, rel)
                    break
        ordered = tuple(
            Binding(role=pattern.constraints[i].role, head=head, rel=rel)
            for i, (head, rel) in sorted(bound.items())
        )
        matches.append(PatternMatch(pattern=pattern, bindings=ordered))
    return matches


def gather_bindings(matches: list[PatternMatch]) -> dict[int, tuple[set[str], str]]:
    """Union the bindings of several matches: head -> (roles seen, deprel)."""
    gathered: dict[int, tuple[set[str], str]] = {}
    for match in matches:
        for binding in match.bindings:
            roles, _ = gathered.setdefault(binding.head, (set(), binding.rel))
            roles.add(binding.role)
    return gathered


def baseline_label(
    entry: LexiconEntry, sentence: Sentence, noun: int
) -> set[tuple[str, int]]:
    """Lexicon-only labeling: the combined non-colliding bindings of all
    fulfilled patterns, mapped to verbal relations.

    A head bound to more than one role is dropped; afterwards any relation
    claimed by two different heads is dropped, so the result satisfies the
    one-label-one-head constraint.
    """
    matches = match_patterns(entry, sentence, noun)
    gathered = gather_bindings(matches)
    by_relation: dict[str, list[int]] = {}
    for head in sorted(gathered):
        roles, rel = gathered[head]
        if len(roles) != 1:
            continue  # colliding argument
        relation = role_to_relation(next(iter(roles)), rel)
        if relation is None:
            continue
        by_relation.setdefault(relation, []).append(head)
    return {
        (relation, heads[0])
        for relation, heads in by_relation.items()
        if len(heads) == 1
    }
