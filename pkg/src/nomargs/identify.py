"""Locate deverbal-noun instances and their candidate arguments.

Candidates are the noun's direct children on a fixed allowlist of UD
relations (possessive, compound, adjectival, prepositional); each carries
the contiguous span of its subtree.  Coordinated arguments contribute only
their first conjunct, since ``conj`` is never on the allowlist.
"""

from __future__ import annotations

from dataclasses import dataclass

from .lexicon import Lexicon
from .treebank import Sentence, children_by_relation

# `nmod:*` covers bare nmod and every subtype; nmod:poss is listed for
# clarity but would be matched by the wildcard anyway.
DEFAULT_RELATION_SET = ("nmod:poss", "compound", "amod", "nmod:*")

NOMINAL_UPOS = ("NOUN",)  # PROPN deliberately excluded


@dataclass(frozen=True)
class NounInstance:
    sentence: Sentence
    noun: int
    verb_lemma: str


@dataclass(frozen=True)
class Candidate:
    head: int
    relation: str
    span: tuple[int, int]


@dataclass(frozen=True)
class IdentifyConfig:
    include_amod: bool = True
    relation_set: tuple[str, ...] = DEFAULT_RELATION_SET

    def active_relations(self) -> tuple[str, ...]:
        if self.include_amod:
            return self.relation_set
        return tuple(r for r in self.relation_set if r != "amod")


def find_noun_instances(sentence: Sentence, lexicon: Lexicon) -> list[NounInstance]:
    """One instance per nominal token whose lemma is in the lexicon, in token order."""
    instances = []
    for token in sentence.tokens:
        if token.upos not in NOMINAL_UPOS:
            continue
        entry = lexicon.get(token.lemma.lower())
        if entry is None:
            continue
        instances.append(
            NounInstance(sentence=sentence, noun=token.id, verb_lemma=entry.verb_lemma)
        )
    return instances


def identify_candidates(
    instance: NounInstance, config: IdentifyConfig | None = None
) -> list[Candidate]:
    """Candidate arguments of the noun, ordered by head index."""
    config = config or IdentifyConfig()
    sentence = instance.sentence
    candidates = []
    for head, relation in children_by_relation(
        sentence, instance.noun, config.active_relations()
    ):
        if sentence.token(head).upos == "PUNCT":
            continue
        subtree = sentence.subtree(head)
        candidates.append(
            Candidate(head=head, relation=relation, span=(subtree[0], subtree[-1]))
        )
    return candidates
