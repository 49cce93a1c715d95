"""End-to-end enrichment of parsed sentences, shared by the CLI and estimator."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .embedstore import EmbeddingStore
from .identify import IdentifyConfig, identify_candidates, find_noun_instances
from .labeling import (
    Enrichment,
    LabeledArgument,
    LabelerConfig,
    enrich,
    label_instance,
    labels_to_enrichment,
)
from .lexicon import Lexicon
from .refbank import RefBank
from .treebank import Sentence


@dataclass(frozen=True)
class InstanceResult:
    noun: int
    verb_lemma: str
    labeled: tuple[LabeledArgument, ...]
    enrichment: Enrichment


@dataclass(frozen=True)
class SentenceResult:
    sentence: Sentence  # enriched copy
    instances: tuple[InstanceResult, ...]

    def enrichment_rows(self) -> list[dict]:
        rows = []
        for inst in self.instances:
            rows.append(
                {
                    "sent_id": self.sentence.sent_id,
                    "noun": inst.noun,
                    "verb": inst.verb_lemma,
                    "pairs": [
                        {"label": label, "head": head}
                        for label, head in inst.enrichment.pairs
                    ],
                    "scores": {
                        str(arg.candidate.head): arg.score
                        for arg in inst.labeled
                        if arg.label is not None
                    },
                }
            )
        return rows

    def candidate_rows(self) -> list[dict]:
        rows = []
        for inst in self.instances:
            rows.append(
                {
                    "sent_id": self.sentence.sent_id,
                    "noun": inst.noun,
                    "verb": inst.verb_lemma,
                    "candidates": [
                        {
                            "head": arg.candidate.head,
                            "relation": arg.candidate.relation,
                            "span": list(arg.candidate.span),
                        }
                        for arg in inst.labeled
                    ],
                }
            )
        return rows


def assign_positional_ids(sentences: list[Sentence], prefix: str = "s") -> list[Sentence]:
    """Give sentences without a sent_id a positional one (s1, s2, ...).

    Only the in-memory attribute changes; serialization output is untouched
    because comments are preserved verbatim.
    """
    out = []
    for i, sentence in enumerate(sentences, start=1):
        if sentence.sent_id:
            out.append(sentence)
        else:
            out.append(replace(sentence, sent_id=f"{prefix}{i}"))
    return out


def enrich_sentence(
    sentence: Sentence,
    lexicon: Lexicon,
    bank: RefBank,
    store: EmbeddingStore,
    labeler_config: LabelerConfig | None = None,
    identify_config: IdentifyConfig | None = None,
) -> SentenceResult:
    """Identify, label, and enrich every deverbal noun of one sentence."""
    labeler_config = labeler_config or LabelerConfig()
    identify_config = identify_config or IdentifyConfig()
    results = []
    enrichments = []
    for instance in find_noun_instances(sentence, lexicon):
        candidates = identify_candidates(instance, identify_config)
        vectors = [
            store.vector_for(sentence.sent_id, candidate.head)
            for candidate in candidates
        ]
        labeled = label_instance(instance, candidates, vectors, bank, labeler_config)
        enrichment = labels_to_enrichment(instance.noun, labeled)
        enrichments.append(enrichment)
        results.append(
            InstanceResult(
                noun=instance.noun,
                verb_lemma=instance.verb_lemma,
                labeled=tuple(labeled),
                enrichment=enrichment,
            )
        )
    return SentenceResult(
        sentence=enrich(sentence, enrichments), instances=tuple(results)
    )
