"""Assign verbal relation labels to candidate arguments of deverbal nouns.

Two scorers are available: ``nearest-avg`` compares the candidate vector to
the per-label mean of the reference vectors, ``knn`` sums cosine scores per
label over the k nearest reference arguments.  Candidates whose best score
misses the threshold receive the null label; when uniqueness is on, label
conflicts are settled greedily by score, losers dropping to their next
alternative that still clears the threshold.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .embedstore import cosine
from .errors import EnrichmentError
from .identify import Candidate, NounInstance
from .refbank import RefBank, label_centroids, query_knn
from .treebank import Sentence, with_extra_arcs

METHOD_KNN = "knn"
METHOD_NEAREST_AVG = "nearest-avg"
METHODS = (METHOD_KNN, METHOD_NEAREST_AVG)

# Operating points tuned on the two development sets.
PARAPHRASE_TUNED_THRESHOLD = 0.56
NOMLEX_TUNED_THRESHOLD = 0.48

DEFAULT_K = 5


def label_sort_key(label: str) -> tuple[int, str]:
    """Fixed tie-break order: nsubj, dobj, then nmod:X lexicographically."""
    if label == "nsubj":
        return (0, "")
    if label == "dobj":
        return (1, "")
    return (2, label)


@dataclass(frozen=True)
class LabelerConfig:
    method: str = METHOD_KNN
    k: int = DEFAULT_K
    threshold: float = NOMLEX_TUNED_THRESHOLD
    unique: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


@dataclass(frozen=True)
class LabeledArgument:
    """A candidate with its verdict; ``label`` None means the null verdict.

    ``alternatives`` lists the (label, score) options the candidate was
    allowed to take, best first.
    """

    candidate: Candidate
    label: str | None
    score: float
    alternatives: tuple[tuple[str, float], ...]


@dataclass(frozen=True)
class Enrichment:
    """The output pairs for one noun instance: label and argument head index."""

    noun: int
    pairs: tuple[tuple[str, int], ...]

    def __post_init__(self):
        labels = [label for label, _ in self.pairs]
        heads = [head for _, head in self.pairs]
        if len(set(labels)) != len(labels) or len(set(heads)) != len(heads):
            raise EnrichmentError(
                f"noun {self.noun}: repeated label or head in {self.pairs}"
            )


def make_enrichment(noun: int, pairs) -> Enrichment:
    """Build an Enrichment with pairs sorted by head index."""
    return Enrichment(noun=noun, pairs=tuple(sorted(pairs, key=lambda p: p[1])))


def allowed_labels_for_relation(relation: str) -> str | None:
    """Restriction a candidate's identifying relation puts on its label.

    Returns None for unrestricted relations (possessive, compound,
    adjectival).  An nmod:Y candidate may keep its own preposition but never
    take another's; a bare nmod has no preposition, so no nmod label at all.
    """
    if relation in ("nmod:poss", "compound", "amod"):
        return None
    if relation.startswith("nmod:"):
        return relation
    if relation == "nmod":
        return ""
    return None


def _label_allowed(label: str, relation: str) -> bool:
    if label in ("nsubj", "dobj"):
        return True
    own = allowed_labels_for_relation(relation)
    if own is None:
        return True
    return label == own


def _rank(pairs: dict[str, float]) -> list[tuple[str, float]]:
    return sorted(pairs.items(), key=lambda p: (-p[1], label_sort_key(p[0])))


def score_nearest_avg(q, centroids: dict[str, np.ndarray]) -> list[tuple[str, float]]:
    """Cosine of the candidate vector against each label centroid, best first."""
    if not centroids:
        return []
    return _rank({label: cosine(q, centroid) for label, centroid in centroids.items()})


def score_knn(q, bank: RefBank, verb: str, k: int) -> list[tuple[str, float]]:
    """Per-label sums of cosine scores over the k nearest references, best first.

    Labels absent from the k-set get no entry.
    """
    sums: dict[str, float] = {}
    for arg, score in query_knn(bank, verb, q, k):
        sums[arg.label] = sums.get(arg.label, 0.0) + score
    return _rank(sums)


def _candidate_scores(
    q, bank: RefBank, verb: str, config: LabelerConfig
) -> tuple[list[tuple[str, float]], dict[str, float], float]:
    """Ranked alternatives, the per-label threshold statistic, and the
    candidate-level threshold statistic for one candidate vector."""
    if config.method == METHOD_NEAREST_AVG:
        centroids = label_centroids(bank, verb)
        ranked = score_nearest_avg(q, centroids)
        gates = dict(ranked)
        best = max(gates.values()) if gates else float("-inf")
        return ranked, gates, best
    neighbors = query_knn(bank, verb, q, config.k)
    sums: dict[str, float] = {}
    gates: dict[str, float] = {}
    best = float("-inf")
    for arg, score in neighbors:
        sums[arg.label] = sums.get(arg.label, 0.0) + score
        gates[arg.label] = max(gates.get(arg.label, float("-inf")), score)
        best = max(best, score)
    return _rank(sums), gates, best


def label_instance(
    instance: NounInstance,
    candidates: list[Candidate],
    vectors,
    bank: RefBank,
    config: LabelerConfig | None = None,
) -> list[LabeledArgument]:
    """Label each candidate independently, then resolve label conflicts.

    ``vectors`` must align with ``candidates``.  The threshold gates both
    the initial choice (against the candidate's best score: best centroid
    cosine for nearest-avg, best single-reference cosine in the k-set for
    knn) and every fallback alternative taken during conflict resolution.
    """
    config = config or LabelerConfig()
    if len(candidates) != len(vectors):
        raise ValueError(
            f"{len(candidates)} candidates but {len(vectors)} vectors"
        )
    ranked_all: list[list[tuple[str, float]]] = []
    gate_all: list[dict[str, float]] = []
    for candidate, vector in zip(candidates, vectors):
        ranked, gates, best = _candidate_scores(vector, bank, instance.verb_lemma, config)
        allowed = [
            (label, score)
            for label, score in ranked
            if _label_allowed(label, candidate.relation)
        ]
        if best < config.threshold:
            allowed = []
        ranked_all.append(allowed)
        gate_all.append(gates)

    assigned: list[str | None] = [None] * len(candidates)
    scores: list[float] = [0.0] * len(candidates)
    if not config.unique:
        for i, alternatives in enumerate(ranked_all):
            if alternatives:
                assigned[i], scores[i] = alternatives[0]
    else:
        # Greedy auction: best claim first; a beaten candidate falls to its
        # next alternative that is free and clears the threshold.
        taken: set[str] = set()
        heap: list[tuple[float, tuple[int, str], int, int]] = []
        for i, alternatives in enumerate(ranked_all):
            if alternatives:
                label, score = alternatives[0]
                heapq.heappush(heap, (-score, label_sort_key(label), i, 0))
        while heap:
            neg_score, _, i, alt_index = heapq.heappop(heap)
            label, score = ranked_all[i][alt_index]
            if label not in taken:
                taken.add(label)
                assigned[i] = label
                scores[i] = score
                continue
            for next_index in range(alt_index + 1, len(ranked_all[i])):
                next_label, next_score = ranked_all[i][next_index]
                if next_label in taken:
                    continue
                if gate_all[i].get(next_label, float("-inf")) < config.threshold:
                    continue
                heapq.heappush(
                    heap, (-next_score, label_sort_key(next_label), i, next_index)
                )
                break

    out = []
    for i, candidate in enumerate(candidates):
        alternatives = tuple(ranked_all[i])
        score = scores[i] if assigned[i] is not None else (
            alternatives[0][1] if alternatives else 0.0
        )
        out.append(
            LabeledArgument(
                candidate=candidate,
                label=assigned[i],
                score=score,
                alternatives=alternatives,
            )
        )
    return out


def labels_to_enrichment(noun: int, labeled: list[LabeledArgument]) -> Enrichment:
    pairs = [
        (arg.label, arg.candidate.head) for arg in labeled if arg.label is not None
    ]
    return make_enrichment(noun, pairs)


def enrich(sentence: Sentence, enrichments: list[Enrichment]) -> Sentence:
    """Record enrichment pairs as enhanced arcs on the dependent tokens.

    The primary tree is untouched; arcs already present are skipped, so the
    operation is idempotent.
    """
    arcs: dict[int, list[tuple[int, str]]] = {}
    for enrichment in enrichments:
        for label, head in enrichment.pairs:
            sentence.token(head)  # range check
            sentence.token(enrichment.noun)
            arcs.setdefault(head, []).append((enrichment.noun, label))
    return with_extra_arcs(sentence, arcs)
