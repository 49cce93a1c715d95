"""Scikit-learn style front door: fit a reference bank, transform parsed trees.

``fit`` scans a reference corpus for the lexicon's verbs and stores labeled
argument vectors; ``transform`` returns enriched copies of the input
sentences, ``predict`` the per-sentence enrichments.  Everything composes
with sklearn tooling via ``get_params``/``set_params``.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .embedstore import EmbeddingStore
from .identify import IdentifyConfig
from .labeling import DEFAULT_K, METHOD_KNN, METHODS, NOMLEX_TUNED_THRESHOLD, LabelerConfig
from .lexicon import Lexicon
from .pipeline import enrich_sentence
from .refbank import DEFAULT_SENTENCE_CAP, build_refbank
from .treebank import Sentence


def _check_sentences(X) -> list[Sentence]:
    sentences = list(X)
    for i, sentence in enumerate(sentences):
        if not isinstance(sentence, Sentence):
            raise TypeError(
                f"X[{i}] is {type(sentence).__name__}, expected a parsed Sentence"
            )
        if not sentence.sent_id:
            raise ValueError(f"X[{i}] has no sent_id; embeddings cannot be aligned")
    return sentences


def _check_embeddings(embeddings) -> EmbeddingStore:
    if not isinstance(embeddings, EmbeddingStore):
        raise TypeError(
            f"embeddings is {type(embeddings).__name__}, expected an EmbeddingStore"
        )
    return embeddings


class DeverbalArgumentEnricher(BaseEstimator, TransformerMixin):
    """Enrich universal-dependency trees with verbal labels for noun arguments.

    Parameters mirror the labeler: ``method`` is ``"knn"`` or
    ``"nearest-avg"``, ``k`` the neighborhood size, ``threshold`` the null
    cutoff, ``include_amod`` widens candidate identification, ``unique``
    enforces one head per label, ``sentence_cap`` bounds reference
    sentences per verb at fit time.
    """

    def __init__(
        self,
        lexicon: Lexicon | None = None,
        method: str = METHOD_KNN,
        k: int = DEFAULT_K,
        threshold: float = NOMLEX_TUNED_THRESHOLD,
        include_amod: bool = True,
        unique: bool = True,
        sentence_cap: int = DEFAULT_SENTENCE_CAP,
    ):
        self.lexicon = lexicon
        self.method = method
        self.k = k
        self.threshold = threshold
        self.include_amod = include_amod
        self.unique = unique
        self.sentence_cap = sentence_cap

    def _labeler_config(self) -> LabelerConfig:
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        return LabelerConfig(
            method=self.method, k=self.k, threshold=self.threshold, unique=self.unique
        )

    def _identify_config(self) -> IdentifyConfig:
        return IdentifyConfig(include_amod=self.include_amod)

    def fit(self, X, y=None, *, embeddings: EmbeddingStore, verbs=None):
        """Build the per-verb reference bank from a parsed reference corpus.

        ``X`` is the reference corpus (Sentences), ``embeddings`` its
        per-token vectors.  ``verbs`` defaults to every verb the lexicon
        knows.
        """
        self._labeler_config()
        if self.lexicon is None and verbs is None:
            raise ValueError("either a lexicon or an explicit verb set is required")
        sentences = _check_sentences(X)
        store = _check_embeddings(embeddings)
        targets = set(verbs) if verbs is not None else self.lexicon.verbs()
        self.bank_ = build_refbank(sentences, targets, store, cap=self.sentence_cap)
        return self

    def _require_fitted(self):
        if not hasattr(self, "bank_"):
            raise NotFittedError(
                "this DeverbalArgumentEnricher is not fitted yet; call fit first"
            )
        if self.lexicon is None:
            raise ValueError("a lexicon is required to identify deverbal nouns")

    def _run(self, X, embeddings):
        self._require_fitted()
        sentences = _check_sentences(X)
        store = _check_embeddings(embeddings)
        labeler_config = self._labeler_config()
        identify_config = self._identify_config()
        return [
            enrich_sentence(
                sentence, self.lexicon, self.bank_, store, labeler_config, identify_config
            )
            for sentence in sentences
        ]

    def transform(self, X, *, embeddings: EmbeddingStore) -> list[Sentence]:
        """Enriched copies of the input sentences (primary trees untouched)."""
        return [result.sentence for result in self._run(X, embeddings)]

    def predict(self, X, *, embeddings: EmbeddingStore):
        """Per-sentence lists of Enrichment, aligned with ``X``."""
        return [
            [inst.enrichment for inst in result.instances]
            for result in self._run(X, embeddings)
        ]

    def fit_transform(self, X, y=None, *, embeddings: EmbeddingStore, verbs=None):
        return self.fit(X, embeddings=embeddings, verbs=verbs).transform(
            X, embeddings=embeddings
        )
