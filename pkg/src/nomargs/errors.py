"""Exception hierarchy shared across the package."""


class NomargsError(Exception):
    """Base class for all errors raised by this package."""


class ConlluParseError(NomargsError):
    """A CoNLL-U line could not be parsed."""

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class TreeStructureError(NomargsError):
    """Primary arcs of a sentence do not form a rooted tree."""

    def __init__(self, message: str, sent_id: str = ""):
        self.sent_id = sent_id
        if sent_id:
            message = f"sentence {sent_id!r}: {message}"
        super().__init__(message)


class LexiconError(NomargsError):
    """Lexicon file violates the expected JSON schema."""


class EmbeddingFormatError(NomargsError):
    """An embedding file is malformed or internally inconsistent."""


class EmbeddingLookupError(NomargsError):
    """A sentence id or token index is absent from an embedding store."""


class ZeroVectorError(NomargsError):
    """Cosine similarity was requested for a zero-norm vector."""


class DimensionMismatchError(NomargsError):
    """Two vectors (or a vector and a store) disagree on dimensionality."""


class OovError(NomargsError):
    """A token is absent from a static word-vector table under all fallbacks."""


class RefBankBuildError(NomargsError):
    """Reference-bank construction failed (typically a missing embedding record)."""


class RefBankFormatError(NomargsError):
    """A persisted reference bank is malformed or has the wrong version."""


class EnrichmentError(NomargsError):
    """An enrichment violates the one-label/one-head-per-noun constraint."""


class AlignmentError(NomargsError):
    """A predicted instance has no matching gold instance."""


class SwapUnsupportedError(NomargsError):
    """Argument swapping requires exactly two gold arguments with disjoint spans."""
