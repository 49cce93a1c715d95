"""Sidecar producing per-token contextual vectors for the enrichment toolkit."""

from .encoder import (
    EncodeRequest,
    EncodeSummary,
    MaskedLmEncoder,
    SkipBudgetExceeded,
    encode_corpus,
    encode_static,
    read_requests,
    requests_from_conllu,
)
from .formats import FORMAT_JSONL, FORMAT_NAVF, EmbeddingWriter

__version__ = "0.1.0"
