"""Enrich universal-dependency trees with verbal argument labels for deverbal nouns."""

from .embedstore import (
    EmbeddingStore,
    StaticTable,
    cosine,
    load_embeddings,
    load_navf,
    load_static_table,
    save_jsonl,
    save_navf,
    static_vector,
    vector_for,
)
from .errors import NomargsError
from .estimator import DeverbalArgumentEnricher
from .evalkit import (
    CandidateSet,
    EvalReport,
    GoldInstance,
    PredInstance,
    baseline_all,
    build_nomlex_evalset,
    convert_paraphrase_dataset,
    per_relation_report,
    score,
    swap_arguments,
    tune_test_split,
)
from .identify import Candidate, IdentifyConfig, NounInstance, find_noun_instances, identify_candidates
from .labeling import (
    Enrichment,
    LabeledArgument,
    LabelerConfig,
    enrich,
    label_instance,
    score_knn,
    score_nearest_avg,
)
from .lexicon import DepPattern, Lexicon, LexiconEntry, baseline_label, load_lexicon, match_patterns
from .pipeline import enrich_sentence
from .refbank import (
    RefArgument,
    RefBank,
    build_refbank,
    extract_verbal_arguments,
    label_centroids,
    load_refbank,
    query_knn,
    save_refbank,
)
from .treebank import (
    Sentence,
    Token,
    children_by_relation,
    parse_conllu,
    serialize_conllu,
    validate_sentence,
)

__version__ = "0.1.0"
