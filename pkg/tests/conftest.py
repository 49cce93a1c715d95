import importlib.resources

import numpy as np
import pytest

from nomargs.embedstore import EmbeddingStore
from nomargs.lexicon import load_lexicon
from nomargs.refbank import RefBank
from nomargs.treebank import Sentence, Token, validate_sentence


def make_sentence(rows, sent_id="s1", extras=None):
    """Build a validated Sentence from (form, lemma, upos, head, deprel) rows."""
    tokens = tuple(
        Token(id=i, form=form, lemma=lemma, upos=upos, head=head, deprel=deprel)
        for i, (form, lemma, upos, head, deprel) in enumerate(rows, start=1)
    )
    if extras is None:
        extras = ((0, f"# sent_id = {sent_id}"),) if sent_id else ()
    sentence = Sentence(sent_id=sent_id, tokens=tokens, extras=tuple(extras))
    validate_sentence(sentence)
    return sentence


@pytest.fixture
def verbal_sentence():
    # "Rome destroyed the city"
    return make_sentence(
        [
            ("Rome", "rome", "PROPN", 2, "nsubj"),
            ("destroyed", "destroy", "VERB", 0, "root"),
            ("the", "the", "DET", 4, "det"),
            ("city", "city", "NOUN", 2, "dobj"),
        ],
        sent_id="verbal",
    )


@pytest.fixture
def nominal_sentence():
    # "Rome 's destruction of the city"
    return make_sentence(
        [
            ("Rome", "rome", "PROPN", 3, "nmod:poss"),
            ("'s", "'s", "PART", 1, "case"),
            ("destruction", "destruction", "NOUN", 0, "root"),
            ("of", "of", "ADP", 6, "case"),
            ("the", "the", "DET", 6, "det"),
            ("city", "city", "NOUN", 3, "nmod:of"),
        ],
        sent_id="nominal",
    )


@pytest.fixture
def passive_sentence():
    # "The city was destroyed by Rome"
    return make_sentence(
        [
            ("The", "the", "DET", 2, "det"),
            ("city", "city", "NOUN", 4, "nsubjpass"),
            ("was", "be", "AUX", 4, "auxpass"),
            ("destroyed", "destroy", "VERB", 0, "root"),
            ("by", "by", "ADP", 6, "case"),
            ("Rome", "rome", "PROPN", 4, "nmod:by"),
        ],
        sent_id="passive",
    )


@pytest.fixture
def sample_lexicon(tmp_path):
    data = importlib.resources.files("nomargs.data").joinpath("sample_lexicon.json")
    path = tmp_path / "lexicon.json"
    path.write_bytes(data.read_bytes())
    return load_lexicon(path)


@pytest.fixture
def five_vector_bank():
    """The worked two-dimensional bank: 2 agent-like and 3 patient-like references."""
    bank = RefBank(dim=2)
    bank.add("destroy", "nsubj", [1.0, 0.0], ("r1", 1))
    bank.add("destroy", "nsubj", [0.9, 0.1], ("r2", 1))
    bank.add("destroy", "dobj", [0.0, 1.0], ("r1", 3))
    bank.add("destroy", "dobj", [0.1, 0.9], ("r2", 3))
    bank.add("destroy", "dobj", [0.5, 0.5], ("r3", 3))
    return bank


def store_from(dim, **records):
    store = EmbeddingStore(dim=dim)
    for sent_id, vectors in records.items():
        store.add(sent_id, np.asarray(vectors, dtype=np.float32))
    return store
