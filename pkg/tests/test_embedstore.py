import math
import os
import tempfile

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nomargs.embedstore import (
    EmbeddingStore,
    StaticTable,
    cosine,
    load_embeddings,
    load_jsonl,
    load_navf,
    load_static_table,
    save_jsonl,
    save_navf,
    save_static_table,
    static_vector,
)
from nomargs.errors import (
    DimensionMismatchError,
    EmbeddingFormatError,
    EmbeddingLookupError,
    OovError,
    ZeroVectorError,
)
from nomargs.treebank import Token


class TestCosine:
    def test_self_similarity_is_one(self):
        for v in ([1.0, 2.0, 3.0], [0.1, -0.5], [1e-8, 2e-8]):
            assert cosine(v, v) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_is_zero(self):
        assert cosine([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_hand_computed_value(self):
        # fsum oracle: dot=0.74, |u|=sqrt(0.68), |v|=sqrt(0.82)
        assert cosine([0.8, 0.2], [0.9, 0.1]) == pytest.approx(
            0.9909924304103231, abs=1e-6
        )

    def test_symmetry(self):
        u, v = [0.3, -0.2, 0.9], [1.5, 0.4, -0.1]
        assert cosine(u, v) == cosine(v, u)

    def test_zero_vector_raises(self):
        with pytest.raises(ZeroVectorError):
            cosine([0.0, 0.0], [1.0, 0.0])

    def test_dim_mismatch_raises(self):
        with pytest.raises(DimensionMismatchError):
            cosine([1.0], [1.0, 0.0])

    @settings(max_examples=200, deadline=None)
    @given(
        st.lists(
            st.floats(min_value=-100, max_value=100).filter(
                lambda x: x == 0 or abs(x) > 1e-3
            ),
            min_size=2,
            max_size=8,
        ),
        st.floats(min_value=1e-3, max_value=1e3),
        st.floats(min_value=1e-3, max_value=1e3),
    )
    def test_scale_invariance(self, values, alpha, beta):
        u = np.asarray(values)
        v = u[::-1].copy() + 1.0
        if math.sqrt(float(np.dot(u, u))) == 0.0 or math.sqrt(float(np.dot(v, v))) == 0.0:
            return
        base = cosine(u, v)
        scaled = cosine(alpha * u, beta * v)
        assert scaled == pytest.approx(base, abs=1e-9)


def small_store():
    store = EmbeddingStore(dim=4)
    store.add("s1", np.arange(8, dtype=np.float32).reshape(2, 4))
    store.add("s2", np.asarray([[0.5, -0.25, 1e-40, 3.0]], dtype=np.float32))
    return store


class TestStoreLookup:
    def test_vector_round_trip(self):
        store = small_store()
        row = store.vector_for("s1", 2)
        assert row.tolist() == [4.0, 5.0, 6.0, 7.0]

    def test_unknown_sentence(self):
        with pytest.raises(EmbeddingLookupError):
            small_store().vector_for("nope", 1)

    def test_index_out_of_range(self):
        with pytest.raises(EmbeddingLookupError):
            small_store().vector_for("s1", 3)

    def test_dim_mismatch_on_add(self):
        with pytest.raises(DimensionMismatchError):
            small_store().add("s3", np.zeros((1, 5), dtype=np.float32))


class TestFileFormats:
    def test_navf_round_trip_bitwise(self, tmp_path):
        store = small_store()
        path = tmp_path / "vecs.navf"
        save_navf(store, path)
        loaded = load_navf(path)
        for sent_id in store.sent_ids():
            assert (
                loaded.record(sent_id).tobytes() == store.record(sent_id).tobytes()
            )

    def test_navf_subnormals_bit_exact(self, tmp_path):
        tiny = np.asarray([[1e-45, -1e-42, 5e-40, 0.0]], dtype=np.float32)
        store = EmbeddingStore(dim=4)
        store.add("sub", tiny)
        path = tmp_path / "sub.navf"
        save_navf(store, path)
        assert load_navf(path).record("sub").tobytes() == tiny.tobytes()

    def test_jsonl_and_navf_agree(self, tmp_path):
        store = small_store()
        navf, jsonl = tmp_path / "a.navf", tmp_path / "a.jsonl"
        save_navf(store, navf)
        save_jsonl(store, jsonl)
        a, b = load_navf(navf), load_jsonl(jsonl)
        assert a.sent_ids() == b.sent_ids()
        for sent_id in a.sent_ids():
            assert np.array_equal(a.record(sent_id), b.record(sent_id))

    def test_load_embeddings_sniffs_format(self, tmp_path):
        store = small_store()
        navf, jsonl = tmp_path / "a.navf", tmp_path / "a.jsonl"
        save_navf(store, navf)
        save_jsonl(store, jsonl)
        assert load_embeddings(navf).sent_ids() == load_embeddings(jsonl).sent_ids()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.navf"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(EmbeddingFormatError):
            load_navf(path)

    def test_truncated_file(self, tmp_path):
        store = small_store()
        path = tmp_path / "trunc.navf"
        save_navf(store, path)
        data = path.read_bytes()
        path.write_bytes(data[: len(data) - 5])
        with pytest.raises(EmbeddingFormatError):
            load_navf(path)

    def test_jsonl_dim_mismatch(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(
            '{"sent_id": "a", "dim": 2, "vectors": [[1.0, 2.0]]}\n'
            '{"sent_id": "b", "dim": 3, "vectors": [[1.0, 2.0, 3.0]]}\n'
        )
        with pytest.raises(EmbeddingFormatError):
            load_jsonl(path)

    @settings(max_examples=25, deadline=None)
    @given(
        st.lists(
            st.lists(
                st.floats(width=32, allow_nan=False, allow_infinity=False),
                min_size=3,
                max_size=3,
            ),
            min_size=1,
            max_size=4,
        )
    )
    def test_navf_round_trip_property(self, rows):
        store = EmbeddingStore(dim=3)
        store.add("x", np.asarray(rows, dtype=np.float32))
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "x.navf")
            save_navf(store, path)
            assert load_navf(path).record("x").tobytes() == store.record("x").tobytes()


class TestStaticTable:
    def make_table(self):
        return StaticTable(
            dim=2,
            vectors={
                "destruction": np.asarray([1.0, 0.0], dtype=np.float32),
                "Rome": np.asarray([0.0, 1.0], dtype=np.float32),
                "city": np.asarray([0.5, 0.5], dtype=np.float32),
            },
        )

    def tok(self, form, lemma):
        return Token(id=1, form=form, lemma=lemma, upos="NOUN", head=0, deprel="root")

    def test_surface_form_hit(self):
        vec = static_vector(self.make_table(), self.tok("Rome", "rome"))
        assert vec.tolist() == [0.0, 1.0]

    def test_lowercase_fallback(self):
        vec = static_vector(self.make_table(), self.tok("Destruction", "destroy"))
        assert vec.tolist() == [1.0, 0.0]

    def test_lemma_fallback(self):
        vec = static_vector(self.make_table(), self.tok("Cities", "city"))
        assert vec.tolist() == [0.5, 0.5]

    def test_oov_raises(self):
        with pytest.raises(OovError):
            static_vector(self.make_table(), self.tok("Paris", "paris"))

    def test_text_round_trip(self, tmp_path):
        table = self.make_table()
        path = tmp_path / "vectors.txt"
        save_static_table(table, path)
        first = path.read_text().splitlines()[0]
        assert first == "3 2"
        loaded = load_static_table(path)
        assert loaded.dim == 2
        for word in table.vectors:
            assert np.array_equal(loaded.vectors[word], table.vectors[word])

    def test_header_mismatch(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("2 2\nword 1.0 2.0\n")
        with pytest.raises(EmbeddingFormatError):
            load_static_table(path)
