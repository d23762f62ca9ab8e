"""Vocabulary construction, encoding, and embedding initialization."""

from datetime import datetime, timezone

import numpy as np
import numpy.testing as npt
import pytest

from alarm2action.errors import DimensionMismatch, EmptyCorpus, UnknownLabel
from alarm2action.sequencer import PAD_TOKEN, PairedDocument
from alarm2action.vocab import (
    PAD_INDEX,
    UNK_INDEX,
    UNK_TOKEN,
    EmbeddingInit,
    build_vocab,
    encode_document,
    encode_tokens,
    init_embedding_matrix,
    load_embedding_file,
    load_vocab,
    save_vocab,
    tokenize,
)

BASE = datetime(2016, 1, 1, tzinfo=timezone.utc)


def doc(tokens, label="fix gearbox"):
    return PairedDocument("T01", BASE, label, tuple(tokens))


def test_tokenize():
    assert tokenize("gearbox oil temp high") == ["gearbox", "oil", "temp", "high"]
    assert tokenize("") == []
    assert tokenize(" pitch  fault ") == ["pitch", "fault"]


def test_build_vocab_layout():
    vocab = build_vocab([
        doc(["pitch fault", "alarm 3"], label="reset"),
        doc(["gearbox oil", PAD_TOKEN], label="replace filter"),
    ])
    assert vocab.index_to_token[PAD_INDEX] == PAD_TOKEN
    assert vocab.index_to_token[UNK_INDEX] == UNK_TOKEN
    # remaining tokens sorted, pad occurrences not re-added
    assert vocab.index_to_token[2:] == ["alarm 3", "gearbox oil", "pitch fault"]
    assert vocab.labels == ["replace filter", "reset"]
    assert len(vocab) == 5
    assert vocab.num_classes == 2
    assert vocab.token_to_index["alarm 3"] == 2
    assert vocab.label_to_index["reset"] == 1


def test_build_vocab_is_order_independent():
    docs = [doc(["b", "a"], label="y"), doc(["c"], label="x")]
    a = build_vocab(docs)
    b = build_vocab(list(reversed(docs)))
    assert a.index_to_token == b.index_to_token
    assert a.labels == b.labels


def test_build_vocab_empty_corpus():
    with pytest.raises(EmptyCorpus):
        build_vocab([doc([PAD_TOKEN], label="x")])
    with pytest.raises(EmptyCorpus):
        build_vocab([])


def test_encode_tokens_maps_unknown_to_unk():
    vocab = build_vocab([doc(["a", "b"], label="x")])
    assert encode_tokens(["a", "never seen", PAD_TOKEN, "b"], vocab) == [
        2, UNK_INDEX, PAD_INDEX, 3]


def test_encode_document_label_handling():
    vocab = build_vocab([doc(["a"], label="x"), doc(["b"], label="y")])
    ids, label_id = encode_document(doc(["b", "a"], label="y"), vocab)
    assert ids == [3, 2]
    assert label_id == 1
    with pytest.raises(UnknownLabel):
        encode_document(doc(["a"], label="unheard of"), vocab)


def test_decode_inverts_encode_for_known_tokens():
    vocab = build_vocab([doc(["alpha", "beta", "gamma"], label="x")])
    tokens = ["beta", "gamma", PAD_TOKEN]
    assert vocab.decode(encode_tokens(tokens, vocab)) == tokens


def test_fingerprint_tracks_content():
    v1 = build_vocab([doc(["a"], label="x")])
    v2 = build_vocab([doc(["a"], label="x")])
    v3 = build_vocab([doc(["a", "b"], label="x")])
    assert v1.fingerprint() == v2.fingerprint()
    assert v1.fingerprint() != v3.fingerprint()
    assert len(v1.fingerprint()) == 64  # sha256 hex


def test_init_embedding_matrix():
    vocab = build_vocab([doc(["a", "b", "c"], label="x")])
    matrix = init_embedding_matrix(vocab, 4, np.random.default_rng(0))
    assert matrix.shape == (5, 4)
    npt.assert_array_equal(matrix[PAD_INDEX], np.zeros(4))
    rest = matrix[1:]
    assert np.max(np.abs(rest)) <= 0.05
    assert np.max(np.abs(rest)) > 0


def test_embedding_init_validation():
    with pytest.raises(ValueError):
        EmbeddingInit(dim=0)
    with pytest.raises(ValueError):
        EmbeddingInit(mode="magic")
    with pytest.raises(ValueError):
        EmbeddingInit(mode="from_file")  # file missing
    with pytest.raises(ValueError):
        EmbeddingInit(mode="random", file="x.txt")


def test_load_embedding_file_overrides_known_rows(tmp_path):
    vocab = build_vocab([doc(["alpha", "beta"], label="x")])
    path = tmp_path / "vectors.txt"
    path.write_text(
        "alpha 1.0 2.0 3.0\n"
        "missingtoken 9.0 9.0 9.0\n"
        "<pad> 5.0 5.0 5.0\n",
        encoding="utf-8",
    )
    matrix = load_embedding_file(path, vocab, 3, rng=np.random.default_rng(1))
    npt.assert_array_equal(matrix[vocab.token_to_index["alpha"]], [1.0, 2.0, 3.0])
    # pad row stays zero even when the file supplies one
    npt.assert_array_equal(matrix[PAD_INDEX], np.zeros(3))
    # beta keeps its random init within bounds
    beta = matrix[vocab.token_to_index["beta"]]
    assert np.max(np.abs(beta)) <= 0.05


def test_load_embedding_file_dimension_mismatch(tmp_path):
    vocab = build_vocab([doc(["alpha"], label="x")])
    path = tmp_path / "vectors.txt"
    path.write_text("alpha 1.0 2.0\n", encoding="utf-8")
    with pytest.raises(DimensionMismatch) as exc:
        load_embedding_file(path, vocab, 3)
    assert exc.value.line_no == 1
    assert exc.value.expected == 3
    assert exc.value.got == 2


def test_load_embedding_file_empty_warns(tmp_path, caplog):
    vocab = build_vocab([doc(["alpha"], label="x")])
    path = tmp_path / "vectors.txt"
    path.write_text("", encoding="utf-8")
    with caplog.at_level("WARNING"):
        matrix = load_embedding_file(path, vocab, 3)
    assert "empty" in caplog.text
    assert matrix.shape == (3, 3)


def test_vocab_file_round_trip(tmp_path):
    vocab = build_vocab([doc(["a", "b"], label="x"), doc(["c"], label="y")])
    path = tmp_path / "vocab.json"
    save_vocab(vocab, path, embed_dim=7)
    loaded = load_vocab(path)
    assert loaded.index_to_token == vocab.index_to_token
    assert loaded.labels == vocab.labels
    assert loaded.fingerprint() == vocab.fingerprint()
