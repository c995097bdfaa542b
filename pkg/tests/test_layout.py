import zlib

import numpy as np
import pytest

from tweetsift.layout import (
    HashtagLayout,
    HashtagPoint,
    LayoutNotBuilt,
    NoTagsAboveThreshold,
    build_layout,
    corpus_fingerprint,
    hashtag_vectors,
    load_layout,
    save_layout,
)
from tweetsift.tsne import TsneConfig


class StubModel:
    """Sentence vector = sum of per-token fixed vectors / token count."""

    def __init__(self, dim=4):
        self.dim = dim

    def sentence_vector(self, tokens):
        acc = np.zeros(self.dim, dtype=np.float32)
        if not tokens:
            return acc
        for token in tokens:
            vec = np.zeros(self.dim, dtype=np.float32)
            vec[zlib.crc32(token.encode()) % self.dim] = 1.0
            acc += vec
        return acc / np.float32(len(tokens))


class StubStore:
    def __init__(self, rows):
        # rows: list of (hashtags, text)
        self.rows = rows

    def iter_tweets(self):
        class T:
            def __init__(self, tags):
                self.hashtags = tags

        return iter([T(tags) for tags, _ in self.rows])

    def iter_texts(self):
        return iter([text for _, text in self.rows])


def test_tag_vector_is_mean_of_containing_tweets():
    model = StubModel()
    store = StubStore(
        [
            (("solo",), "alpha beta"),
            (("pair",), "alpha alpha"),
            (("pair",), "beta beta"),
        ]
    )
    vectors, counts = hashtag_vectors(store, model, min_frequency=1)
    np.testing.assert_allclose(
        vectors["solo"], model.sentence_vector(["alpha", "beta"])
    )
    expected = (
        model.sentence_vector(["alpha", "alpha"]) + model.sentence_vector(["beta", "beta"])
    ) / 2
    np.testing.assert_allclose(vectors["pair"], expected)
    assert counts == {"solo": 1, "pair": 2}


def test_frequency_threshold_excludes():
    model = StubModel()
    rows = [(("common",), "x y")] * 10 + [(("rare",), "x y")] * 9
    vectors, counts = hashtag_vectors(StubStore(rows), model, min_frequency=10)
    assert "common" in vectors and "rare" not in vectors


def test_no_tags_above_threshold():
    model = StubModel()
    with pytest.raises(NoTagsAboveThreshold):
        hashtag_vectors(StubStore([(("only",), "x")]), model, min_frequency=5)


def grouped_store(tags_a, tags_b, per_tag=6):
    """Two topic groups whose tweets use disjoint token sets."""
    rows = []
    for i, tag in enumerate(tags_a):
        for k in range(per_tag):
            rows.append(((tag,), f"storm{i} flood{(i + k) % len(tags_a)} rain"))
    for i, tag in enumerate(tags_b):
        for k in range(per_tag):
            rows.append(((tag,), f"game{i} match{(i + k) % len(tags_b)} score"))
    return StubStore(rows)


class TwoTopicModel:
    """Deterministic vectors: topic-a tokens on one axis block, b on another."""

    dim = 8

    def sentence_vector(self, tokens):
        acc = np.zeros(self.dim, dtype=np.float32)
        if not tokens:
            return acc
        for token in tokens:
            vec = np.zeros(self.dim, dtype=np.float32)
            block = 0 if token.startswith(("storm", "flood", "rain")) else 4
            vec[block + (zlib.crc32(token.encode()) % 4)] = 1.0
            acc += vec
        return acc / np.float32(len(tokens))


def test_build_layout_separates_disjoint_topic_groups():
    tags_a = [f"crisis{i}" for i in range(6)]
    tags_b = [f"sport{i}" for i in range(6)]
    store = grouped_store(tags_a, tags_b)
    layout = build_layout(
        store,
        TwoTopicModel(),
        TsneConfig(perplexity=3.0, learning_rate=20.0, seed=1),
        min_frequency=2,
        fingerprint="fp",
    )
    coords = {p.tag: np.array([p.x, p.y]) for p in layout.points}
    a_pts = [coords[t] for t in tags_a]
    b_pts = [coords[t] for t in tags_b]
    intra = max(
        np.linalg.norm(p - q) for pts in (a_pts, b_pts) for p in pts for q in pts
    )
    inter = min(np.linalg.norm(p - q) for p in a_pts for q in b_pts)
    assert inter > intra


def test_build_layout_needs_four_tags():
    model = StubModel()
    rows = [(("a",), "x"), (("b",), "y"), (("c",), "z")]
    with pytest.raises(Exception) as err:
        build_layout(StubStore(rows), model, TsneConfig(perplexity=1.0), min_frequency=1)
    assert "4 points" in str(err.value) or "Perplexity" in str(type(err.value).__name__)


def test_build_layout_lowers_infeasible_perplexity(caplog):
    tags_a = [f"crisis{i}" for i in range(5)]
    tags_b = [f"sport{i}" for i in range(5)]
    store = grouped_store(tags_a, tags_b, per_tag=3)
    with caplog.at_level("WARNING"):
        layout = build_layout(
            store,
            TwoTopicModel(),
            TsneConfig(perplexity=30.0, learning_rate=20.0, seed=0),
            min_frequency=1,
        )
    assert layout.perplexity == 3.0  # floor((10-1)/3)
    assert any("lowering" in rec.message for rec in caplog.records)


def test_layout_deterministic():
    tags_a = [f"crisis{i}" for i in range(4)]
    tags_b = [f"sport{i}" for i in range(4)]
    config = TsneConfig(perplexity=2.0, learning_rate=20.0, iterations=100, seed=3)
    l1 = build_layout(grouped_store(tags_a, tags_b), TwoTopicModel(), config, min_frequency=1)
    l2 = build_layout(grouped_store(tags_a, tags_b), TwoTopicModel(), config, min_frequency=1)
    assert l1.points == l2.points


def test_layout_file_round_trip(tmp_path):
    layout = HashtagLayout(
        points=[
            HashtagPoint("vegas", 120, 1.25, -3.5),
            HashtagPoint("prayforvegas", 44, -0.5, 2.0),
        ],
        perplexity=30.0,
        seed=7,
        min_frequency=10,
        corpus_fingerprint="abc123",
    )
    path = tmp_path / "layout.csv"
    save_layout(layout, path)
    loaded = load_layout(path)
    assert loaded.corpus_fingerprint == "abc123"
    assert loaded.seed == 7 and loaded.min_frequency == 10
    assert loaded.points[0].tag == "vegas"
    assert loaded.points[0].x == pytest.approx(1.25)


def test_load_layout_missing_file(tmp_path):
    with pytest.raises(LayoutNotBuilt):
        load_layout(tmp_path / "nothing.csv")


def test_fingerprint_changes_with_content(tmp_path):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    raw = corpus / "raw.jsonl"
    raw.write_text('{"id_str": "1", "text": "a"}\n')
    fp1 = corpus_fingerprint(corpus)
    raw.write_text('{"id_str": "1", "text": "a"}\n{"id_str": "2", "text": "b"}\n')
    assert corpus_fingerprint(corpus) != fp1


def test_duplicate_tags_rejected():
    with pytest.raises(ValueError):
        HashtagLayout(
            points=[HashtagPoint("x", 1, 0, 0), HashtagPoint("x", 2, 1, 1)],
            perplexity=5.0,
            seed=0,
            min_frequency=1,
            corpus_fingerprint="",
        )
