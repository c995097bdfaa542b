"""Synthetic crisis corpus generator for desk-scale experiments.

Real crisis corpora cannot ship with the code, so the harness builds its
own: three topical vocabularies (a target crisis, a second crisis sharing a
disaster lexicon with it, and unrelated chatter) rendered as tweet-shaped
records. A slice of the positive class is deliberately hard, written mostly
in the shared disaster lexicon, which is what gives uncertainty sampling
room to beat random selection: those tweets sit near the class boundary.

Everything flows through the real pipeline: records are replayed through
ingestion, cleaned by the preprocessor, embedded, then featurized.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embedding import EmbeddingConfig, train
from .eval_harness import EvalDataset, EvalItem
from .ingest import CorpusStore, StreamConfig, acquire_stream
from .preprocess import clean_store, tokenize

CRISIS_POSITIVE = "crisis_positive"
OTHER_CRISIS = "other_crisis"
NON_DISASTER = "non_disaster"

_CONSONANT_THEMES = {
    CRISIS_POSITIVE: "vbrmz",
    OTHER_CRISIS: "hklfn",
    NON_DISASTER: "gdpst",
    "shared": "wcj",
    "common": "qtx",
}
_VOWELS = "aeiou"


@dataclass(frozen=True)
class SyntheticSpec:
    seed: int = 0
    train_tweets_per_class: int = 1000
    eval_tweets_per_class: int = 200
    topic_word_count: int = 50
    shared_word_count: int = 18
    common_word_count: int = 30
    tags_per_class: int = 8
    min_tokens: int = 8
    max_tokens: int = 14
    hard_positive_fraction: float = 0.35


@dataclass
class SyntheticCorpus:
    records: list[str]
    truth: dict[str, str]  # eval tweet_id -> class
    tags_by_class: dict[str, list[str]]
    vocab_by_class: dict[str, list[str]]


@dataclass
class SyntheticArtifacts:
    dataset: EvalDataset
    corpus_dir: Path
    clean_path: Path
    model: object
    tags_by_class: dict[str, list[str]] = field(default_factory=dict)


def _make_words(rng: np.random.Generator, theme: str, count: int, taken: set[str]) -> list[str]:
    consonants = _CONSONANT_THEMES[theme]
    words = []
    while len(words) < count:
        syllables = rng.integers(2, 4)
        word = "".join(
            consonants[rng.integers(len(consonants))] + _VOWELS[rng.integers(5)]
            for _ in range(syllables)
        )
        if word not in taken:
            taken.add(word)
            words.append(word)
    return words


def _zipf_weights(n: int) -> np.ndarray:
    weights = 1.0 / (np.arange(n) + 2.0)
    return weights / weights.sum()


def _draw(rng: np.random.Generator, words: list[str], weights: np.ndarray) -> str:
    return words[rng.choice(len(words), p=weights)]


def generate_corpus(spec: SyntheticSpec = SyntheticSpec()) -> SyntheticCorpus:
    rng = np.random.default_rng(spec.seed)
    taken: set[str] = set()
    vocab = {
        name: _make_words(rng, name, spec.topic_word_count, taken)
        for name in (CRISIS_POSITIVE, OTHER_CRISIS, NON_DISASTER)
    }
    shared = _make_words(rng, "shared", spec.shared_word_count, taken)
    common = _make_words(rng, "common", spec.common_word_count, taken)
    tags = {name: words[: spec.tags_per_class] for name, words in vocab.items()}

    weights = {name: _zipf_weights(len(words)) for name, words in vocab.items()}
    shared_w = _zipf_weights(len(shared))
    common_w = _zipf_weights(len(common))

    def topic_token(label: str, hard: bool) -> str:
        """Mixture per token: topic vs shared-disaster vs common filler."""
        u = rng.random()
        if label == NON_DISASTER:
            if u < 0.75:
                return _draw(rng, vocab[label], weights[label])
            return _draw(rng, common, common_w)
        if label == OTHER_CRISIS:
            if u < 0.45:
                return _draw(rng, vocab[label], weights[label])
            if u < 0.75:
                return _draw(rng, shared, shared_w)
            return _draw(rng, common, common_w)
        if hard:
            # boundary tweets: learnable once labeled, but dominated by the
            # shared disaster lexicon so the base classifier misses them
            if u < 0.25:
                return _draw(rng, vocab[label], weights[label])
            if u < 0.75:
                return _draw(rng, shared, shared_w)
            return _draw(rng, common, common_w)
        if u < 0.60:
            return _draw(rng, vocab[label], weights[label])
        if u < 0.75:
            return _draw(rng, shared, shared_w)
        return _draw(rng, common, common_w)

    records: list[str] = []
    truth: dict[str, str] = {}
    serial = 0

    def render(label: str, kind: str) -> str:
        nonlocal serial
        hard = label == CRISIS_POSITIVE and rng.random() < spec.hard_positive_fraction
        length = int(rng.integers(spec.min_tokens, spec.max_tokens + 1))
        tokens = [topic_token(label, hard) for _ in range(length)]
        text = " ".join(tokens)
        if rng.random() < 0.8:
            n_tags = 1 + int(rng.random() < 0.35)
            chosen = rng.choice(spec.tags_per_class, size=n_tags, replace=False)
            text += "".join(f" #{tags[label][i]}" for i in chosen)
        if rng.random() < 0.25:
            text = f"RT @user{rng.integers(100)}: " + text
        if rng.random() < 0.3:
            text += f" https://t.co/{serial:08x}"
        tweet_id = f"{kind}{serial:07d}"
        serial += 1
        if kind == "e":
            truth[tweet_id] = label
        stamp = f"2017-10-{3 + serial % 6:02d}T{serial % 24:02d}:00:00+00:00"
        return json.dumps({"id_str": tweet_id, "created_at": stamp, "text": text})

    for label in (CRISIS_POSITIVE, OTHER_CRISIS, NON_DISASTER):
        for _ in range(spec.train_tweets_per_class):
            records.append(render(label, "t"))
    for label in (CRISIS_POSITIVE, OTHER_CRISIS, NON_DISASTER):
        for _ in range(spec.eval_tweets_per_class):
            records.append(render(label, "e"))

    order = np.random.default_rng(spec.seed + 1).permutation(len(records))
    records = [records[i] for i in order]
    return SyntheticCorpus(
        records=records, truth=truth, tags_by_class=tags, vocab_by_class=vocab
    )


def default_embedding_config(seed: int = 0) -> EmbeddingConfig:
    """Trainer settings for the synthetic corpus: full dimensionality but a
    small bucket table, extra epochs, and no subsampling, since the corpus
    is three orders of magnitude smaller than a real crisis stream."""
    return EmbeddingConfig(
        dim=100,
        window=5,
        negatives=5,
        epochs=25,
        min_count=5,
        bucket_count=100_000,
        subsample_threshold=0.0,
        seed=seed,
    )


def build_artifacts(
    workdir,
    spec: SyntheticSpec = SyntheticSpec(),
    embed_config: EmbeddingConfig | None = None,
    positive_class: str = CRISIS_POSITIVE,
) -> SyntheticArtifacts:
    """Generate records and push them through ingest -> preprocess -> embed.

    Leaves the corpus directory, clean store and trained model under
    ``workdir`` so downstream stages (layout, service) can reuse them.
    """
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    corpus = generate_corpus(spec)

    replay_path = workdir / "replay.jsonl"
    with open(replay_path, "w", encoding="utf-8") as f:
        for record in corpus.records:
            f.write(record + "\n")

    corpus_dir = workdir / "corpus"
    stream_config = StreamConfig(
        endpoint="replay://synthetic", query_terms=("synthetic",)
    )
    with CorpusStore(corpus_dir) as store:
        acquire_stream(stream_config, store.persist, replay=replay_path)

    clean_path = workdir / "clean.txt"
    clean_store(corpus_dir / "text.txt", clean_path)

    model = train(clean_path, embed_config or default_embedding_config(spec.seed))

    ids_in_order = []
    with CorpusStore(corpus_dir) as store:
        for tweet in store.iter_tweets():
            ids_in_order.append(tweet.id)
    clean_lines = clean_path.read_text(encoding="utf-8").splitlines()

    items = []
    for tweet_id, line in zip(ids_in_order, clean_lines):
        label = corpus.truth.get(tweet_id)
        if label is None:
            continue
        vector = model.sentence_vector(tokenize(line)).astype(np.float64)
        items.append(EvalItem(tweet_id=tweet_id, vector=vector, label=label))

    dataset = EvalDataset(items=items, positive_class=positive_class)
    return SyntheticArtifacts(
        dataset=dataset,
        corpus_dir=corpus_dir,
        clean_path=clean_path,
        model=model,
        tags_by_class=corpus.tags_by_class,
    )
