"""Trained embedding model: vector queries and binary serialization."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .subwords import subword_ngrams
from .vocab import EmbeddingConfig, Vocabulary

MAGIC = b"TWSFTEMB"
FORMAT_VERSION = 1
# dim, window, negatives, epochs, min_count, ngram_min, ngram_max (u32 each),
# bucket_count (u64), learning_rate, subsample_threshold (f64), seed (i64)
_CONFIG_STRUCT = struct.Struct("<7IQddq")


class UnknownQuery(KeyError):
    """Query word is out of vocabulary and has no subword n-grams."""


@dataclass
class EmbeddingModel:
    config: EmbeddingConfig
    vocab: Vocabulary
    input_vectors: np.ndarray  # (V + bucket_count, dim) float32
    output_vectors: np.ndarray  # (V, dim) float32
    _vocab_vectors: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.config.dim

    def _subword_rows(self, word: str) -> list[int]:
        base = len(self.vocab)
        return [
            base + bucket
            for bucket in subword_ngrams(
                word, self.config.ngram_min, self.config.ngram_max, self.config.bucket_count
            )
        ]

    def has_representation(self, word: str) -> bool:
        if word in self.vocab:
            return True
        return bool(word) and bool(self._subword_rows(word))

    def word_vector(self, word: str) -> np.ndarray:
        """In-vocab: mean of word row and subword rows. Out-of-vocab: mean of
        subword rows alone; zero vector if the word has no subwords."""
        if not word:
            raise ValueError("word must be non-empty")
        if word in self.vocab:
            rows = [self.vocab.index[word]] + self._subword_rows(word)
        else:
            rows = self._subword_rows(word)
            if not rows:
                return np.zeros(self.dim, dtype=np.float32)
        return self.input_vectors[rows].mean(axis=0)

    def sentence_vector(self, tokens) -> np.ndarray:
        """Unweighted mean of word vectors; empty input gives the zero vector."""
        tokens = list(tokens)
        if not tokens:
            return np.zeros(self.dim, dtype=np.float32)
        acc = np.zeros(self.dim, dtype=np.float32)
        for token in tokens:
            acc += self.word_vector(token)
        return acc / np.float32(len(tokens))

    def vocab_vectors(self) -> np.ndarray:
        """Word vectors for every vocabulary word, cached after first use."""
        if self._vocab_vectors is None:
            vectors = np.empty((len(self.vocab), self.dim), dtype=np.float32)
            for index, word in enumerate(self.vocab.words):
                vectors[index] = self.word_vector(word)
            self._vocab_vectors = vectors
        return self._vocab_vectors

    def nearest_neighbors(self, query: str, k: int) -> list[tuple[str, float]]:
        """Top-k vocabulary words by cosine similarity, query excluded.

        Ties break toward the lower vocabulary index.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        if not self.has_representation(query):
            raise UnknownQuery(query)
        query_vec = self.word_vector(query).astype(np.float64)
        query_norm = np.linalg.norm(query_vec)
        matrix = self.vocab_vectors().astype(np.float64)
        norms = np.linalg.norm(matrix, axis=1)
        sims = (matrix @ query_vec) / (np.maximum(norms, 1e-12) * max(query_norm, 1e-12))
        order = np.lexsort((np.arange(len(sims)), -sims))
        exclude = self.vocab.index.get(query)
        out = []
        for index in order:
            if index == exclude:
                continue
            out.append((self.vocab.words[index], float(sims[index])))
            if len(out) == k:
                break
        return out


def save_model(model: EmbeddingModel, path) -> None:
    """Binary format: magic, version, config, vocab table, float32 LE matrices."""
    config = model.config
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", FORMAT_VERSION))
        f.write(
            _CONFIG_STRUCT.pack(
                config.dim,
                config.window,
                config.negatives,
                config.epochs,
                config.min_count,
                config.ngram_min,
                config.ngram_max,
                config.bucket_count,
                config.learning_rate,
                config.subsample_threshold,
                config.seed,
            )
        )
        f.write(struct.pack("<QQ", len(model.vocab), model.vocab.total_tokens))
        for word, count in zip(model.vocab.words, model.vocab.counts):
            encoded = word.encode("utf-8")
            f.write(struct.pack("<I", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<Q", int(count)))
        model.input_vectors.astype("<f4", copy=False).tofile(f)
        model.output_vectors.astype("<f4", copy=False).tofile(f)


def load_model(path) -> EmbeddingModel:
    path = Path(path)
    with open(path, "rb") as f:
        magic = f.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path} is not an embedding model file")
        (version,) = struct.unpack("<I", f.read(4))
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {version}")
        fields = _CONFIG_STRUCT.unpack(f.read(_CONFIG_STRUCT.size))
        config = EmbeddingConfig(
            dim=fields[0],
            window=fields[1],
            negatives=fields[2],
            epochs=fields[3],
            min_count=fields[4],
            ngram_min=fields[5],
            ngram_max=fields[6],
            bucket_count=fields[7],
            learning_rate=fields[8],
            subsample_threshold=fields[9],
            seed=fields[10],
        )
        vocab_size, total_tokens = struct.unpack("<QQ", f.read(16))
        words = []
        counts = np.empty(vocab_size, dtype=np.int64)
        for i in range(vocab_size):
            (word_len,) = struct.unpack("<I", f.read(4))
            words.append(f.read(word_len).decode("utf-8"))
            (counts[i],) = struct.unpack("<Q", f.read(8))
        vocab = Vocabulary(words=words, counts=counts, total_tokens=total_tokens)
        input_rows = vocab_size + config.bucket_count
        input_vectors = np.fromfile(f, dtype="<f4", count=input_rows * config.dim)
        output_vectors = np.fromfile(f, dtype="<f4", count=vocab_size * config.dim)
    if (
        input_vectors.size != input_rows * config.dim
        or output_vectors.size != vocab_size * config.dim
    ):
        raise ValueError(f"{path} is truncated")
    return EmbeddingModel(
        config=config,
        vocab=vocab,
        input_vectors=input_vectors.reshape(input_rows, config.dim),
        output_vectors=output_vectors.reshape(vocab_size, config.dim),
    )
