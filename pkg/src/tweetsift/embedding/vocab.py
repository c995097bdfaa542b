"""Vocabulary construction for the embedding trainer."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .subwords import subword_ngrams


class EmptyCorpus(ValueError):
    """No words survived the min_count threshold."""


@dataclass(frozen=True)
class EmbeddingConfig:
    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    learning_rate: float = 0.05
    min_count: int = 5
    ngram_min: int = 3
    ngram_max: int = 6
    bucket_count: int = 2_000_000
    subsample_threshold: float = 1e-4
    seed: int = 1

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.ngram_min > self.ngram_max:
            raise ValueError("ngram_min must be <= ngram_max")
        for name in ("window", "negatives", "epochs", "min_count", "bucket_count"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


@dataclass
class Vocabulary:
    """Retained words ordered by (count desc, word asc); dense indices 0..V-1."""

    words: list[str]
    counts: np.ndarray  # int64, aligned with words
    total_tokens: int  # all tokens seen, including dropped ones
    index: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.index = {w: i for i, w in enumerate(self.words)}

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index

    def keep_probabilities(self, threshold: float) -> np.ndarray:
        """Per-word keep probability for frequent-word subsampling.

        keep(w) = sqrt(t/f) + t/f with f the word's corpus frequency,
        capped at 1; a draw above keep(w) discards the occurrence.
        """
        freq = self.counts / max(self.total_tokens, 1)
        keep = np.sqrt(threshold / freq) + threshold / freq
        return np.minimum(keep, 1.0)

    def negative_table(self, size: int = 1_000_000, power: float = 0.75) -> np.ndarray:
        """Index table for drawing negatives from the unigram^power law."""
        weights = self.counts.astype(np.float64) ** power
        cumulative = np.cumsum(weights)
        cumulative /= cumulative[-1]
        positions = (np.arange(size) + 0.5) / size
        return np.searchsorted(cumulative, positions).astype(np.int32)

    def subword_ids(self, word: str, config: EmbeddingConfig) -> list[int]:
        """Input-matrix row ids for a word's subwords (offset past word rows)."""
        base = len(self.words)
        return [
            base + bucket
            for bucket in subword_ngrams(
                word, config.ngram_min, config.ngram_max, config.bucket_count
            )
        ]

    def input_row_ids(self, word_index: int, config: EmbeddingConfig) -> list[int]:
        return [word_index] + self.subword_ids(self.words[word_index], config)


def iter_token_lines(clean_store) -> Iterator[list[str]]:
    with open(clean_store, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            yield line.split(" ") if line else []


def build_vocab(lines: Iterable[list[str]], config: EmbeddingConfig) -> Vocabulary:
    """Count tokens and retain words with count >= min_count.

    ``lines`` is any iterable of token lists; pass ``iter_token_lines(path)``
    for a clean store on disk.
    """
    counter: Counter[str] = Counter()
    total = 0
    for tokens in lines:
        counter.update(tokens)
        total += len(tokens)
    retained = [
        (word, count) for word, count in counter.items() if count >= config.min_count
    ]
    if not retained:
        raise EmptyCorpus(
            f"no words reached min_count={config.min_count} "
            f"({len(counter)} distinct tokens seen)"
        )
    retained.sort(key=lambda item: (-item[1], item[0]))
    words = [w for w, _ in retained]
    counts = np.array([c for _, c in retained], dtype=np.int64)
    return Vocabulary(words=words, counts=counts, total_tokens=total)


def encode_corpus(
    lines: Iterable[list[str]], vocab: Vocabulary
) -> tuple[np.ndarray, np.ndarray]:
    """Map lines to vocab ids, dropping unknown tokens.

    Returns (tokens, offsets): a flat int32 id array plus int64 line offsets
    (len = line count + 1), the layout the training kernels consume.
    """
    ids: list[int] = []
    offsets = [0]
    for tokens in lines:
        ids.extend(vocab.index[t] for t in tokens if t in vocab.index)
        offsets.append(len(ids))
    return np.array(ids, dtype=np.int32), np.array(offsets, dtype=np.int64)


def decayed_learning_rate(lr0: float, tokens_done: int, tokens_total: int) -> float:
    """Linear decay to zero over the whole training run."""
    remaining = 1.0 - tokens_done / max(tokens_total, 1)
    return lr0 * max(remaining, 0.0)
