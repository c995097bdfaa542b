"""Training orchestration: backend selection, matrix init, epoch loop."""

from __future__ import annotations

import logging
import os
from typing import Callable

import numpy as np

from . import _sgns_python
from .vocab import (
    EmbeddingConfig,
    EmptyCorpus,
    Vocabulary,
    build_vocab,
    encode_corpus,
    iter_token_lines,
)

logger = logging.getLogger(__name__)

if os.environ.get("TWEETSIFT_PURE_PYTHON") == "1":
    _sgns_compiled = None
else:
    try:
        from . import _sgns_kernel as _sgns_compiled
    except ImportError:
        _sgns_compiled = None

KERNEL_BACKEND = "compiled" if _sgns_compiled is not None else "python"

NEGATIVE_TABLE_SIZE = 1_000_000
UNIGRAM_POWER = 0.75


def get_kernel(backend: str | None = None):
    """Return the epoch kernel for ``backend`` (default: best available)."""
    if backend in (None, "auto"):
        return _sgns_compiled.train_epoch if _sgns_compiled else _sgns_python.train_epoch
    if backend == "compiled":
        if _sgns_compiled is None:
            raise RuntimeError("compiled kernel not available; build the extension")
        return _sgns_compiled.train_epoch
    if backend == "python":
        return _sgns_python.train_epoch
    raise ValueError(f"unknown backend {backend!r}")


def initialize_matrices(
    vocab_size: int, config: EmbeddingConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Seeded init: input rows uniform in (-1/dim, 1/dim), output rows zero."""
    rng = np.random.default_rng(config.seed)
    rows = vocab_size + config.bucket_count
    input_matrix = rng.random((rows, config.dim), dtype=np.float32)
    input_matrix -= 0.5
    input_matrix *= np.float32(2.0 / config.dim)
    output_matrix = np.zeros((vocab_size, config.dim), dtype=np.float32)
    return input_matrix, output_matrix


def build_row_table(
    vocab: Vocabulary, config: EmbeddingConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Per-word input row ids (word row first, then subword buckets), flattened."""
    ids: list[int] = []
    offsets = [0]
    for index in range(len(vocab)):
        ids.extend(vocab.input_row_ids(index, config))
        offsets.append(len(ids))
    return np.array(ids, dtype=np.int32), np.array(offsets, dtype=np.int64)


def train(
    source,
    config: EmbeddingConfig | None = None,
    *,
    backend: str | None = None,
    epoch_callback: Callable[[int, float], None] | None = None,
):
    """Train an embedding model over a clean store path or token-line iterable.

    Single-threaded and deterministic: a fixed seed reproduces the model
    bit-for-bit on a given backend. ``epoch_callback(epoch, mean_pair_loss)``
    fires after each epoch.
    """
    from .model import EmbeddingModel

    config = config or EmbeddingConfig()
    lines = _materialize_lines(source)
    vocab = build_vocab(lines, config)
    tokens, offsets = encode_corpus(lines, vocab)
    if tokens.size == 0:
        raise EmptyCorpus("corpus has no in-vocabulary tokens")

    input_matrix, output_matrix = initialize_matrices(len(vocab), config)
    row_ids, row_offsets = build_row_table(vocab, config)
    negative_table = vocab.negative_table(NEGATIVE_TABLE_SIZE, UNIGRAM_POWER)
    keep_prob = vocab.keep_probabilities(config.subsample_threshold)
    subsample = 0.0 < config.subsample_threshold < 1.0

    kernel = get_kernel(backend)
    tokens_total = config.epochs * int(tokens.size)
    tokens_done = 0
    rng_state = (config.seed * 2 + 1) & ((1 << 64) - 1)

    for epoch in range(config.epochs):
        rng_state, tokens_done, loss_sum, pairs = kernel(
            input_matrix,
            output_matrix,
            tokens,
            offsets,
            row_ids,
            row_offsets,
            negative_table,
            keep_prob,
            config.window,
            config.negatives,
            config.learning_rate,
            tokens_done,
            tokens_total,
            rng_state,
            subsample,
        )
        mean_loss = loss_sum / pairs if pairs else float("nan")
        logger.info("epoch %d/%d: mean pair loss %.4f", epoch + 1, config.epochs, mean_loss)
        if epoch_callback is not None:
            epoch_callback(epoch, mean_loss)

    return EmbeddingModel(
        config=config,
        vocab=vocab,
        input_vectors=input_matrix,
        output_vectors=output_matrix,
    )


def _materialize_lines(source) -> list[list[str]]:
    if isinstance(source, (str, os.PathLike)):
        return list(iter_token_lines(source))
    return [list(tokens) for tokens in source]
