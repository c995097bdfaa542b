"""Subword skipgram embeddings trained with negative sampling.

The trainer runs a compiled kernel when the extension built, otherwise a
numpy fallback with the same update semantics; see
:data:`tweetsift.embedding.trainer.KERNEL_BACKEND` for which one is active.
"""

from .model import EmbeddingModel, UnknownQuery, load_model, save_model
from .subwords import fnv1a_32, subword_ngrams
from .trainer import KERNEL_BACKEND, train
from .vocab import EmbeddingConfig, EmptyCorpus, Vocabulary, build_vocab

__all__ = [
    "EmbeddingConfig",
    "EmbeddingModel",
    "EmptyCorpus",
    "KERNEL_BACKEND",
    "UnknownQuery",
    "Vocabulary",
    "build_vocab",
    "fnv1a_32",
    "load_model",
    "save_model",
    "subword_ngrams",
    "train",
]
