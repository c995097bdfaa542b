"""Character n-gram enumeration and hashing for subword vectors.

Words are wrapped in '<' and '>' before n-grams are taken, so prefixes and
suffixes hash differently from word-internal spans. The wrapped full word is
never emitted as an n-gram: the word itself owns a dedicated vocabulary row.
"""

from __future__ import annotations

_FNV_OFFSET = 0x811C9DC5
_FNV_PRIME = 0x01000193
_U32 = 0xFFFFFFFF


def fnv1a_32(data: bytes) -> int:
    """FNV-1a 32-bit hash; fixes subword bucket ids across platforms."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _U32
    return h


def ngram_strings(word: str, ngram_min: int, ngram_max: int) -> list[str]:
    """All boundary-wrapped character n-grams, excluding the full wrapped word."""
    wrapped = f"<{word}>"
    length = len(wrapped)
    grams = []
    for start in range(length):
        for size in range(ngram_min, ngram_max + 1):
            end = start + size
            if end > length:
                break
            if end - start == length:
                continue
            grams.append(wrapped[start:end])
    return grams


def subword_ngrams(word: str, ngram_min: int, ngram_max: int, bucket_count: int) -> list[int]:
    """Bucket indices of a word's n-grams, in enumeration order."""
    if not word:
        raise ValueError("word must be non-empty")
    return [
        fnv1a_32(gram.encode("utf-8")) % bucket_count
        for gram in ngram_strings(word, ngram_min, ngram_max)
    ]
