"""Deterministic tweet text normalization.

Cleaning is a fixed sequence: strip URLs, mentions and hashtag tokens, drop
leading retweet markers, case-fold, drop everything that is not a letter,
digit or whitespace, then collapse whitespace. The result feeds both the
embedding trainer and the classifier, so it has to be stable and idempotent.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

URL_RE = re.compile(r"https?://\S+")
MENTION_RE = re.compile(r"@\w+")
HASHTAG_RE = re.compile(r"#\w+")


@dataclass(frozen=True)
class CleanDocument:
    """A normalized tweet: ordered lowercase tokens plus their joined form."""

    tweet_id: str
    tokens: tuple[str, ...]
    text: str

    @property
    def is_empty(self) -> bool:
        return not self.tokens


def clean_text(text: str) -> str:
    """Normalize raw tweet text to lowercase letters/digits/single spaces.

    Total function: any unicode string in, possibly empty string out. The
    leading retweet marker is dropped on the whitespace-normalized token
    list rather than the raw string; stripping it earlier would let inputs
    like ``"-rt hi"`` surface a fresh leading marker and break idempotence.
    """
    text = URL_RE.sub(" ", text)
    text = MENTION_RE.sub(" ", text)
    text = HASHTAG_RE.sub(" ", text)
    text = text.casefold()
    text = "".join(
        ch if (ch.isalpha() or ch.isdigit() or ch.isspace()) else " " for ch in text
    )
    tokens = text.split()
    while tokens and tokens[0] == "rt":
        del tokens[0]
    return " ".join(tokens)


def tokenize(cleaned: str) -> list[str]:
    """Split an already cleaned string on single spaces; '' yields []."""
    if not cleaned:
        return []
    return cleaned.split(" ")


def make_document(tweet_id: str, text: str) -> CleanDocument:
    cleaned = clean_text(text)
    return CleanDocument(tweet_id=tweet_id, tokens=tuple(tokenize(cleaned)), text=cleaned)


def extract_hashtags(tweet) -> list[str]:
    """Lowercased, '#'-stripped hashtags, de-duplicated in first-seen order.

    Accepts anything with a ``hashtags`` attribute (a RawTweet) or a plain
    iterable of tag strings.
    """
    tags = getattr(tweet, "hashtags", tweet)
    seen: set[str] = set()
    out: list[str] = []
    for tag in tags:
        norm = tag.lstrip("#").casefold()
        if norm and norm not in seen:
            seen.add(norm)
            out.append(norm)
    return out


def clean_store(in_path, out_path) -> int:
    """Clean a text store line by line, preserving line positions.

    Every input line produces exactly one output line (possibly empty), so
    line numbers keep identifying the same tweet across stores. Returns the
    number of lines written.
    """
    count = 0
    with open(in_path, "r", encoding="utf-8") as src, open(
        out_path, "w", encoding="utf-8"
    ) as dst:
        for line in src:
            dst.write(clean_text(line.rstrip("\n")))
            dst.write("\n")
            count += 1
    return count
