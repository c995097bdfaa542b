"""Hashtag map construction: tag vectors, 2D embedding, layout file."""

from __future__ import annotations

import csv
import hashlib
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .preprocess import clean_text, extract_hashtags, tokenize
from .tsne import TsneConfig, max_feasible_perplexity, tsne_embed

logger = logging.getLogger(__name__)


class NoTagsAboveThreshold(LookupError):
    pass


class LayoutNotBuilt(FileNotFoundError):
    pass


@dataclass(frozen=True)
class HashtagPoint:
    tag: str
    frequency: int
    x: float
    y: float


@dataclass
class HashtagLayout:
    points: list[HashtagPoint]
    perplexity: float
    seed: int
    min_frequency: int
    corpus_fingerprint: str

    def __post_init__(self):
        tags = [p.tag for p in self.points]
        if len(set(tags)) != len(tags):
            raise ValueError("layout tags must be unique")


def corpus_fingerprint(corpus_dir) -> str:
    """sha256 of the raw store, streamed."""
    digest = hashlib.sha256()
    with open(Path(corpus_dir) / "raw.jsonl", "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def hashtag_vectors(
    corpus_store, model, min_frequency: int = 10
) -> tuple[dict[str, np.ndarray], dict[str, int]]:
    """Mean sentence vector of the tweets containing each qualifying tag.

    The tag token itself never survives preprocessing, so the tag is
    represented by the cleaned text of the tweets it appears on. Association
    comes from the raw store; vectors from the text store, line-aligned.
    """
    sums: dict[str, np.ndarray] = {}
    counts: dict[str, int] = {}
    texts = corpus_store.iter_texts()
    for tweet, text in zip(corpus_store.iter_tweets(), texts):
        tags = extract_hashtags(tweet)
        if not tags:
            continue
        vector = model.sentence_vector(tokenize(clean_text(text)))
        for tag in tags:
            if tag in sums:
                sums[tag] += vector
                counts[tag] += 1
            else:
                sums[tag] = vector.copy()
                counts[tag] = 1
    vectors = {
        tag: sums[tag] / np.float32(count)
        for tag, count in counts.items()
        if count >= min_frequency
    }
    if not vectors:
        raise NoTagsAboveThreshold(
            f"no hashtag reaches frequency {min_frequency} "
            f"({len(counts)} distinct tags seen)"
        )
    return vectors, {tag: counts[tag] for tag in vectors}


def build_layout(
    corpus_store,
    model,
    config: TsneConfig = TsneConfig(),
    min_frequency: int = 10,
    fingerprint: str = "",
) -> HashtagLayout:
    """hashtag_vectors -> tsne_embed, with perplexity auto-lowering.

    Tags are ordered by (frequency desc, tag asc) before embedding, so a
    layout is fully determined by seed and corpus fingerprint.
    """
    vectors, frequencies = hashtag_vectors(corpus_store, model, min_frequency)
    tags = sorted(vectors, key=lambda t: (-frequencies[t], t))
    X = np.array([vectors[t] for t in tags], dtype=np.float64)

    n = len(tags)
    if n >= 4 and config.perplexity > max_feasible_perplexity(n):
        lowered = max(1.0, math.floor(max_feasible_perplexity(n)))
        logger.warning(
            "perplexity %.1f infeasible for %d tags; lowering to %.0f",
            config.perplexity,
            n,
            lowered,
        )
        config = replace(config, perplexity=lowered)

    coords = tsne_embed(X, config)
    points = [
        HashtagPoint(tag=tag, frequency=frequencies[tag], x=float(x), y=float(y))
        for tag, (x, y) in zip(tags, coords)
    ]
    return HashtagLayout(
        points=points,
        perplexity=config.perplexity,
        seed=config.seed,
        min_frequency=min_frequency,
        corpus_fingerprint=fingerprint,
    )


LAYOUT_COLUMNS = ["tag", "frequency", "x", "y"]


def save_layout(layout: HashtagLayout, path) -> None:
    """Header comments carry the config echo and fingerprint; then CSV rows."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(f"# fingerprint={layout.corpus_fingerprint}\n")
        f.write(
            f"# perplexity={layout.perplexity} seed={layout.seed} "
            f"min_frequency={layout.min_frequency}\n"
        )
        writer = csv.writer(f)
        writer.writerow(LAYOUT_COLUMNS)
        for point in layout.points:
            writer.writerow([point.tag, point.frequency, f"{point.x:.6f}", f"{point.y:.6f}"])


def load_layout(path) -> HashtagLayout:
    path = Path(path)
    if not path.exists():
        raise LayoutNotBuilt(str(path))
    meta = {"fingerprint": "", "perplexity": 0.0, "seed": 0, "min_frequency": 0}
    points = []
    with open(path, "r", newline="", encoding="utf-8") as f:
        rows = []
        for line in f:
            if line.startswith("#"):
                for part in line[1:].split():
                    if "=" in part:
                        key, _, value = part.partition("=")
                        meta[key] = value
                continue
            rows.append(line)
        reader = csv.reader(rows)
        header = next(reader)
        if header != LAYOUT_COLUMNS:
            raise ValueError(f"unexpected layout header {header}")
        for tag, frequency, x, y in reader:
            points.append(HashtagPoint(tag=tag, frequency=int(frequency), x=float(x), y=float(y)))
    return HashtagLayout(
        points=points,
        perplexity=float(meta["perplexity"]),
        seed=int(meta["seed"]),
        min_frequency=int(meta["min_frequency"]),
        corpus_fingerprint=str(meta["fingerprint"]),
    )
