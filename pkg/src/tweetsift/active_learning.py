"""Relevance classifier and the uncertainty-sampling labeling loop.

The classifier is logistic regression over sentence vectors, retrained from
scratch after every labeled batch so a run depends only on the labeled set,
not on arrival order. Selection strategies are rank-based: 'uncertain' takes
the points with predicted probability closest to 0.5, 'random' is the
control. Ties and orderings always fall back to tweet_id so the whole loop
is reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Iterator

import numpy as np

POSITIVE = 1
NEGATIVE = 0
LABEL_NAMES = {POSITIVE: "positive", NEGATIVE: "negative"}
LABEL_VALUES = {"positive": POSITIVE, "negative": NEGATIVE}


class SingleClassPool(ValueError):
    """Training needs at least one example of each class."""


class BudgetExhausted(RuntimeError):
    pass


class EmptyPool(RuntimeError):
    pass


class NoMatches(LookupError):
    """No corpus tweet carries any of the requested seed hashtags."""


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class LabeledExample:
    tweet_id: str
    vector: np.ndarray
    label: int

    def __post_init__(self):
        if self.label not in (POSITIVE, NEGATIVE):
            raise ValueError(f"label must be 0 or 1, got {self.label}")


@dataclass(frozen=True)
class ClassifierHyperparams:
    learning_rate: float = 0.1
    epochs: int = 200
    l2: float = 1e-4
    seed: int = 0


@dataclass(frozen=True)
class ClassifierModel:
    weights: np.ndarray
    bias: float
    hyperparams: ClassifierHyperparams


@dataclass(frozen=True)
class ALConfig:
    budget: int
    batch_size: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.budget < 1 or self.batch_size < 1:
            raise ValueError("budget and batch_size must be >= 1")
        if self.batch_size > self.budget:
            raise ValueError("batch_size must not exceed budget")

    @property
    def iterations(self) -> int:
        return math.ceil(self.budget / self.batch_size)


@dataclass(frozen=True)
class PoolState:
    labeled: dict[str, LabeledExample]
    unlabeled: dict[str, np.ndarray]
    remaining_budget: int
    model: ClassifierModel | None = None

    def __post_init__(self):
        overlap = self.labeled.keys() & self.unlabeled.keys()
        if overlap:
            raise ValueError(f"ids in both pools: {sorted(overlap)[:3]}")


def logistic_loss(
    X: np.ndarray, y: np.ndarray, weights: np.ndarray, bias: float, l2: float
) -> float:
    """Mean cross-entropy plus (l2/2)*||w||^2; the bias is unregularized."""
    z = X @ weights + bias
    # log(1+exp(-z)) stabilized on both tails
    softplus = np.logaddexp(0.0, -z)
    loss = float(np.mean(y * softplus + (1 - y) * (softplus + z)))
    return loss + 0.5 * l2 * float(weights @ weights)


def logistic_gradients(
    X: np.ndarray, y: np.ndarray, weights: np.ndarray, bias: float, l2: float
) -> tuple[np.ndarray, float]:
    prob = 1.0 / (1.0 + np.exp(-(X @ weights + bias)))
    error = prob - y
    grad_w = X.T @ error / len(y) + l2 * weights
    grad_b = float(np.mean(error))
    return grad_w, grad_b


def train_classifier(
    labeled: Iterable[LabeledExample],
    hyperparams: ClassifierHyperparams = ClassifierHyperparams(),
) -> ClassifierModel:
    """Full-batch gradient descent from zero init; inputs sorted by tweet_id
    first, so the result depends only on the labeled set."""
    examples = sorted(labeled, key=lambda ex: ex.tweet_id)
    if not examples:
        raise SingleClassPool("no labeled examples")
    labels = {ex.label for ex in examples}
    if labels != {POSITIVE, NEGATIVE}:
        raise SingleClassPool(f"need both classes, got {sorted(labels)}")

    X = np.array([ex.vector for ex in examples], dtype=np.float64)
    y = np.array([ex.label for ex in examples], dtype=np.float64)
    weights = np.zeros(X.shape[1])
    bias = 0.0
    for _ in range(hyperparams.epochs):
        grad_w, grad_b = logistic_gradients(X, y, weights, bias, hyperparams.l2)
        weights -= hyperparams.learning_rate * grad_w
        bias -= hyperparams.learning_rate * grad_b
    return ClassifierModel(weights=weights, bias=bias, hyperparams=hyperparams)


def predict_proba(model: ClassifierModel, vector: np.ndarray) -> float:
    vector = np.asarray(vector, dtype=np.float64)
    if vector.shape != model.weights.shape:
        raise DimensionMismatch(
            f"vector has shape {vector.shape}, model expects {model.weights.shape}"
        )
    z = float(model.weights @ vector + model.bias)
    return 1.0 / (1.0 + math.exp(-z))


def predict_proba_many(model: ClassifierModel, ids_vectors) -> dict[str, float]:
    return {tid: predict_proba(model, vec) for tid, vec in ids_vectors}


def select_uncertain(
    model: ClassifierModel, unlabeled: dict[str, np.ndarray], batch_size: int
) -> list[str]:
    """The batch_size ids with probability closest to 0.5, ties by id."""
    ranked = sorted(
        unlabeled,
        key=lambda tid: (abs(predict_proba(model, unlabeled[tid]) - 0.5), tid),
    )
    return ranked[: min(batch_size, len(ranked))]


def select_random(
    unlabeled: dict[str, np.ndarray], batch_size: int, rng: np.random.Generator
) -> list[str]:
    ids = sorted(unlabeled)
    take = min(batch_size, len(ids))
    return [ids[i] for i in rng.choice(len(ids), size=take, replace=False)]


def al_step(
    state: PoolState,
    batch_size: int,
    strategy: str,
    oracle: Callable[[str], int],
    rng: np.random.Generator | None = None,
    hyperparams: ClassifierHyperparams = ClassifierHyperparams(),
) -> PoolState:
    """Select, query the oracle, merge, retrain. Returns the next state."""
    if state.model is None:
        raise ValueError("al_step requires a fitted model in the state")
    if state.remaining_budget <= 0:
        raise BudgetExhausted("labeling budget is spent")
    if not state.unlabeled:
        raise EmptyPool("no unlabeled points remain")

    take = min(batch_size, state.remaining_budget, len(state.unlabeled))
    if strategy == "uncertain":
        chosen = select_uncertain(state.model, state.unlabeled, take)
    elif strategy == "random":
        if rng is None:
            raise ValueError("random strategy needs an rng")
        chosen = select_random(state.unlabeled, take, rng)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")

    labeled = dict(state.labeled)
    unlabeled = dict(state.unlabeled)
    for tid in chosen:
        labeled[tid] = LabeledExample(tweet_id=tid, vector=unlabeled.pop(tid), label=oracle(tid))
    model = train_classifier(labeled.values(), hyperparams)
    return PoolState(
        labeled=labeled,
        unlabeled=unlabeled,
        remaining_budget=state.remaining_budget - len(chosen),
        model=model,
    )


def run_loop(
    initial_labeled: Iterable[LabeledExample],
    unlabeled: dict[str, np.ndarray],
    config: ALConfig,
    strategy: str,
    oracle: Callable[[str], int],
    observer: Callable[[int, PoolState], None] | None = None,
    hyperparams: ClassifierHyperparams = ClassifierHyperparams(),
) -> tuple[PoolState, list[PoolState]]:
    """ceil(budget/batch) steps, stopping early when the pool runs dry.

    The observer sees iteration 0 (after the initial fit) and every step;
    the returned snapshots mirror those calls.
    """
    labeled = {ex.tweet_id: ex for ex in initial_labeled}
    model = train_classifier(labeled.values(), hyperparams)
    state = PoolState(
        labeled=labeled,
        unlabeled=dict(unlabeled),
        remaining_budget=config.budget,
        model=model,
    )
    snapshots = [state]
    if observer is not None:
        observer(0, state)

    rng = np.random.default_rng(config.seed)
    for iteration in range(1, config.iterations + 1):
        if not state.unlabeled or state.remaining_budget <= 0:
            break
        state = al_step(state, config.batch_size, strategy, oracle, rng, hyperparams)
        snapshots.append(state)
        if observer is not None:
            observer(iteration, state)
    return state, snapshots


def seed_candidates(corpus_store, include_tags, n: int):
    """Up to n raw tweets whose hashtags intersect include_tags, corpus order."""
    from .preprocess import extract_hashtags

    wanted = {t.lstrip("#").casefold() for t in include_tags if t}
    if not wanted:
        raise ValueError("include_tags must be non-empty")
    matches = []
    for tweet in corpus_store.iter_tweets():
        if wanted.intersection(extract_hashtags(tweet)):
            matches.append(tweet)
            if len(matches) == n:
                break
    if not matches:
        raise NoMatches(f"no tweets tagged with any of {sorted(wanted)}")
    return matches


@dataclass
class LabelStore:
    """Append-only label log: tweet_id, label, timestamp, source per line.

    The append happens (and is flushed) before any in-memory state changes,
    so replaying the file reconstructs the pool exactly after a crash.
    """

    path: Path
    _file: object = field(init=False, default=None, repr=False)

    def __post_init__(self):
        self.path = Path(self.path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.touch()

    def append(self, tweet_id: str, label: int, source: str, timestamp=None) -> None:
        if source not in ("seed", "al", "eval"):
            raise ValueError(f"unknown label source {source!r}")
        if self._file is None:
            self._file = open(self.path, "a", encoding="utf-8")
        stamp = (timestamp or datetime.now(timezone.utc)).isoformat()
        self._file.write(f"{tweet_id}\t{LABEL_NAMES[label]}\t{stamp}\t{source}\n")
        self._file.flush()

    def __iter__(self) -> Iterator[tuple[str, int, str, str]]:
        with open(self.path, "r", encoding="utf-8") as f:
            for line in f:
                line = line.rstrip("\n")
                if not line:
                    continue
                tweet_id, label, stamp, source = line.split("\t")
                yield tweet_id, LABEL_VALUES[label], stamp, source

    def close(self) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None


def rebuild_pool(
    vectors: dict[str, np.ndarray],
    store: LabelStore,
    budget: int,
    hyperparams: ClassifierHyperparams = ClassifierHyperparams(),
) -> PoolState:
    """Replay a labels store over the full id->vector map.

    Budget consumption counts only 'al' labels; seed labels are free. The
    deterministic trainer makes the rebuilt model identical to the one the
    crashed process held.
    """
    labeled: dict[str, LabeledExample] = {}
    unlabeled = dict(vectors)
    spent = 0
    for tweet_id, label, _stamp, source in store:
        if tweet_id in labeled:
            continue
        vector = unlabeled.pop(tweet_id, None)
        if vector is None:
            raise KeyError(f"labeled id {tweet_id} not in the vector map")
        labeled[tweet_id] = LabeledExample(tweet_id=tweet_id, vector=vector, label=label)
        if source == "al":
            spent += 1
    classes = {ex.label for ex in labeled.values()}
    model = train_classifier(labeled.values(), hyperparams) if classes == {0, 1} else None
    return PoolState(
        labeled=labeled,
        unlabeled=unlabeled,
        remaining_budget=max(budget - spent, 0),
        model=model,
    )
