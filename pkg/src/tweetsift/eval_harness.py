"""Experimental protocol: stratified splits, strategy comparison, curves.

One experiment fixes a three-way split (initial pool / labeling pool / held-
out test), trains the same base classifier for both query strategies, runs
each to pool exhaustion against the ground-truth oracle, and records test
precision/recall after every iteration. Because both strategies start from
one base model and end having labeled the identical set, their curves meet
exactly at both ends; what differs is how fast recall climbs in between.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .active_learning import (
    ALConfig,
    ClassifierHyperparams,
    ClassifierModel,
    LabeledExample,
    NEGATIVE,
    POSITIVE,
    PoolState,
    predict_proba,
    run_loop,
)

CLASS_NAMES = ("crisis_positive", "other_crisis", "non_disaster")


class TooSmallClass(ValueError):
    """A class would land zero items in some partition."""


class UnknownClass(KeyError):
    pass


@dataclass(frozen=True)
class EvalItem:
    tweet_id: str
    vector: np.ndarray
    label: str


@dataclass
class EvalDataset:
    items: list[EvalItem]
    positive_class: str

    def __post_init__(self):
        ids = [item.tweet_id for item in self.items]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate tweet ids in dataset")
        if self.positive_class not in {item.label for item in self.items}:
            raise UnknownClass(self.positive_class)

    @property
    def classes(self) -> list[str]:
        return sorted({item.label for item in self.items})


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.6
    initial_pool_fraction: float = 0.1
    labeling_pool_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        for name in ("train_fraction", "initial_pool_fraction", "labeling_pool_fraction"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise ValueError(f"{name} must be in (0,1)")
        if not math.isclose(
            self.initial_pool_fraction + self.labeling_pool_fraction, self.train_fraction
        ):
            raise ValueError("initial + labeling fractions must equal the train fraction")


@dataclass(frozen=True)
class CurvePoint:
    iteration: int
    precision: float
    recall: float
    labeled_count: int


@dataclass
class ExperimentResult:
    al_curve: list[CurvePoint]
    baseline_curve: list[CurvePoint]
    al_convergence: int = field(init=False)
    baseline_convergence: int = field(init=False)

    def __post_init__(self):
        if len(self.al_curve) != len(self.baseline_curve):
            raise ValueError("curves must have equal length")
        if [p.labeled_count for p in self.al_curve] != [
            p.labeled_count for p in self.baseline_curve
        ]:
            raise ValueError("curves must share labeled_count sequences")
        self.al_convergence = convergence_iteration(self.al_curve)
        self.baseline_convergence = convergence_iteration(self.baseline_curve)


def stratified_split(
    dataset: EvalDataset, spec: SplitSpec
) -> tuple[list[EvalItem], list[EvalItem], list[EvalItem]]:
    """Split preserving per-class proportions; rounding favors the test set.

    Deterministic given spec.seed. Raises TooSmallClass when any class would
    leave a partition empty (an empty test positive class would make recall
    undefined later, so it is rejected here).
    """
    rng = np.random.default_rng(spec.seed)
    by_class: dict[str, list[EvalItem]] = {}
    for item in dataset.items:
        by_class.setdefault(item.label, []).append(item)

    initial: list[EvalItem] = []
    labeling: list[EvalItem] = []
    test: list[EvalItem] = []
    for label in sorted(by_class):
        members = sorted(by_class[label], key=lambda item: item.tweet_id)
        order = rng.permutation(len(members))
        shuffled = [members[i] for i in order]
        n = len(shuffled)
        # tiny epsilon so 200 * 0.1 style products cannot floor to 19
        n_initial = int(n * spec.initial_pool_fraction + 1e-9)
        n_labeling = int(n * spec.labeling_pool_fraction + 1e-9)
        n_test = n - n_initial - n_labeling
        if min(n_initial, n_labeling, n_test) < 1:
            raise TooSmallClass(
                f"class {label!r} with {n} items cannot fill every partition"
            )
        initial.extend(shuffled[:n_initial])
        labeling.extend(shuffled[n_initial : n_initial + n_labeling])
        test.extend(shuffled[n_initial + n_labeling :])
    return initial, labeling, test


def binarize(items, positive_class: str, known_classes=None) -> dict[str, int]:
    """tweet_id -> binary label, positive_class against everything else."""
    items = list(items)
    classes = {item.label for item in items}
    if known_classes is not None:
        classes |= set(known_classes)
    if positive_class not in classes:
        raise UnknownClass(positive_class)
    return {
        item.tweet_id: POSITIVE if item.label == positive_class else NEGATIVE
        for item in items
    }


def precision_recall(
    model: ClassifierModel, test_items, truth: dict[str, int], threshold: float = 0.5
) -> tuple[float, float]:
    """Precision is 1.0 when nothing is predicted positive (vacuous case)."""
    tp = fp = fn = 0
    for item in test_items:
        predicted = predict_proba(model, item.vector) >= threshold
        actual = truth[item.tweet_id] == POSITIVE
        if predicted and actual:
            tp += 1
        elif predicted and not actual:
            fp += 1
        elif not predicted and actual:
            fn += 1
    if tp + fn == 0:
        raise ValueError("test set has no positives; split validation should prevent this")
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn)
    return precision, recall


def convergence_iteration(curve, fraction: float = 0.95) -> int:
    """Smallest i with recall_j >= fraction*final for every j >= i."""
    if not curve:
        raise ValueError("curve is empty")
    floor = fraction * curve[-1].recall
    start = 0
    for index, point in enumerate(curve):
        if point.recall < floor:
            start = index + 1
    return start


def run_experiment(
    dataset: EvalDataset,
    spec: SplitSpec,
    batch_size: int = 5,
    hyperparams: ClassifierHyperparams = ClassifierHyperparams(),
) -> ExperimentResult:
    """Uncertainty vs random control from one shared split and base model.

    Both runs get budget = labeling pool size so the curves coincide at the
    final iteration as well as at iteration 0.
    """
    initial_items, labeling_items, test_items = stratified_split(dataset, spec)
    truth = binarize(dataset.items, dataset.positive_class)

    initial = [
        LabeledExample(tweet_id=i.tweet_id, vector=i.vector, label=truth[i.tweet_id])
        for i in initial_items
    ]
    pool = {item.tweet_id: item.vector for item in labeling_items}
    config = ALConfig(budget=len(pool), batch_size=batch_size, seed=spec.seed)

    def curve_for(strategy: str) -> list[CurvePoint]:
        points: list[CurvePoint] = []

        def observer(iteration: int, state: PoolState) -> None:
            precision, recall = precision_recall(state.model, test_items, truth)
            points.append(
                CurvePoint(
                    iteration=iteration,
                    precision=precision,
                    recall=recall,
                    labeled_count=len(state.labeled),
                )
            )

        run_loop(
            initial,
            pool,
            config,
            strategy,
            truth.__getitem__,
            observer=observer,
            hyperparams=hyperparams,
        )
        return points

    return ExperimentResult(al_curve=curve_for("uncertain"), baseline_curve=curve_for("random"))


RESULTS_HEADER = ["strategy", "iteration", "labeled_count", "precision", "recall"]


def write_results(path, results: list[tuple[str, ExperimentResult]] | ExperimentResult) -> None:
    """Results file: one row per curve point, both strategies, all runs."""
    if isinstance(results, ExperimentResult):
        results = [("0", results)]
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(RESULTS_HEADER)
        for _run, result in results:
            for strategy, curve in (
                ("uncertain", result.al_curve),
                ("random", result.baseline_curve),
            ):
                for point in curve:
                    writer.writerow(
                        [
                            strategy,
                            point.iteration,
                            point.labeled_count,
                            f"{point.precision:.6f}",
                            f"{point.recall:.6f}",
                        ]
                    )


def read_results(path) -> dict[str, dict[int, list[CurvePoint]]]:
    """strategy -> iteration -> points (one per run at that iteration)."""
    out: dict[str, dict[int, list[CurvePoint]]] = {}
    with open(path, "r", newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header != RESULTS_HEADER:
            raise ValueError(f"unexpected results header: {header}")
        for strategy, iteration, labeled, precision, recall in reader:
            point = CurvePoint(int(iteration), float(precision), float(recall), int(labeled))
            out.setdefault(strategy, {}).setdefault(point.iteration, []).append(point)
    return out


def plot_results(results_path, out_path) -> None:
    """Fig-3-style curve chart: solid precision, dashed recall; red AL, blue control."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    grouped = read_results(results_path)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    colors = {"uncertain": "tab:red", "random": "tab:blue"}
    labels = {"uncertain": "active learning", "random": "random control"}
    for strategy, by_iter in grouped.items():
        iters = sorted(by_iter)
        precision = [np.mean([p.precision for p in by_iter[i]]) for i in iters]
        recall = [np.mean([p.recall for p in by_iter[i]]) for i in iters]
        color = colors.get(strategy, "tab:gray")
        ax.plot(iters, precision, "-", color=color, label=f"{labels.get(strategy, strategy)} precision")
        ax.plot(iters, recall, "--", color=color, label=f"{labels.get(strategy, strategy)} recall")
    ax.set_xlabel("iteration")
    ax.set_ylabel("score")
    ax.set_ylim(0.0, 1.05)
    ax.legend(loc="lower right", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


def dataset_to_csv(dataset: EvalDataset, path) -> None:
    dim = len(dataset.items[0].vector) if dataset.items else 0
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["tweet_id", "class"] + [f"v{i}" for i in range(dim)])
        for item in dataset.items:
            writer.writerow(
                [item.tweet_id, item.label] + [f"{x:.8g}" for x in np.asarray(item.vector)]
            )


def dataset_from_csv(path, positive_class: str) -> EvalDataset:
    items = []
    with open(path, "r", newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header[:2] != ["tweet_id", "class"]:
            raise ValueError(f"unexpected dataset header in {Path(path).name}")
        for row in reader:
            items.append(
                EvalItem(
                    tweet_id=row[0],
                    vector=np.array([float(x) for x in row[2:]], dtype=np.float64),
                    label=row[1],
                )
            )
    return EvalDataset(items=items, positive_class=positive_class)
