"""Exact t-SNE for hashtag maps: O(n^2) affinities, KL gradient descent.

Desk scale by design; the qualifying-hashtag count stays in the low
thousands, so neither Barnes-Hut trees nor PCA preprocessing earn their
complexity here.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np


class PerplexityInfeasible(ValueError):
    """Requested perplexity cannot be matched for these points."""


@dataclass(frozen=True)
class TsneConfig:
    perplexity: float = 30.0
    iterations: int = 1000
    learning_rate: float = 200.0
    early_exaggeration: float = 12.0
    exaggeration_iterations: int = 250
    momentum_early: float = 0.5
    momentum_late: float = 0.8
    momentum_switch: int = 250
    seed: int = 0

    def __post_init__(self):
        if self.perplexity <= 0 or self.iterations < 1 or self.learning_rate <= 0:
            raise ValueError("perplexity, iterations and learning_rate must be positive")


PERPLEXITY_TOLERANCE = 1e-3
MAX_BISECTIONS = 200


def max_feasible_perplexity(n: int) -> float:
    """Perplexity must not exceed (n-1)/3; 2^entropy tops out at n-1."""
    return (n - 1) / 3.0


def squared_distances(X: np.ndarray) -> np.ndarray:
    sq = np.sum(X * X, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.fill_diagonal(d2, 0.0)
    return np.maximum(d2, 0.0)


def conditional_row(d2_row: np.ndarray, beta: float) -> np.ndarray:
    """p_{j|i} for one point at precision beta = 1/(2 sigma^2)."""
    # subtract the min distance before exponentiating for stability
    shifted = -(d2_row - d2_row.min()) * beta
    p = np.exp(shifted)
    return p / p.sum()


def row_perplexity(p_row: np.ndarray) -> float:
    nz = p_row[p_row > 0]
    entropy = float(-(nz * np.log2(nz)).sum())
    return float(2.0**entropy)


def bandwidth_search(d2_row: np.ndarray, perplexity: float) -> tuple[np.ndarray, float]:
    """Binary search on beta until 2^entropy matches perplexity within 1e-3.

    Returns (conditional probabilities, beta). Raises PerplexityInfeasible
    when 200 bisections cannot reach the tolerance (degenerate geometry,
    e.g. all-equal distances pin the perplexity at n-1 for every beta).
    """
    beta = 1.0
    lo, hi = 0.0, np.inf
    for _ in range(MAX_BISECTIONS):
        p = conditional_row(d2_row, beta)
        perp = row_perplexity(p)
        error = perp - perplexity
        if abs(error) <= PERPLEXITY_TOLERANCE:
            return p, beta
        if error > 0:  # too spread out: raise beta
            lo = beta
            beta = beta * 2.0 if hi == np.inf else (lo + hi) / 2.0
        else:
            hi = beta
            beta = beta / 2.0 if lo == 0.0 else (lo + hi) / 2.0
    raise PerplexityInfeasible(
        f"bandwidth search cannot reach perplexity {perplexity} "
        f"(last 2^entropy {perp:.4f})"
    )


def input_affinities(X: np.ndarray, perplexity: float) -> np.ndarray:
    """Symmetrized affinities P = (P(j|i) + P(i|j)) / 2n; zero diagonal,
    entries sum to one, symmetric exactly by construction."""
    X = np.asarray(X, dtype=np.float64)
    n = len(X)
    if n < 4:
        raise PerplexityInfeasible(f"need at least 4 points, got {n}")
    if perplexity > max_feasible_perplexity(n):
        raise PerplexityInfeasible(
            f"perplexity {perplexity} infeasible for {n} points "
            f"(max {max_feasible_perplexity(n):.2f})"
        )
    d2 = squared_distances(X)
    conditional = np.zeros((n, n))
    mask = ~np.eye(n, dtype=bool)
    for i in range(n):
        p_row, _ = bandwidth_search(d2[i][mask[i]], perplexity)
        conditional[i][mask[i]] = p_row
    P = (conditional + conditional.T) / (2.0 * n)
    return P


def _student_weights(Y: np.ndarray) -> np.ndarray:
    d2 = squared_distances(Y)
    w = 1.0 / (1.0 + d2)
    np.fill_diagonal(w, 0.0)
    return w


def kl_divergence(P: np.ndarray, Y: np.ndarray) -> float:
    w = _student_weights(Y)
    Q = w / w.sum()
    mask = P > 0
    return float(np.sum(P[mask] * np.log(P[mask] / Q[mask])))


def kl_gradient(P: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """grad_i = 4 sum_j (p_ij - q_ij) (y_i - y_j) / (1 + |y_i - y_j|^2)."""
    w = _student_weights(Y)
    Q = w / w.sum()
    coeff = (P - Q) * w
    # sum_j coeff_ij (y_i - y_j) = y_i * rowsum - coeff @ Y
    rowsum = coeff.sum(axis=1)
    return 4.0 * (Y * rowsum[:, None] - coeff @ Y)


def seeded_init(X: np.ndarray, seed: int, scale: float = 1e-4) -> np.ndarray:
    """Gaussian init with one stream per point, keyed by the point's bytes.

    Keying on content rather than position makes the embedding equivariant
    under permutation of the inputs: a point carries its init with it.
    Duplicate rows share an init and will trace identical trajectories.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    Y0 = np.empty((len(X), 2))
    for i, row in enumerate(X):
        digest = hashlib.blake2b(row.tobytes(), digest_size=8).digest()
        rng = np.random.default_rng([seed, int.from_bytes(digest, "little")])
        Y0[i] = rng.normal(0.0, scale, size=2)
    return Y0


def tsne_embed(
    X: np.ndarray, config: TsneConfig = TsneConfig(), init: np.ndarray | None = None
) -> np.ndarray:
    """Momentum gradient descent with early exaggeration and adaptive gains.

    The per-parameter gains (grow 0.2 when gradient and velocity disagree,
    shrink x0.8 otherwise, floored at 0.01) are what keep the stock learning
    rate stable across point counts; without them small inputs diverge.
    Deterministic for a given seed.
    """
    X = np.asarray(X, dtype=np.float64)
    P = input_affinities(X, config.perplexity)
    Y = seeded_init(X, config.seed) if init is None else np.array(init, dtype=np.float64)
    velocity = np.zeros_like(Y)
    gains = np.ones_like(Y)
    for iteration in range(config.iterations):
        exaggerated = iteration < config.exaggeration_iterations
        momentum = (
            config.momentum_early
            if iteration < config.momentum_switch
            else config.momentum_late
        )
        grad = kl_gradient(P * config.early_exaggeration if exaggerated else P, Y)
        agree = np.sign(grad) == np.sign(velocity)
        gains = np.where(agree, gains * 0.8, gains + 0.2)
        np.clip(gains, 0.01, None, out=gains)
        velocity = momentum * velocity - config.learning_rate * gains * grad
        Y = Y + velocity
        Y = Y - Y.mean(axis=0)
    return Y
