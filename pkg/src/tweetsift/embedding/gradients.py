"""Reference math for one skipgram negative-sampling pair.

Both training kernels apply exactly these updates; this module is the plain
numpy statement of them, precise enough to check against finite differences
in either float32 or float64.

For input rows R (the center word row plus its subword rows), hidden state
h = mean(R), one positive target t and negatives n_1..n_k:

    loss = -log sigmoid(u_t . h) - sum_k log sigmoid(-u_nk . h)
"""

from __future__ import annotations

import numpy as np


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def pair_loss(
    input_matrix: np.ndarray,
    output_matrix: np.ndarray,
    input_ids,
    target_id: int,
    negative_ids,
) -> float:
    """Loss evaluated in float64 whatever the matrix dtype.

    Keeps finite differencing meaningful on float32 parameters: the noise in
    a float32-evaluated loss would swamp the O(eps) secant otherwise.
    """
    h = input_matrix[np.asarray(input_ids)].astype(np.float64).mean(axis=0)
    loss = -np.log(sigmoid(np.dot(output_matrix[target_id].astype(np.float64), h)))
    for nid in negative_ids:
        loss -= np.log(sigmoid(-np.dot(output_matrix[nid].astype(np.float64), h)))
    return float(loss)


def pair_gradients(
    input_matrix: np.ndarray,
    output_matrix: np.ndarray,
    input_ids,
    target_id: int,
    negative_ids,
) -> tuple[np.ndarray, dict[int, np.ndarray]]:
    """Exact gradients of pair_loss at the current parameters.

    Returns (grad_input_row, grad_output) where grad_input_row is the
    per-occurrence gradient of each participating input row (d loss / dh
    divided by the row count; a row listed twice receives it twice) and
    grad_output maps output row id to its gradient, with repeated negatives
    accumulated.
    """
    ids = np.asarray(input_ids)
    h = input_matrix[ids].mean(axis=0)
    dtype = input_matrix.dtype
    grad_h = np.zeros_like(h)
    grad_output: dict[int, np.ndarray] = {}

    score = sigmoid(np.dot(output_matrix[target_id], h))
    coeff = dtype.type(score - 1.0)
    grad_h += coeff * output_matrix[target_id]
    grad_output[target_id] = coeff * h

    for nid in negative_ids:
        score = sigmoid(np.dot(output_matrix[nid], h))
        coeff = dtype.type(score)
        grad_h += coeff * output_matrix[nid]
        if nid in grad_output:
            grad_output[nid] = grad_output[nid] + coeff * h
        else:
            grad_output[nid] = coeff * h

    return grad_h / dtype.type(len(ids)), grad_output


def apply_pair_update(
    input_matrix: np.ndarray,
    output_matrix: np.ndarray,
    input_ids,
    target_id: int,
    negative_ids,
    lr: float,
) -> None:
    """One SGD step on pair_loss, in place.

    Output rows update sequentially (positive first, then negatives in draw
    order) and the hidden-state gradient accumulates against each row's
    pre-update value; the kernels follow the same order, which pins the
    result bit-for-bit for a given decision stream and backend.
    """
    ids = np.asarray(input_ids)
    dtype = input_matrix.dtype
    h = input_matrix[ids].mean(axis=0)
    grad_h = np.zeros_like(h)

    targets = [(target_id, 1.0)] + [(nid, 0.0) for nid in negative_ids]
    for row_id, label in targets:
        score = sigmoid(np.dot(output_matrix[row_id], h))
        alpha = dtype.type(lr * (label - score))
        grad_h += alpha * output_matrix[row_id]
        output_matrix[row_id] += alpha * h

    # np.add.at accumulates per occurrence: a subword bucket that collides
    # within one word contributes once per n-gram, matching the loss.
    np.add.at(input_matrix, ids, grad_h / dtype.type(len(ids)))
