"""Pure-numpy skipgram negative-sampling kernel.

Fallback for the compiled kernel, with the same decision stream: both
backends draw subsampling, window-size and negative choices from one 64-bit
LCG advanced in the same order, so they visit identical (center, context,
negatives) triples. Floating-point rounding still differs slightly between
backends because numpy reduces in a different order than the C loops.

The LCG is Knuth's MMIX multiplier; draws take the high 32 bits:

    state' = state * 6364136223846793005 + 1442695040888963407  (mod 2^64)
    window draw    = 1 + (state' >> 32) % window
    uniform [0,1)  = ((state' >> 32) & 0xFFFFFF) / 2^24
    negative draw  = table[(state' >> 32) % len(table)]
"""

from __future__ import annotations

import numpy as np

LCG_MULT = 6364136223846793005
LCG_ADD = 1442695040888963407
_MASK64 = (1 << 64) - 1
MAX_NEGATIVE_REDRAWS = 64


def train_epoch(
    input_matrix: np.ndarray,
    output_matrix: np.ndarray,
    tokens: np.ndarray,
    line_offsets: np.ndarray,
    row_ids: np.ndarray,
    row_offsets: np.ndarray,
    negative_table: np.ndarray,
    keep_prob: np.ndarray,
    window: int,
    negatives: int,
    lr0: float,
    tokens_done: int,
    tokens_total: int,
    rng_state: int,
    subsample: bool,
) -> tuple[int, int, float, int]:
    """One pass over the encoded corpus; mutates the matrices in place.

    Returns (rng_state, tokens_done, loss_sum, pair_count).
    """
    dtype = input_matrix.dtype
    table_size = len(negative_table)
    loss_sum = 0.0
    pairs = 0
    state = rng_state & _MASK64

    for line_index in range(len(line_offsets) - 1):
        start, end = line_offsets[line_index], line_offsets[line_index + 1]
        if start == end:
            continue
        lr = lr0 * max(0.0, 1.0 - tokens_done / tokens_total)

        kept = []
        for tid in tokens[start:end]:
            tokens_done += 1
            if subsample:
                state = (state * LCG_MULT + LCG_ADD) & _MASK64
                u = ((state >> 32) & 0xFFFFFF) / 16777216.0
                if u > keep_prob[tid]:
                    continue
            kept.append(int(tid))

        n = len(kept)
        for pos in range(n):
            state = (state * LCG_MULT + LCG_ADD) & _MASK64
            boundary = 1 + (state >> 32) % window
            center = kept[pos]
            rows = row_ids[row_offsets[center] : row_offsets[center + 1]]
            for offset in range(-boundary, boundary + 1):
                ctx = pos + offset
                if offset == 0 or ctx < 0 or ctx >= n:
                    continue
                target = kept[ctx]

                negs = np.empty(negatives, dtype=np.int64)
                for k in range(negatives):
                    for _ in range(MAX_NEGATIVE_REDRAWS):
                        state = (state * LCG_MULT + LCG_ADD) & _MASK64
                        candidate = int(negative_table[(state >> 32) % table_size])
                        if candidate != target:
                            break
                    negs[k] = candidate

                h = input_matrix[rows].mean(axis=0)
                grad_h = np.zeros_like(h)

                z = float(np.dot(output_matrix[target], h))
                score = 1.0 / (1.0 + np.exp(-z))
                loss_sum -= np.log(max(score, 1e-12))
                alpha = dtype.type(lr * (1.0 - score))
                grad_h += alpha * output_matrix[target]
                output_matrix[target] += alpha * h

                for nid in negs:
                    z = float(np.dot(output_matrix[nid], h))
                    score = 1.0 / (1.0 + np.exp(-z))
                    loss_sum -= np.log(max(1.0 - score, 1e-12))
                    alpha = dtype.type(lr * (0.0 - score))
                    grad_h += alpha * output_matrix[nid]
                    output_matrix[nid] += alpha * h

                np.add.at(input_matrix, rows, grad_h / dtype.type(len(rows)))
                pairs += 1

    return state, tokens_done, loss_sum, pairs
