# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled skipgram negative-sampling kernel.

Mirrors _sgns_python.train_epoch decision for decision: identical LCG,
identical draw order, identical update order. Only float rounding differs.
"""

from libc.math cimport exp, log
from libc.stdint cimport int32_t, int64_t, uint64_t

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef uint64_t LCG_MULT = 6364136223846793005u
cdef uint64_t LCG_ADD = 1442695040888963407u
cdef int MAX_NEGATIVE_REDRAWS = 64


def train_epoch(
    cnp.float32_t[:, ::1] input_matrix,
    cnp.float32_t[:, ::1] output_matrix,
    cnp.int32_t[::1] tokens,
    cnp.int64_t[::1] line_offsets,
    cnp.int32_t[::1] row_ids,
    cnp.int64_t[::1] row_offsets,
    cnp.int32_t[::1] negative_table,
    cnp.float64_t[::1] keep_prob,
    int window,
    int negatives,
    double lr0,
    long long tokens_done_in,
    long long tokens_total,
    unsigned long long rng_state,
    bint subsample,
):
    cdef int dim = input_matrix.shape[1]
    cdef int64_t tokens_done = tokens_done_in
    cdef uint64_t state = rng_state
    cdef int64_t table_size = negative_table.shape[0]
    cdef double loss_sum = 0.0
    cdef int64_t pairs = 0

    cdef cnp.int32_t[::1] kept = np.empty(_max_line_length(line_offsets), dtype=np.int32)
    cdef cnp.float32_t[::1] hidden = np.zeros(dim, dtype=np.float32)
    cdef cnp.float32_t[::1] grad_h = np.zeros(dim, dtype=np.float32)

    cdef int64_t line_index, start, end, t, rs, re
    cdef int n, pos, boundary, offset, ctx, k, attempt, d, r
    cdef int32_t tid, center, target, candidate, nid, row
    cdef double lr, u, z, score, inv_rows
    cdef float alpha

    for line_index in range(line_offsets.shape[0] - 1):
        start = line_offsets[line_index]
        end = line_offsets[line_index + 1]
        if start == end:
            continue
        lr = lr0 * max(0.0, 1.0 - (<double> tokens_done) / (<double> tokens_total))

        n = 0
        for t in range(start, end):
            tid = tokens[t]
            tokens_done += 1
            if subsample:
                state = state * LCG_MULT + LCG_ADD
                u = <double> ((state >> 32) & 0xFFFFFF) / 16777216.0
                if u > keep_prob[tid]:
                    continue
            kept[n] = tid
            n += 1

        for pos in range(n):
            state = state * LCG_MULT + LCG_ADD
            boundary = 1 + <int> ((state >> 32) % <uint64_t> window)
            center = kept[pos]
            rs = row_offsets[center]
            re = row_offsets[center + 1]
            inv_rows = 1.0 / <double> (re - rs)
            for offset in range(-boundary, boundary + 1):
                ctx = pos + offset
                if offset == 0 or ctx < 0 or ctx >= n:
                    continue
                target = kept[ctx]

                # hidden = mean of the center word's input rows
                for d in range(dim):
                    hidden[d] = 0.0
                for r in range(rs, re):
                    row = row_ids[r]
                    for d in range(dim):
                        hidden[d] += input_matrix[row, d]
                for d in range(dim):
                    hidden[d] = <float> (hidden[d] * inv_rows)
                    grad_h[d] = 0.0

                # positive target
                z = 0.0
                for d in range(dim):
                    z += output_matrix[target, d] * hidden[d]
                score = 1.0 / (1.0 + exp(-z))
                loss_sum -= log(max(score, 1e-12))
                alpha = <float> (lr * (1.0 - score))
                for d in range(dim):
                    grad_h[d] += alpha * output_matrix[target, d]
                    output_matrix[target, d] += alpha * hidden[d]

                for k in range(negatives):
                    candidate = target
                    for attempt in range(MAX_NEGATIVE_REDRAWS):
                        state = state * LCG_MULT + LCG_ADD
                        candidate = negative_table[(state >> 32) % <uint64_t> table_size]
                        if candidate != target:
                            break
                    nid = candidate
                    z = 0.0
                    for d in range(dim):
                        z += output_matrix[nid, d] * hidden[d]
                    score = 1.0 / (1.0 + exp(-z))
                    loss_sum -= log(max(1.0 - score, 1e-12))
                    alpha = <float> (lr * (0.0 - score))
                    for d in range(dim):
                        grad_h[d] += alpha * output_matrix[nid, d]
                        output_matrix[nid, d] += alpha * hidden[d]

                alpha = <float> inv_rows
                for r in range(rs, re):
                    row = row_ids[r]
                    for d in range(dim):
                        input_matrix[row, d] += grad_h[d] * alpha
                pairs += 1

    return int(state), int(tokens_done), float(loss_sum), int(pairs)


cdef int64_t _max_line_length(cnp.int64_t[::1] offsets):
    cdef int64_t best = 1
    cdef int64_t i
    for i in range(offsets.shape[0] - 1):
        if offsets[i + 1] - offsets[i] > best:
            best = offsets[i + 1] - offsets[i]
    return best
