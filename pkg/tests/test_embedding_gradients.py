"""Finite-difference oracle for the skipgram pair loss and update step."""

import numpy as np
import pytest

from tweetsift.embedding.gradients import apply_pair_update, pair_gradients, pair_loss

EPS = 1e-4


def numerical_gradients(input_matrix, output_matrix, input_ids, target_id, negative_ids):
    """Central differences of pair_loss, one parameter at a time."""

    def loss():
        return pair_loss(input_matrix, output_matrix, input_ids, target_id, negative_ids)

    def central_difference(matrix, row, d):
        # divide by the step actually stored: on float32 parameters the
        # nominal eps rounds when written back, and that rounding would
        # otherwise dominate the comparison
        orig = float(matrix[row, d])
        matrix[row, d] = orig + EPS
        hi = float(matrix[row, d])
        up = loss()
        matrix[row, d] = orig - EPS
        lo = float(matrix[row, d])
        down = loss()
        matrix[row, d] = orig
        return (up - down) / (hi - lo)

    grad_in = np.zeros_like(input_matrix, dtype=np.float64)
    for row in set(input_ids):
        for d in range(input_matrix.shape[1]):
            grad_in[row, d] = central_difference(input_matrix, row, d)

    grad_out = np.zeros_like(output_matrix, dtype=np.float64)
    for row in set([target_id, *negative_ids]):
        for d in range(output_matrix.shape[1]):
            grad_out[row, d] = central_difference(output_matrix, row, d)

    return grad_in, grad_out


def max_relative_error(analytic, numeric):
    scale = np.maximum(np.abs(numeric), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / scale))


def build_toy(dtype, seed=3):
    rng = np.random.default_rng(seed)
    # 4-word vocabulary plus 6 subword buckets, dim 5
    input_matrix = rng.normal(0, 0.5, size=(10, 5)).astype(dtype)
    output_matrix = rng.normal(0, 0.5, size=(4, 5)).astype(dtype)
    input_ids = [1, 5, 7, 9]  # word row + three subword rows
    target_id = 2
    negative_ids = [0, 3, 3]  # includes a repeat
    return input_matrix, output_matrix, input_ids, target_id, negative_ids


@pytest.mark.parametrize("dtype,tol", [(np.float64, 1e-6), (np.float32, 1e-4)])
def test_pair_gradients_match_finite_differences(dtype, tol):
    inp, out, ids, target, negs = build_toy(dtype)
    grad_row, grad_out = pair_gradients(inp, out, ids, target, negs)
    num_in, num_out = numerical_gradients(inp, out, ids, target, negs)

    for row in ids:  # distinct rows here, one occurrence each
        assert max_relative_error(np.asarray(grad_row, np.float64), num_in[row]) < tol
    for row_id, grad in grad_out.items():
        assert max_relative_error(np.asarray(grad, np.float64), num_out[row_id]) < tol


def test_duplicate_input_rows_accumulate():
    inp, out, _, target, negs = build_toy(np.float64)
    ids = [1, 5, 5]  # bucket collision: row 5 occurs twice
    grad_row, _ = pair_gradients(inp, out, ids, target, negs)
    num_in, _ = numerical_gradients(inp, out, ids, target, negs)
    assert max_relative_error(2 * np.asarray(grad_row), num_in[5]) < 1e-6
    assert max_relative_error(np.asarray(grad_row), num_in[1]) < 1e-6


def test_update_step_descends_loss():
    inp, out, ids, target, negs = build_toy(np.float64, seed=11)
    before = pair_loss(inp, out, ids, target, negs)
    apply_pair_update(inp, out, ids, target, negs, lr=0.05)
    after = pair_loss(inp, out, ids, target, negs)
    assert after < before


def test_update_step_equals_gradient_step():
    # distinct output rows: the sequential update then coincides with one
    # exact gradient step
    inp, out, ids, target, _ = build_toy(np.float64, seed=5)
    negs = [0, 3]
    lr = 0.05
    grad_row, grad_out_ref = pair_gradients(inp, out, ids, target, negs)
    inp2, out2 = inp.copy(), out.copy()
    apply_pair_update(inp2, out2, ids, target, negs, lr)
    for row in ids:
        np.testing.assert_allclose(inp2[row], inp[row] - lr * grad_row, rtol=1e-9)
    for row_id, grad in grad_out_ref.items():
        np.testing.assert_allclose(out2[row_id], out[row_id] - lr * grad, rtol=1e-9)
