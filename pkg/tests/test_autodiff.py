"""Tape primitives checked against central finite differences.

Every op gets the same treatment: run forward on a recorded tape, reduce
to a scalar, backward, then perturb each input entry by +/-eps and
compare. The finite-difference quotient is the oracle; nothing here
trusts the backward rules being tested.
"""

import numpy as np
import numpy.testing as npt
import pytest

from tabletext.autodiff import (GradCheckReport, Parameter, ShapeError, Tape,
                                Tensor, grad_check)

EPS = 1e-6


def numeric_grad(build, inputs):
    """Central differences of a scalar-valued build(list-of-arrays)."""
    grads = []
    for which, arr in enumerate(inputs):
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gf = g.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + EPS
            lp = build([a for a in inputs])
            flat[i] = keep - EPS
            lm = build([a for a in inputs])
            flat[i] = keep
            gf[i] = (lp - lm) / (2 * EPS)
        grads.append(g)
    return grads


def check_op(make_tensors, forward, seed):
    """Backward pass of `forward` vs finite differences on its inputs."""
    rng = np.random.default_rng(seed)
    arrays = make_tensors(rng)

    def scalar_of(arrs):
        tape = Tape(recording=False)
        tensors = [Tensor(a) for a in arrs]
        out = forward(tape, tensors)
        # deterministic weighting so every output entry matters
        w = np.arange(1, out.data.size + 1, dtype=np.float64).reshape(out.data.shape)
        return float((out.data * w).sum())

    tape = Tape()
    tensors = [Tensor(a) for a in arrays]
    out = forward(tape, tensors)
    w = np.arange(1, out.data.size + 1, dtype=np.float64).reshape(out.data.shape)
    loss = tape.mul(out, Tensor(w))
    loss = tape.sum(loss)
    tape.backward(loss)

    expected = numeric_grad(scalar_of, arrays)
    for t, e in zip(tensors, expected):
        npt.assert_allclose(t.grad, e, rtol=1e-6, atol=1e-8)


@pytest.mark.parametrize("seed", range(3))
def test_matmul_2d_1d(seed):
    check_op(lambda rng: [rng.standard_normal((4, 3)), rng.standard_normal(3)],
             lambda tape, ts: tape.matmul(ts[0], ts[1]), seed)


@pytest.mark.parametrize("seed", range(3))
def test_matmul_1d_2d(seed):
    check_op(lambda rng: [rng.standard_normal(4), rng.standard_normal((4, 3))],
             lambda tape, ts: tape.matmul(ts[0], ts[1]), seed)


@pytest.mark.parametrize("seed", range(3))
def test_matmul_2d_2d(seed):
    check_op(lambda rng: [rng.standard_normal((2, 4)), rng.standard_normal((4, 3))],
             lambda tape, ts: tape.matmul(ts[0], ts[1]), seed)


def test_add_and_mul_elementwise():
    check_op(lambda rng: [rng.standard_normal(5), rng.standard_normal(5)],
             lambda tape, ts: tape.add(ts[0], ts[1]), 0)
    check_op(lambda rng: [rng.standard_normal(5), rng.standard_normal(5)],
             lambda tape, ts: tape.mul(ts[0], ts[1]), 1)


def test_mul_scalar_broadcast():
    check_op(lambda rng: [rng.standard_normal(()), rng.standard_normal(5)],
             lambda tape, ts: tape.mul(ts[0], ts[1]), 2)
    check_op(lambda rng: [rng.standard_normal(6), rng.standard_normal(())],
             lambda tape, ts: tape.mul(ts[0], ts[1]), 3)


def test_affine():
    check_op(lambda rng: [rng.standard_normal(7)],
             lambda tape, ts: tape.affine(ts[0], -0.7, 0.3), 0)


@pytest.mark.parametrize("seed", range(3))
def test_sigmoid_tanh(seed):
    check_op(lambda rng: [rng.standard_normal(6) * 3],
             lambda tape, ts: tape.sigmoid(ts[0]), seed)
    check_op(lambda rng: [rng.standard_normal(6) * 3],
             lambda tape, ts: tape.tanh(ts[0]), seed)


def test_sigmoid_extreme_inputs_stay_finite():
    tape = Tape(recording=False)
    y = tape.sigmoid(Tensor([-1e4, -50.0, 0.0, 50.0, 1e4]))
    assert np.all(np.isfinite(y.data))
    npt.assert_allclose(y.data[[0, -1]], [0.0, 1.0], atol=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_softmax(seed):
    check_op(lambda rng: [rng.standard_normal(6) * 2],
             lambda tape, ts: tape.softmax(ts[0]), seed)


def test_softmax_normalizes_and_shifts():
    tape = Tape(recording=False)
    y = tape.softmax(Tensor([1000.0, 1001.0, 999.0]))
    assert np.isfinite(y.data).all()
    npt.assert_allclose(y.data.sum(), 1.0, atol=1e-12)


def test_softmax_mask_zeros_and_grads():
    mask = np.array([True, False, True, False])
    check_op(lambda rng: [rng.standard_normal(4)],
             lambda tape, ts: tape.softmax(ts[0], mask=mask), 0)
    tape = Tape()
    x = Tensor([1.0, 5.0, 2.0, 5.0])
    y = tape.softmax(x, mask=mask)
    assert y.data[1] == 0.0 and y.data[3] == 0.0
    npt.assert_allclose(y.data.sum(), 1.0, atol=1e-12)
    loss = tape.sum(y)
    tape.backward(loss)
    assert x.grad[1] == 0.0 and x.grad[3] == 0.0


def test_softmax_fully_masked_is_error():
    tape = Tape()
    with pytest.raises(ValueError):
        tape.softmax(Tensor([1.0, 2.0]), mask=np.array([False, False]))


@pytest.mark.parametrize("seed", range(3))
def test_log_softmax(seed):
    check_op(lambda rng: [rng.standard_normal(8) * 4],
             lambda tape, ts: tape.log_softmax(ts[0]), seed)


def test_log_softmax_matches_log_of_softmax():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(9)
    tape = Tape(recording=False)
    npt.assert_allclose(tape.log_softmax(Tensor(x)).data,
                        np.log(tape.softmax(Tensor(x)).data), atol=1e-12)


def test_lookup():
    check_op(lambda rng: [rng.standard_normal((5, 3))],
             lambda tape, ts: tape.lookup(ts[0], 2), 0)


def test_lookup_accumulates_repeated_rows():
    tape = Tape()
    emb = Tensor(np.ones((4, 2)))
    a = tape.lookup(emb, 1)
    b = tape.lookup(emb, 1)
    loss = tape.sum(tape.add(a, b))
    tape.backward(loss)
    npt.assert_allclose(emb.grad[1], [2.0, 2.0])
    npt.assert_allclose(emb.grad[0], [0.0, 0.0])


def test_stack_concat_slice_pick():
    check_op(lambda rng: [rng.standard_normal(3), rng.standard_normal(3)],
             lambda tape, ts: tape.stack_rows(ts), 0)
    check_op(lambda rng: [rng.standard_normal(3), rng.standard_normal(2)],
             lambda tape, ts: tape.concat(ts), 1)
    check_op(lambda rng: [rng.standard_normal(6)],
             lambda tape, ts: tape.slice1d(ts[0], 1, 4), 2)
    check_op(lambda rng: [rng.standard_normal(5)],
             lambda tape, ts: tape.pick(ts[0], 3), 3)


def test_scatter_add_sums_duplicates():
    check_op(lambda rng: [rng.standard_normal(5), rng.standard_normal(4)],
             lambda tape, ts: tape.scatter_add(ts[0], np.array([0, 2, 2, 4]), ts[1]), 0)
    tape = Tape(recording=False)
    out = tape.scatter_add(Tensor(np.zeros(3)), np.array([1, 1]), Tensor([2.0, 3.0]))
    npt.assert_allclose(out.data, [0.0, 5.0, 0.0])


def test_submatrix_with_repeated_ids():
    rows = np.array([0, 2, 2])
    cols = np.array([1, 1, 0])
    check_op(lambda rng: [rng.standard_normal((4, 4))],
             lambda tape, ts: tape.submatrix(ts[0], rows, cols), 0)
    # forward picks the right block
    m = Tensor(np.arange(16.0).reshape(4, 4))
    out = Tape(recording=False).submatrix(m, rows, cols)
    npt.assert_allclose(out.data, m.data[np.ix_(rows, cols)])


def test_sum_dot_sum_squares():
    check_op(lambda rng: [rng.standard_normal((3, 4))],
             lambda tape, ts: tape.sum(ts[0]), 0)
    check_op(lambda rng: [rng.standard_normal(5), rng.standard_normal(5)],
             lambda tape, ts: tape.dot(ts[0], ts[1]), 1)
    check_op(lambda rng: [rng.standard_normal((4, 2))],
             lambda tape, ts: tape.sum_squares(ts[0]), 2)


# ---- tape semantics ------------------------------------------------


def test_reuse_accumulates_gradient():
    tape = Tape()
    x = Tensor([1.0, 2.0])
    a = tape.mul(x, x)            # x used twice here
    loss = tape.add(tape.sum(a), tape.sum(x))
    tape.backward(loss)
    npt.assert_allclose(x.grad, 2 * x.data + 1.0)


def test_double_backward_accumulates():
    tape = Tape()
    x = Tensor(3.0)
    y = tape.mul(x, x)
    tape.backward(y)
    tape.backward(y)
    npt.assert_allclose(x.grad, 2 * 2 * 3.0)


def test_backward_on_empty_tape_is_noop():
    tape = Tape()
    x = Tensor(5.0)
    tape.backward(x)  # nothing recorded, nothing to replay


def test_backward_rejects_nonscalar_root():
    tape = Tape()
    with pytest.raises(ShapeError):
        tape.backward(Tensor([1.0, 2.0]))


def test_non_recording_tape_keeps_no_records():
    tape = Tape(recording=False)
    x = Tensor([1.0, 2.0])
    y = tape.sum(tape.mul(x, x))
    assert len(tape) == 0
    tape.backward(y)
    npt.assert_allclose(x.grad, 0.0)


def test_shape_errors():
    tape = Tape()
    with pytest.raises(ShapeError):
        tape.add(Tensor([1.0]), Tensor([1.0, 2.0]))
    with pytest.raises(ShapeError):
        tape.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones(2)))
    with pytest.raises(ShapeError):
        tape.matmul(Tensor(np.ones(3)), Tensor(np.ones(3)))
    with pytest.raises(ShapeError):
        tape.dot(Tensor(np.ones(3)), Tensor(np.ones(4)))
    with pytest.raises(IndexError):
        tape.pick(Tensor(np.ones(3)), 7)


# ---- grad_check itself ---------------------------------------------


def _tiny_loss(params):
    W, b = params

    def loss_fn(tape):
        h = tape.tanh(tape.add(tape.matmul(W, Tensor([0.3, -0.2, 0.9])), b))
        return tape.sum_squares(h)

    return loss_fn


def test_grad_check_passes_on_correct_graph():
    rng = np.random.default_rng(7)
    W = Parameter("W", rng.standard_normal((4, 3)) * 0.5)
    b = Parameter("b", rng.standard_normal(4) * 0.1)
    report = grad_check(_tiny_loss([W, b]), [W, b], step=1e-5)
    assert isinstance(report, GradCheckReport)
    assert report.entries_checked == 16
    assert report.max_rel_error < 1e-7
    assert set(report.per_parameter) == {"W", "b"}


def test_grad_check_detects_wrong_gradient():
    rng = np.random.default_rng(3)
    W = Parameter("W", rng.standard_normal((2, 3)))

    def bad_loss(tape):
        out = tape.sum_squares(W)
        # sabotage: scale the analytic gradient without changing the value
        if tape.recording:
            W.grad[...] -= 0.5  # pre-charge so backward lands off target
        return out

    report = grad_check(bad_loss, [W], step=1e-5)
    assert report.max_rel_error > 1e-2


def test_grad_check_sampling_is_deterministic():
    rng = np.random.default_rng(5)
    W = Parameter("W", rng.standard_normal((20, 20)) * 0.3)
    b = Parameter("b", np.zeros(20))

    def loss_fn(tape):
        h = tape.sigmoid(tape.add(tape.matmul(W, Tensor(np.linspace(-1, 1, 20))), b))
        return tape.sum(h)

    r1 = grad_check(loss_fn, [W, b], sample=25, seed=11)
    r2 = grad_check(loss_fn, [W, b], sample=25, seed=11)
    assert r1.entries_checked == r2.entries_checked == 25 + 20
    assert r1.max_rel_error == r2.max_rel_error
    assert r1.max_rel_error < 1e-7


def test_grad_check_reports_nonfinite_perturbation():
    p = Parameter("p", np.array([0.0]))

    def loss_fn(tape):
        # log of p: finite at 0+eps only on one side
        val = p.data[0]
        if val <= 0:
            return Tensor(0.0) if val == 0.0 else Tensor(np.nan)
        return Tensor(np.nan)

    with pytest.raises(ValueError, match="p\\[0\\]"):
        grad_check(loss_fn, [p], step=1e-5)
