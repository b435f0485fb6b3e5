"""Unit tests for the reverse-mode AD engine.

Gradient correctness is checked against central finite differences; conv2d
is additionally checked against a quadruple-loop reference implementation.
"""

import numpy as np
import pytest

from advidrive import autodiff as ad
from advidrive.autodiff import (
    DomainError,
    NonFiniteError,
    ShapeMismatchError,
    Tape,
    Tensor,
    apply_binary,
    apply_unary,
    backward,
    conv2d,
    finite_diff_check,
)


def conv2d_reference(x, k, stride):
    """Direct quadruple-loop valid convolution, the oracle for conv2d."""
    h, w, c = x.shape
    kk, _, _, f = k.shape
    ho = (h - kk) // stride + 1
    wo = (w - kk) // stride + 1
    out = np.zeros((ho, wo, f))
    for i in range(ho):
        for j in range(wo):
            for cc in range(c):
                for ff in range(f):
                    patch = x[i * stride:i * stride + kk,
                              j * stride:j * stride + kk, cc]
                    out[i, j, ff] += np.sum(patch * k[:, :, cc, ff])
    return out


# ---------------------------------------------------------------------------
# forward semantics


def test_matmul_identity():
    rng = np.random.default_rng(0)
    a = Tensor(rng.normal(size=(3, 4)))
    eye = Tensor(np.eye(4))
    assert np.allclose(ad.matmul(a, eye).data, a.data)


def test_mul_elementwise_identity_and_values():
    x = Tensor([1.0, 2.0, 3.0])
    assert np.allclose(ad.mul_elementwise(x, Tensor(np.ones(3))).data, x.data)
    out = ad.mul_elementwise(x, Tensor([4.0, 5.0, 6.0]))
    assert np.allclose(out.data, [4.0, 10.0, 18.0])


def test_softmax_constant_rows_uniform():
    for c in (-3.0, 0.0, 7.5):
        out = ad.softmax_lastaxis(Tensor(np.full((2, 4), c)))
        assert np.allclose(out.data, 0.25)


def test_relu_and_sigmoid_values():
    assert np.allclose(ad.relu(Tensor([-1.0, 0.0, 2.0])).data, [0.0, 0.0, 2.0])
    assert ad.sigmoid(Tensor([0.0])).data[0] == pytest.approx(0.5)


def test_softmax_normalization_and_positivity():
    rng = np.random.default_rng(1)
    for _ in range(20):
        x = Tensor(rng.normal(scale=3.0, size=(3, 7)))
        y = ad.softmax_lastaxis(x).data
        assert np.all(y > 0)
        assert np.allclose(y.sum(axis=-1), 1.0, atol=1e-12)


def test_shape_mismatch_messages_name_both_shapes():
    a, b = Tensor(np.zeros((2, 3))), Tensor(np.zeros((4, 5)))
    with pytest.raises(ShapeMismatchError, match=r"matmul.*\(2, 3\).*\(4, 5\)"):
        ad.matmul(a, b)
    with pytest.raises(ShapeMismatchError, match="add"):
        ad.add(a, b)


def test_log_domain_error_identifies_index():
    with pytest.raises(DomainError, match="index 2"):
        ad.log(Tensor([1.0, 2.0, -1.0]))


def test_overflow_is_an_error_not_a_value():
    big = Tensor(np.full(3, 1e200))
    with pytest.raises(NonFiniteError, match="mul_elementwise"):
        ad.mul_elementwise(big, big)


def test_concat_axis_roundtrip():
    a = Tensor(np.arange(6.0).reshape(2, 3))
    b = Tensor(np.arange(6.0, 14.0).reshape(2, 4))
    out = ad.concat_axis(a, b, axis=1)
    assert out.shape == (2, 7)
    assert np.allclose(out.data[:, :3], a.data)
    with pytest.raises(ShapeMismatchError):
        ad.concat_axis(a, Tensor(np.zeros((3, 3))), axis=1)


# ---------------------------------------------------------------------------
# conv2d against the loop oracle


def test_conv2d_identity_kernel():
    rng = np.random.default_rng(2)
    x = Tensor(rng.normal(size=(5, 6, 1)))
    k = Tensor(np.ones((1, 1, 1, 1)))
    assert np.allclose(conv2d(x, k, 1).data[:, :, 0], x.data[:, :, 0])


def test_conv2d_summation_case():
    x = Tensor(np.arange(9.0).reshape(3, 3, 1))
    k = Tensor(np.ones((3, 3, 1, 1)))
    out = conv2d(x, k, 1)
    assert out.shape == (1, 1, 1)
    assert out.data[0, 0, 0] == pytest.approx(36.0)


def test_conv2d_matches_loop_reference():
    rng = np.random.default_rng(3)
    x = rng.uniform(-10, 10, size=(8, 8, 3))
    k = rng.uniform(-10, 10, size=(3, 3, 3, 4))
    for stride in (1, 2, 3):
        got = conv2d(Tensor(x), Tensor(k), stride).data
        want = conv2d_reference(x, k, stride)
        assert got.shape == want.shape
        assert np.max(np.abs(got - want)) < 1e-10


def test_conv2d_rejects_bad_geometry():
    x = Tensor(np.zeros((4, 4, 2)))
    with pytest.raises(ShapeMismatchError, match="exceeds"):
        conv2d(x, Tensor(np.zeros((5, 5, 2, 1))), 1)
    with pytest.raises(ShapeMismatchError, match="stride"):
        conv2d(x, Tensor(np.zeros((3, 3, 2, 1))), 0)


def test_pad2d_roundtrip_and_grad():
    rng = np.random.default_rng(4)
    x = Tensor(rng.normal(size=(3, 4, 2)), requires_grad=True)
    with Tape() as tape:
        padded = ad.pad2d(x, (1, 2, 0, 3))
        loss = ad.sum_all(ad.square(padded))
    assert padded.shape == (6, 7, 2)
    assert np.allclose(padded.data[1:4, 0:4, :], x.data)
    backward(loss, tape)
    assert np.allclose(x.grad, 2 * x.data)


# ---------------------------------------------------------------------------
# backward semantics


def test_backward_linear_case_all_ones():
    x = Tensor(np.arange(12.0).reshape(3, 4), requires_grad=True)
    with Tape() as tape:
        loss = ad.sum_all(x)
    backward(loss, tape)
    assert np.allclose(x.grad, 1.0)


def test_backward_quadratic_case():
    x = Tensor(np.arange(5.0), requires_grad=True)
    with Tape() as tape:
        loss = ad.sum_all(ad.mul_elementwise(x, x))
    backward(loss, tape)
    assert np.allclose(x.grad, 2 * x.data)


def test_backward_requires_scalar():
    x = Tensor(np.ones(3), requires_grad=True)
    with Tape() as tape:
        y = ad.square(x)
    with pytest.raises(ShapeMismatchError, match="scalar"):
        backward(y, tape)


def test_unused_node_gets_zero_grad():
    x = Tensor(np.ones(3), requires_grad=True)
    y = Tensor(np.ones(3), requires_grad=True)
    with Tape() as tape:
        _dead = ad.square(y)
        loss = ad.sum_all(x)
    backward(loss, tape)
    assert np.allclose(x.grad, 1.0)
    assert y.grad is not None and np.allclose(y.grad, 0.0)


def test_grad_accumulates_across_fanout():
    x = Tensor(np.array([2.0]), requires_grad=True)
    with Tape() as tape:
        y = ad.add(x, x)
        loss = ad.sum_all(y)
    backward(loss, tape)
    assert np.allclose(x.grad, 2.0)


def test_backward_deterministic_bit_identical():
    rng = np.random.default_rng(5)
    w = rng.normal(size=(4, 4))

    def run():
        t = Tensor(w.copy(), requires_grad=True)
        with Tape() as tape:
            loss = ad.sum_all(ad.tanh(ad.matmul(t, t)))
        backward(loss, tape)
        return t.grad.copy()

    g1, g2 = run(), run()
    assert np.array_equal(g1, g2)


def test_no_tape_means_no_recording():
    x = Tensor(np.ones(3), requires_grad=True)
    y = ad.square(x)  # outside any tape
    assert not y.requires_grad


# ---------------------------------------------------------------------------
# finite differences: every op kind on random small shapes

_BINARY_SHAPES = {
    "matmul": lambda rng: ((int(rng.integers(1, 4)), int(rng.integers(1, 4))),),
    "add": None,
    "mul_elementwise": None,
    "concat_axis": None,
}


def _rand_shape(rng, lo=1, hi=4):
    ndim = int(rng.integers(1, 3))
    return tuple(int(rng.integers(lo, hi + 1)) for _ in range(ndim))


def _fd_binary(kind, rng):
    if kind == "matmul":
        m, k_, n = (int(rng.integers(1, 4)) for _ in range(3))
        a = Tensor(rng.uniform(-2, 2, (m, k_)), requires_grad=True)
        b = Tensor(rng.uniform(-2, 2, (k_, n)), requires_grad=True)
        args = {}
    elif kind == "concat_axis":
        shape = _rand_shape(rng)
        axis = int(rng.integers(0, len(shape)))
        other = list(shape)
        other[axis] = int(rng.integers(1, 4))
        a = Tensor(rng.uniform(-2, 2, shape), requires_grad=True)
        b = Tensor(rng.uniform(-2, 2, tuple(other)), requires_grad=True)
        args = {"axis": axis}
    else:
        shape = _rand_shape(rng)
        a = Tensor(rng.uniform(-2, 2, shape), requires_grad=True)
        b = Tensor(rng.uniform(-2, 2, shape), requires_grad=True)
        args = {}

    def f():
        out = apply_binary(kind, a, b, **args)
        return ad.sum_all(ad.tanh(out))

    return f, [a, b]


def _fd_unary(kind, rng):
    shape = _rand_shape(rng)
    if kind == "log":
        data = rng.uniform(0.5, 3.0, shape)
    else:
        # sample away from 0: relu/abs kink there, and near-zero gradients
        # (e.g. d/dx x^4) drown in finite-difference truncation noise
        data = rng.uniform(0.05, 2.0, shape) * rng.choice([-1.0, 1.0], shape)
    a = Tensor(data, requires_grad=True)

    def f():
        out = apply_unary(kind, a)
        return ad.sum_all(ad.square(out))

    return f, [a]


@pytest.mark.parametrize("kind", sorted(ad._BINARY))
def test_finite_diff_binary_ops(kind):
    rng = np.random.default_rng(hash(kind) % 2**32)
    for _ in range(100):
        f, params = _fd_binary(kind, rng)
        assert finite_diff_check(f, params, eps=1e-5) < 1e-4


@pytest.mark.parametrize("kind", sorted(ad._UNARY))
def test_finite_diff_unary_ops(kind):
    rng = np.random.default_rng(hash(kind) % 2**32)
    for _ in range(100):
        f, params = _fd_unary(kind, rng)
        assert finite_diff_check(f, params, eps=1e-5) < 1e-4


def test_finite_diff_conv2d():
    rng = np.random.default_rng(6)
    for _ in range(100):
        h = int(rng.integers(3, 6))
        w = int(rng.integers(3, 6))
        c = int(rng.integers(1, 3))
        f_ = int(rng.integers(1, 3))
        k_ = int(rng.integers(1, min(h, w) + 1))
        stride = int(rng.integers(1, 3))
        if (h - k_) // stride + 1 < 1 or (w - k_) // stride + 1 < 1:
            continue
        x = Tensor(rng.uniform(-1, 1, (h, w, c)), requires_grad=True)
        ker = Tensor(rng.uniform(-1, 1, (k_, k_, c, f_)), requires_grad=True)

        def f():
            return ad.sum_all(ad.tanh(conv2d(x, ker, stride)))

        assert finite_diff_check(f, [x, ker], eps=1e-5) < 1e-4


def test_finite_diff_quadratic_is_exact():
    x = Tensor(np.array([1.0, -2.0, 3.0]), requires_grad=True)

    def f():
        return ad.sum_all(ad.square(x))

    assert finite_diff_check(f, [x], eps=1e-5) < 1e-9


def test_finite_diff_tanh_chain_depth5():
    rng = np.random.default_rng(7)
    x = Tensor(rng.uniform(-1, 1, (4,)), requires_grad=True)

    def f():
        t = x
        for _ in range(5):
            t = ad.tanh(t)
        return ad.sum_all(t)

    assert finite_diff_check(f, [x], eps=1e-5) < 1e-6


def test_finite_diff_gather_rows():
    rng = np.random.default_rng(8)
    table = Tensor(rng.uniform(-1, 1, (5, 3)), requires_grad=True)
    ids = [0, 2, 2, 4]

    def f():
        return ad.sum_all(ad.square(ad.gather_rows(table, ids)))

    assert finite_diff_check(f, [table], eps=1e-5) < 1e-4


def test_finite_diff_rejects_bad_eps():
    x = Tensor(np.ones(2), requires_grad=True)
    with pytest.raises(ad.AutodiffError):
        finite_diff_check(lambda: ad.sum_all(x), [x], eps=0.0)
