import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ader.approximator import (
    IDENTITY, RELU, TANH, AdamState, DivergenceError, MlpParams, ShapeError, adam_init, adam_step,
    backward, forward, init_mlp, load_params, save_params, soft_update,
)


def naive_forward(params, x):
    """Scalar loops, written independently of the vectorised path."""
    h = list(map(float, x))
    for w, b, act in zip(params.weights, params.biases, params.activations):
        out = []
        for i in range(w.shape[0]):
            z = b[i] + sum(w[i, j] * h[j] for j in range(w.shape[1]))
            out.append(max(z, 0.0) if act == RELU else math.tanh(z) if act == TANH else z)
        h = out
    return np.array(h)


def finite_difference_grads(params, x, upstream, h=1e-5):
    arrays = [a.copy() for a in params.arrays()]
    grads = []
    for k, a in enumerate(arrays):
        g = np.zeros_like(a)
        for idx in np.ndindex(a.shape):
            orig = a[idx]
            a[idx] = orig + h
            plus = float(upstream @ forward(params.with_arrays(arrays), x))
            a[idx] = orig - h
            minus = float(upstream @ forward(params.with_arrays(arrays), x))
            a[idx] = orig
            g[idx] = (plus - minus) / (2 * h)
        grads.append(g)
    return grads


def rel_err(a, b):
    return np.max(np.abs(a - b) / np.maximum(1e-6, np.abs(a) + np.abs(b)))


def single_layer(w, b, act):
    return MlpParams([np.array(w, dtype=float)], [np.array(b, dtype=float)], [act])


class TestForward:
    def test_identity_network(self):
        p = single_layer(np.eye(2), [0, 0], IDENTITY)
        np.testing.assert_array_equal(forward(p, [0.3, -0.7]), [0.3, -0.7])

    def test_zero_tanh_layer(self):
        p = single_layer(np.zeros((3, 2)), np.zeros(3), TANH)
        np.testing.assert_array_equal(forward(p, [5.0, -2.0]), np.zeros(3))

    def test_matches_naive_loops(self):
        p = init_mlp([3, 5, 2], [RELU, TANH], np.random.default_rng(42))
        x = np.random.default_rng(1).normal(size=3)
        np.testing.assert_allclose(forward(p, x), naive_forward(p, x), rtol=0, atol=1e-12)

    def test_batch_rows_match_single(self):
        p = init_mlp([3, 8, 2], [RELU, IDENTITY], np.random.default_rng(0))
        X = np.random.default_rng(1).normal(size=(4, 3))
        out = forward(p, X)
        for i in range(4):
            np.testing.assert_allclose(out[i], forward(p, X[i]), atol=1e-14)

    def test_pure(self):
        p = init_mlp([3, 8, 2], [RELU, TANH], np.random.default_rng(0))
        x = np.array([0.1, 0.2, 0.3])
        assert forward(p, x).tobytes() == forward(p, x).tobytes()

    def test_tanh_bounded(self):
        p = init_mlp([2, 4, 3], [RELU, TANH], np.random.default_rng(0))
        out = forward(p, np.random.default_rng(0).normal(scale=100, size=(50, 2)))
        assert np.all(np.abs(out) <= 1.0)

    def test_dimension_mismatch_names_layer(self):
        p = init_mlp([3, 4, 1], [RELU, IDENTITY], np.random.default_rng(0))
        with pytest.raises(ShapeError, match="layer 0"):
            forward(p, [1.0, 2.0])

    def test_unchained_layers_rejected(self):
        with pytest.raises(ShapeError, match="layer 1"):
            MlpParams([np.zeros((4, 3)), np.zeros((1, 5))], [np.zeros(4), np.zeros(1)], [RELU, IDENTITY])


class TestBackward:
    def test_linear_layer_calculus(self):
        W = np.array([[1.0, 2.0], [3.0, 4.0]])
        p = single_layer(W, [0.5, -0.5], IDENTITY)
        x = np.array([0.3, -0.7])
        grads, gx = backward(p, x, np.array([1.0, 0.0]))
        np.testing.assert_array_equal(grads.weights[0][0], x)
        np.testing.assert_array_equal(grads.weights[0][1], [0.0, 0.0])
        np.testing.assert_array_equal(grads.biases[0], [1.0, 0.0])
        np.testing.assert_array_equal(gx, W[0])

    def test_zero_upstream(self):
        p = init_mlp([3, 6, 2], [RELU, TANH], np.random.default_rng(3))
        grads, gx = backward(p, np.ones(3), np.zeros(2))
        assert all(not a.any() for a in grads.arrays())
        assert not gx.any()

    def test_three_layer_relu_finite_differences(self):
        p = init_mlp([4, 6, 5, 2], [RELU, RELU, IDENTITY], np.random.default_rng(7))
        rng = np.random.default_rng(8)
        x, up = rng.normal(size=4), rng.normal(size=2)
        grads, _ = backward(p, x, up)
        for got, want in zip(grads.arrays(), finite_difference_grads(p, x, up)):
            assert rel_err(got, want) < 1e-4

    def test_input_gradient_finite_differences(self):
        p = init_mlp([3, 7, 1], [TANH, IDENTITY], np.random.default_rng(2))
        x = np.array([0.2, -0.4, 0.9])
        _, gx = backward(p, x, np.array([1.0]))
        h = 1e-6
        fd = [(forward(p, x + h * e)[0] - forward(p, x - h * e)[0]) / (2 * h) for e in np.eye(3)]
        np.testing.assert_allclose(gx, fd, rtol=1e-6)

    def test_batched_gradient_is_sum_of_singles(self):
        p = init_mlp([3, 5, 2], [RELU, TANH], np.random.default_rng(5))
        rng = np.random.default_rng(6)
        X, U = rng.normal(size=(4, 3)), rng.normal(size=(4, 2))
        batch_grads, _ = backward(p, X, U)
        singles = [backward(p, X[i], U[i])[0].arrays() for i in range(4)]
        for k, g in enumerate(batch_grads.arrays()):
            np.testing.assert_allclose(g, sum(s[k] for s in singles), atol=1e-12)

    def test_upstream_shape_checked(self):
        p = init_mlp([3, 5, 2], [RELU, TANH], np.random.default_rng(5))
        with pytest.raises(ShapeError):
            backward(p, np.ones(3), np.ones(3))


class TestAdam:
    def test_first_step_is_minus_lr_sign(self):
        p = single_layer([[0.0]], [0.0], IDENTITY)
        g = single_layer([[1.0]], [1.0], IDENTITY)
        new, state = adam_step(p, g, adam_init(p), 3e-4)
        # closed form on step 1: -lr * g / (|g| + eps)
        expected = -3e-4 * 1.0 / (1.0 + 1e-8)
        assert new.weights[0][0, 0] == pytest.approx(expected, abs=1e-15)
        assert state.step == 1

    def test_zero_gradient_is_noop(self):
        p = init_mlp([2, 3, 1], [RELU, IDENTITY], np.random.default_rng(0))
        zero = p.with_arrays([np.zeros_like(a) for a in p.arrays()])
        new, _ = adam_step(p, zero, adam_init(p), 1e-3)
        for a, b in zip(p.arrays(), new.arrays()):
            np.testing.assert_array_equal(a, b)

    def test_two_steps_match_scalar_recurrence(self):
        lr, b1, b2, eps = 1e-2, 0.9, 0.999, 1e-8
        p = single_layer([[0.5]], [0.0], IDENTITY)
        g = single_layer([[1.0]], [1.0], IDENTITY)
        state = adam_init(p)
        for _ in range(2):
            p, state = adam_step(p, g, state, lr)
        x, m, v = 0.5, 0.0, 0.0
        for t in (1, 2):
            m = b1 * m + (1 - b1) * 1.0
            v = b2 * v + (1 - b2) * 1.0
            x -= lr * (m / (1 - b1**t)) / (math.sqrt(v / (1 - b2**t)) + eps)
        assert abs(p.weights[0][0, 0] - x) < 1e-12
        assert state.step == 2

    def test_lr_zero_identity(self):
        p = init_mlp([2, 3, 1], [RELU, IDENTITY], np.random.default_rng(0))
        g = init_mlp([2, 3, 1], [RELU, IDENTITY], np.random.default_rng(1))
        new, _ = adam_step(p, g, adam_init(p), 0.0)
        for a, b in zip(p.arrays(), new.arrays()):
            np.testing.assert_array_equal(a, b)

    def test_nonfinite_gradient_raises(self):
        p = single_layer([[0.0]], [0.0], IDENTITY)
        g = single_layer([[np.nan]], [0.0], IDENTITY)
        with pytest.raises(DivergenceError):
            adam_step(p, g, adam_init(p), 1e-3)

    def test_inputs_not_mutated_and_second_moment_nonnegative(self):
        p = init_mlp([2, 3, 1], [RELU, IDENTITY], np.random.default_rng(0))
        g = init_mlp([2, 3, 1], [RELU, IDENTITY], np.random.default_rng(1))
        before = p.flat().copy()
        state = adam_init(p)
        _, new_state = adam_step(p, g, state, 1e-3)
        np.testing.assert_array_equal(p.flat(), before)
        assert state.step == 0
        assert all((v >= 0).all() for v in new_state.v)


class TestSoftUpdate:
    def test_table_tau(self):
        t = single_layer([[0.0]], [0.0], IDENTITY)
        o = single_layer([[1.0]], [1.0], IDENTITY)
        assert soft_update(t, o, 0.005).weights[0][0, 0] == 0.005

    def test_tau_one_copies(self):
        t = init_mlp([3, 4, 1], [RELU, IDENTITY], np.random.default_rng(0))
        o = init_mlp([3, 4, 1], [RELU, IDENTITY], np.random.default_rng(1))
        new = soft_update(t, o, 1.0)
        x = np.array([0.1, 0.5, -0.3])
        assert forward(new, x).tobytes() == forward(o, x).tobytes()

    def test_geometric_decay(self):
        tau = 0.005
        t = single_layer([[0.0]], [0.0], IDENTITY)
        o = single_layer([[1.0]], [-2.0], IDENTITY)
        for n in range(1, 1001):
            t = soft_update(t, o, tau)
            assert abs(abs(t.weights[0][0, 0] - 1.0) - (1 - tau) ** n) < 1e-10
            assert abs(abs(t.biases[0][0] + 2.0) - 2.0 * (1 - tau) ** n) < 1e-10

    @pytest.mark.parametrize("tau", [0.0, -0.1, 1.5])
    def test_bad_tau(self, tau):
        p = single_layer([[0.0]], [0.0], IDENTITY)
        with pytest.raises(ValueError):
            soft_update(p, p, tau)

    def test_shape_mismatch(self):
        a = init_mlp([3, 4, 1], [RELU, IDENTITY], np.random.default_rng(0))
        b = init_mlp([3, 5, 1], [RELU, IDENTITY], np.random.default_rng(0))
        with pytest.raises(ShapeError):
            soft_update(a, b, 0.5)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), tau=st.floats(0.001, 1.0))
def test_soft_update_entrywise(seed, tau):
    rng = np.random.default_rng(seed)
    t = init_mlp([3, 4, 2], [RELU, TANH], rng)
    o = init_mlp([3, 4, 2], [RELU, TANH], rng)
    new = soft_update(t, o, tau)
    np.testing.assert_allclose(new.flat(), tau * o.flat() + (1 - tau) * t.flat(), rtol=0, atol=1e-15)


def test_init_bounds():
    p = init_mlp([16, 8, 1], [RELU, IDENTITY], np.random.default_rng(0))
    assert np.abs(p.weights[0]).max() <= 1 / 4
    assert np.abs(p.weights[1]).max() <= 1 / math.sqrt(8)


def test_snapshot_roundtrip_and_layout(tmp_path):
    p = init_mlp([3, 4, 2], [RELU, TANH], np.random.default_rng(0))
    path = tmp_path / "net.bin"
    save_params(p, path)
    raw = path.read_bytes()
    header = np.frombuffer(raw[:4 * (1 + 3 + 2)], dtype="<i4")
    assert list(header) == [2, 3, 4, 2, 0, 1]
    floats = np.frombuffer(raw[24:], dtype="<f8")
    np.testing.assert_array_equal(floats[:12], p.weights[0].ravel())
    q = load_params(path)
    assert q.activations == p.activations
    np.testing.assert_array_equal(q.flat(), p.flat())
