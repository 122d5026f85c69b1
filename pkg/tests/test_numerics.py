import math

import numpy as np
import pytest

import hbm.numerics as nm
from gradcheck import fd_input_gradient, rel_error
from hbm import Rng
from hbm.errors import ConfigError, NonFiniteError, ShapeError

FD_TOL = 1e-3


def rand(shape, seed, scale=1.0):
    return (Rng(seed).normal(int(np.prod(shape))).reshape(shape) * scale)


class TestMatmul:
    def test_identity(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert np.array_equal(nm.matmul(np.eye(2), a), a)

    def test_hand_dot(self):
        out = nm.matmul(np.array([[1.0, 2.0]]), np.array([[3.0], [4.0]]))
        assert out.tolist() == [[11.0]]

    def test_shape_error(self):
        with pytest.raises(ShapeError):
            nm.matmul(np.zeros((2, 3)), np.zeros((2, 3)))

    @pytest.mark.filterwarnings("ignore:overflow encountered")
    def test_overflow_detected(self):
        big = np.full((1, 1), 3e38, dtype=np.float32)
        with pytest.raises(NonFiniteError):
            nm.matmul(big, big)

    def test_vjp_matches_finite_differences(self):
        a = rand((3, 4), 1)
        b = rand((4, 2), 2)
        u = rand((3, 2), 3)  # cotangent
        da, db = nm.matmul_vjp(u, a, b)
        fd_a = fd_input_gradient(a, lambda x: float((nm.matmul(x, b) * u).sum()))
        fd_b = fd_input_gradient(b, lambda x: float((nm.matmul(a, x) * u).sum()))
        assert rel_error(da, fd_a) < FD_TOL
        assert rel_error(db, fd_b) < FD_TOL


class TestSoftmaxRows:
    def test_symmetry(self):
        out = nm.softmax_rows(np.array([[0.0, 0.0]]))
        assert np.allclose(out, [[0.5, 0.5]])

    def test_scalar_evaluation(self):
        out = nm.softmax_rows(np.array([[math.log(2.0), 0.0]]))
        assert np.allclose(out, [[2.0 / 3.0, 1.0 / 3.0]], atol=1e-12)

    def test_stabilized_no_overflow(self):
        out = nm.softmax_rows(np.array([[1000.0, 0.0]]))
        assert np.allclose(out, [[1.0, 0.0]])

    def test_rows_are_probability_vectors(self):
        x = rand((20, 7), 4, scale=5.0)
        out = nm.softmax_rows(x)
        assert np.all(out >= 0) and np.all(out <= 1)
        assert np.abs(out.sum(axis=1) - 1.0).max() < 1e-6

    def test_rejects_non_finite(self):
        with pytest.raises(NonFiniteError):
            nm.softmax_rows(np.array([[np.nan, 0.0]]))

    def test_vjp_matches_finite_differences(self):
        x = rand((3, 4), 5)
        u = rand((3, 4), 6)
        dx = nm.softmax_rows_vjp(u, nm.softmax_rows(x))
        fd = fd_input_gradient(x, lambda v: float((nm.softmax_rows(v) * u).sum()))
        assert rel_error(dx, fd) < FD_TOL


class TestLayerNorm:
    def test_zero_variance_row(self):
        out = nm.layer_norm(np.array([[1.0, 1.0, 1.0]]), np.ones(3), np.zeros(3))
        assert np.array_equal(out, np.zeros((1, 3)))

    def test_standardizes_two_values(self):
        out = nm.layer_norm(np.array([[1.0, 3.0]]), np.ones(2), np.zeros(2), eps=1e-30)
        assert np.allclose(out, [[-1.0, 1.0]], atol=1e-9)

    def test_zero_gain_broadcasts_bias(self):
        x = rand((4, 3), 7)
        bias = np.array([1.0, -2.0, 0.5])
        out = nm.layer_norm(x, np.zeros(3), bias)
        assert np.allclose(out, np.tile(bias, (4, 1)))

    def test_rows_standardized(self):
        x = rand((10, 16), 8, scale=3.0)
        out = nm.layer_norm(x, np.ones(16), np.zeros(16))
        assert np.abs(out.mean(axis=1)).max() < 1e-6
        assert np.abs(out.var(axis=1) - 1.0).max() < 1e-4

    def test_gain_bias_length_checked(self):
        with pytest.raises(ShapeError):
            nm.layer_norm(np.zeros((2, 3)), np.ones(2), np.zeros(3))

    def test_vjp_matches_finite_differences(self):
        x = rand((3, 5), 9)
        gain = 1.0 + 0.2 * rand((5,), 10)
        bias = 0.1 * rand((5,), 11)
        u = rand((3, 5), 12)

        _, xhat, inv_std = nm.layer_norm_ctx(x, gain, bias)
        dx, dgain, dbias = nm.layer_norm_vjp(u, xhat, inv_std, gain)

        fd_x = fd_input_gradient(x, lambda v: float((nm.layer_norm(v, gain, bias) * u).sum()))
        fd_g = fd_input_gradient(gain, lambda v: float((nm.layer_norm(x, v, bias) * u).sum()))
        fd_b = fd_input_gradient(bias, lambda v: float((nm.layer_norm(x, gain, v) * u).sum()))
        assert rel_error(dx, fd_x) < FD_TOL
        assert rel_error(dgain, fd_g) < FD_TOL
        assert rel_error(dbias, fd_b) < FD_TOL


class TestElementwise:
    def test_relu_values(self):
        assert nm.relu(np.array([[-1.0, 0.0, 2.0]])).tolist() == [[0.0, 0.0, 2.0]]

    def test_tanh_zero(self):
        assert nm.tanh(np.array([[0.0]])).tolist() == [[0.0]]

    def test_tanh_vjp_at_zero_is_identity(self):
        g = np.array([[0.7]])
        out = nm.tanh_vjp(g, nm.tanh(np.array([[0.0]])))
        assert np.allclose(out, g)

    def test_relu_vjp_matches_finite_differences(self):
        x = rand((3, 4), 13)
        x += np.sign(x) * 0.05  # keep away from the kink
        u = rand((3, 4), 14)
        dx = nm.relu_vjp(u, x)
        fd = fd_input_gradient(x, lambda v: float((nm.relu(v) * u).sum()))
        assert rel_error(dx, fd) < FD_TOL

    def test_tanh_vjp_matches_finite_differences(self):
        x = rand((3, 4), 15)
        u = rand((3, 4), 16)
        dx = nm.tanh_vjp(u, nm.tanh(x))
        fd = fd_input_gradient(x, lambda v: float((nm.tanh(v) * u).sum()))
        assert rel_error(dx, fd) < FD_TOL


class TestMeanRows:
    def test_symmetry(self):
        out = nm.mean_rows(np.array([[1.0, 3.0], [3.0, 1.0]]))
        assert out.tolist() == [[2.0, 2.0]]

    def test_single_row_identity(self):
        x = rand((1, 5), 17)
        assert np.allclose(nm.mean_rows(x), x)

    def test_empty_rejected(self):
        with pytest.raises(ShapeError):
            nm.mean_rows(np.zeros((0, 3)))

    def test_vjp_matches_finite_differences(self):
        x = rand((4, 2), 18)
        u = rand((1, 2), 19)
        dx = nm.mean_rows_vjp(u, 4)
        fd = fd_input_gradient(x, lambda v: float((nm.mean_rows(v) * u).sum()))
        assert rel_error(dx, fd) < FD_TOL


class TestDropout:
    def test_p_zero_identity(self):
        x = rand((3, 3), 20)
        out, mask = nm.dropout(x, 0.0, Rng(1), training=True)
        assert np.array_equal(out, x) and mask is None

    def test_inference_identity(self):
        x = rand((3, 3), 21)
        out, mask = nm.dropout(x, 0.9, None, training=False)
        assert np.array_equal(out, x) and mask is None

    def test_zero_fraction_monte_carlo(self):
        x = np.ones((100_000, 1), dtype=np.float32)
        out, _ = nm.dropout(x, 0.5, Rng(42), training=True)
        zero_frac = float((out == 0).mean())
        assert abs(zero_frac - 0.5) < 0.01

    def test_survivors_scaled(self):
        x = np.ones((1000, 1), dtype=np.float32)
        out, mask = nm.dropout(x, 0.2, Rng(2), training=True)
        kept = out[out != 0]
        assert np.allclose(kept, 1.0 / 0.8)
        assert np.array_equal(nm.dropout_vjp(x, mask), mask)

    def test_invalid_p(self):
        with pytest.raises(ConfigError):
            nm.dropout(np.ones((1, 1)), 1.0, Rng(1), training=True)

    def test_deterministic(self):
        x = rand((50, 7), 22)
        a, _ = nm.dropout(x, 0.3, Rng(5), training=True)
        b, _ = nm.dropout(x, 0.3, Rng(5), training=True)
        assert np.array_equal(a, b)


class TestConcatCols:
    def test_single_part_identity(self):
        x = rand((2, 3), 23)
        assert np.array_equal(nm.concat_cols([x]), x)

    def test_shape(self):
        out = nm.concat_cols([np.zeros((2, 1)), np.ones((2, 1))])
        assert out.shape == (2, 2)

    def test_round_trip_bitwise(self):
        a, b = rand((4, 3), 24), rand((4, 2), 25)
        back = nm.concat_cols_vjp(nm.concat_cols([a, b]), [3, 2])
        assert np.array_equal(back[0], a) and np.array_equal(back[1], b)

    def test_row_mismatch(self):
        with pytest.raises(ShapeError):
            nm.concat_cols([np.zeros((2, 1)), np.zeros((3, 1))])


def test_ops_are_pure():
    x32 = rand((6, 6), 26).astype(np.float32)
    for op in (nm.softmax_rows, nm.relu, nm.tanh, nm.mean_rows):
        assert np.array_equal(op(x32), op(x32))
    assert np.array_equal(nm.matmul(x32, x32), nm.matmul(x32, x32))
