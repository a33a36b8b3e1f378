import math

import numpy as np
import pytest

from leafcnn.errors import InvalidShapeError
from leafcnn.nn import layers as L
from leafcnn.nn.train import sgd_step


def conv_oracle(x, weights, bias, stride, padding):
    """Direct six-nested-loop cross-correlation."""
    h, w, cin = x.shape
    kh, kw, _, cout = weights.shape
    xp = np.zeros((h + 2 * padding, w + 2 * padding, cin))
    xp[padding : padding + h, padding : padding + w] = x
    ho = (h + 2 * padding - kh) // stride + 1
    wo = (w + 2 * padding - kw) // stride + 1
    out = np.zeros((ho, wo, cout))
    for i in range(ho):
        for j in range(wo):
            for o in range(cout):
                acc = bias[o]
                for di in range(kh):
                    for dj in range(kw):
                        for c in range(cin):
                            acc += xp[i * stride + di, j * stride + dj, c] * weights[di, dj, c, o]
                out[i, j, o] = acc
    return out


class TestConvForward:
    def test_1x1_identity_kernel(self, rng):
        x = rng.normal(size=(4, 4, 3))
        weights = np.eye(3).reshape(1, 1, 3, 3)
        out = L.conv2d_forward(x, weights, np.zeros(3))
        assert np.allclose(out, x)

    def test_ones_kernel_on_constant(self):
        x = np.full((5, 5, 1), 2.5)
        weights = np.ones((3, 3, 1, 1))
        out = L.conv2d_forward(x, weights, np.zeros(1))
        assert out.shape == (3, 3, 1)
        assert np.allclose(out, 9 * 2.5)

    def test_matches_loop_oracle(self, rng):
        x = rng.normal(size=(5, 5, 2))
        weights = rng.normal(size=(3, 3, 2, 4))
        bias = rng.normal(size=4)
        out = L.conv2d_forward(x, weights, bias, stride=1, padding=0)
        assert np.allclose(out, conv_oracle(x, weights, bias, 1, 0))

    @pytest.mark.parametrize("stride,padding", [(1, 1), (2, 0), (2, 1), (3, 2)])
    def test_strides_and_padding_match_oracle(self, rng, stride, padding):
        x = rng.normal(size=(7, 6, 3))
        weights = rng.normal(size=(3, 3, 3, 2))
        bias = rng.normal(size=2)
        out = L.conv2d_forward(x, weights, bias, stride=stride, padding=padding)
        assert np.allclose(out, conv_oracle(x, weights, bias, stride, padding))

    def test_batched_matches_per_sample(self, rng):
        x = rng.normal(size=(3, 5, 5, 2))
        weights = rng.normal(size=(3, 3, 2, 4))
        bias = rng.normal(size=4)
        batched = L.conv2d_forward(x, weights, bias, padding=1)
        for i in range(3):
            single = L.conv2d_forward(x[i], weights, bias, padding=1)
            assert np.allclose(batched[i], single)

    def test_kernel_too_large(self):
        with pytest.raises(InvalidShapeError):
            L.conv2d_forward(np.zeros((2, 2, 1)), np.zeros((3, 3, 1, 1)), np.zeros(1))

    def test_channel_mismatch(self):
        with pytest.raises(InvalidShapeError):
            L.conv2d_forward(np.zeros((4, 4, 2)), np.zeros((3, 3, 1, 1)), np.zeros(1))


class TestConvBackward:
    def test_zero_grad_gives_zero(self, rng):
        x = rng.normal(size=(5, 5, 2))
        weights = rng.normal(size=(3, 3, 2, 3))
        gx, gw, gb = L.conv2d_backward(np.zeros((3, 3, 3)), x, weights)
        assert not gx.any() and not gw.any() and not gb.any()

    def test_1x1_identity_kernel_passes_grad(self, rng):
        x = rng.normal(size=(4, 4, 2))
        weights = np.eye(2).reshape(1, 1, 2, 2)
        grad = rng.normal(size=(4, 4, 2))
        gx, _, _ = L.conv2d_backward(grad, x, weights)
        assert np.allclose(gx, grad)

    @pytest.mark.parametrize("stride,padding", [(1, 0), (1, 1), (2, 1)])
    def test_matches_finite_differences(self, rng, stride, padding):
        # scalar loss sum(out * R); gradients probed by central differences
        x = rng.normal(size=(6, 6, 2))
        weights = rng.normal(size=(3, 3, 2, 3))
        bias = rng.normal(size=3)
        probe = rng.normal(size=L.conv2d_forward(x, weights, bias, stride, padding).shape)

        def loss(x_, w_, b_):
            return float(np.sum(L.conv2d_forward(x_, w_, b_, stride, padding) * probe))

        gx, gw, gb = L.conv2d_backward(probe, x, weights, stride, padding)
        eps = 1e-6
        for arr, grad in ((x, gx), (weights, gw), (bias, gb)):
            flat = arr.reshape(-1)
            gflat = grad.reshape(-1)
            for idx in range(0, flat.size, max(1, flat.size // 25)):
                orig = flat[idx]
                flat[idx] = orig + eps
                up = loss(x, weights, bias)
                flat[idx] = orig - eps
                down = loss(x, weights, bias)
                flat[idx] = orig
                numeric = (up - down) / (2 * eps)
                assert abs(gflat[idx] - numeric) / max(abs(gflat[idx]), abs(numeric), 1e-8) < 1e-4


class TestMaxPool:
    def test_single_window(self):
        x = np.array([[1.0, 2.0], [3.0, 4.0]]).reshape(2, 2, 1)
        out, argmax = L.maxpool2d_forward(x, 2)
        assert out.shape == (1, 1, 1)
        assert out[0, 0, 0] == 4.0
        assert argmax[0, 0, 0] == 3  # row-major position of the max

    def test_tie_breaks_to_first_position(self):
        x = np.full((4, 4, 2), 5.0)
        out, argmax = L.maxpool2d_forward(x, 2, 2)
        assert np.all(out == 5.0)
        assert np.all(argmax == 0)
        grad = np.ones_like(out)
        gx = L.maxpool2d_backward(grad, argmax, x.shape, 2, 2)
        # all gradient lands on each window's top-left corner
        assert np.all(gx[::2, ::2, :] == 1.0)
        assert gx.sum() == grad.sum()

    def test_matches_brute_force(self, rng):
        x = rng.normal(size=(6, 6, 3))
        out, _ = L.maxpool2d_forward(x, 2, 2)
        for i in range(3):
            for j in range(3):
                for c in range(3):
                    assert out[i, j, c] == x[2 * i : 2 * i + 2, 2 * j : 2 * j + 2, c].max()

    def test_backward_routes_to_argmax(self, rng):
        x = rng.normal(size=(4, 4, 1))
        out, argmax = L.maxpool2d_forward(x, 2, 2)
        grad = rng.normal(size=out.shape)
        gx = L.maxpool2d_backward(grad, argmax, x.shape, 2, 2)
        assert gx.sum() == pytest.approx(grad.sum())
        for i in range(2):
            for j in range(2):
                window = x[2 * i : 2 * i + 2, 2 * j : 2 * j + 2, 0]
                gwindow = gx[2 * i : 2 * i + 2, 2 * j : 2 * j + 2, 0]
                pos = np.unravel_index(np.argmax(window), (2, 2))
                assert gwindow[pos] == pytest.approx(grad[i, j, 0])
                assert np.count_nonzero(gwindow) <= 1

    def test_window_too_large(self):
        with pytest.raises(InvalidShapeError):
            L.maxpool2d_forward(np.zeros((2, 2, 1)), 3)


class TestRelu:
    def test_examples(self):
        assert L.relu(np.array([-1.0, 0.0, 2.0])).tolist() == [0.0, 0.0, 2.0]

    def test_positive_identity(self, rng):
        x = np.abs(rng.normal(size=(3, 3))) + 0.1
        assert np.array_equal(L.relu(x), x)

    def test_backward_masks_nonpositive(self):
        x = np.array([-2.0, 0.0, 3.0])
        grad = np.array([10.0, 10.0, 10.0])
        assert L.relu_backward(grad, x).tolist() == [0.0, 0.0, 10.0]


class TestDense:
    def test_identity_weights(self, rng):
        x = rng.normal(size=4)
        out = L.dense_forward(x, np.eye(4), np.zeros(4))
        assert np.allclose(out, x)

    def test_zero_weights_gives_bias(self, rng):
        x = rng.normal(size=3)
        out = L.dense_forward(x, np.zeros((2, 3)), np.array([1.0, 2.0]))
        assert out.tolist() == [1.0, 2.0]

    def test_backward_matches_finite_differences(self, rng):
        x = rng.normal(size=8)
        weights = rng.normal(size=(3, 8))
        bias = rng.normal(size=3)
        probe = rng.normal(size=3)

        def loss():
            return float(np.sum(L.dense_forward(x, weights, bias) * probe))

        gx, gw, gb = L.dense_backward(probe, x, weights)
        eps = 1e-6
        for arr, grad in ((x, gx), (weights, gw), (bias, gb)):
            flat = arr.reshape(-1)
            gflat = np.asarray(grad).reshape(-1)
            for idx in range(flat.size):
                orig = flat[idx]
                flat[idx] = orig + eps
                up = loss()
                flat[idx] = orig - eps
                down = loss()
                flat[idx] = orig
                numeric = (up - down) / (2 * eps)
                assert abs(gflat[idx] - numeric) / max(abs(gflat[idx]), abs(numeric), 1e-8) < 1e-4

    def test_length_mismatch(self):
        with pytest.raises(InvalidShapeError):
            L.dense_forward(np.zeros(3), np.zeros((2, 4)), np.zeros(2))


class TestSoftmaxAndLoss:
    def test_uniform_logits(self):
        out = L.softmax(np.zeros(3))
        assert np.allclose(out, 1 / 3)

    def test_known_example(self):
        out = L.softmax(np.array([0.0, math.log(3.0)]))
        assert np.allclose(out, [0.25, 0.75])

    def test_shift_invariance(self, rng):
        x = rng.normal(size=7)
        for c in (-1000.0, -3.5, 0.0, 4.2, 1000.0):
            assert np.allclose(L.softmax(x), L.softmax(x + c))

    def test_sums_to_one_and_positive(self, rng):
        for _ in range(50):
            x = rng.normal(size=int(rng.integers(1, 12))) * rng.uniform(0.1, 50)
            p = L.softmax(x)
            assert abs(p.sum() - 1.0) < 1e-9
            assert np.all(p > 0)

    def test_cross_entropy_examples(self):
        target = np.array([0.0, 1.0, 0.0])
        assert L.cross_entropy(np.array([0.0, 1.0, 0.0]), target) == pytest.approx(0.0)
        uniform = np.full(5, 0.2)
        one_hot = np.zeros(5)
        one_hot[2] = 1.0
        assert L.cross_entropy(uniform, one_hot) == pytest.approx(math.log(5.0))

    def test_cross_entropy_clamps_zero_probability(self):
        target = np.array([1.0, 0.0])
        loss = L.cross_entropy(np.array([0.0, 1.0]), target)
        assert loss == pytest.approx(-math.log(1e-12))

    def test_softmax_cross_entropy_gradient_is_p_minus_t(self, rng):
        # fused analytic identity, checked against central differences
        logits = rng.normal(size=6)
        target = np.zeros(6)
        target[2] = 1.0
        probs = L.softmax(logits)
        chained = L.softmax_backward(L.cross_entropy_backward(probs, target), probs)
        assert np.allclose(chained, probs - target, atol=1e-12)
        eps = 1e-6
        for i in range(6):
            bumped = logits.copy()
            bumped[i] += eps
            up = L.cross_entropy(L.softmax(bumped), target)
            bumped[i] -= 2 * eps
            down = L.cross_entropy(L.softmax(bumped), target)
            numeric = (up - down) / (2 * eps)
            assert abs(chained[i] - numeric) < 1e-7

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidShapeError):
            L.cross_entropy(np.zeros(3), np.zeros(4))


class TestSgdStep:
    def test_plain_step(self):
        p, v = sgd_step(np.array(1.0), np.array(0.5), np.array(0.0), 0.1, 0.0)
        assert p == pytest.approx(0.95)
        assert v == pytest.approx(-0.05)

    def test_zero_gradient_keeps_parameters(self, rng):
        params = rng.normal(size=5)
        p, v = sgd_step(params, np.zeros(5), np.zeros(5), 0.1, 0.9)
        assert np.array_equal(p, params)
        assert not v.any()

    def test_two_steps_match_unrolled_recurrence(self):
        lr, mom, g = 0.1, 0.9, 2.0
        p = np.array(1.0)
        v = np.array(0.0)
        p, v = sgd_step(p, np.array(g), v, lr, mom)
        p, v = sgd_step(p, np.array(g), v, lr, mom)
        # v1 = -lr*g; v2 = mom*v1 - lr*g; p2 = p0 + v1 + v2
        v1 = -lr * g
        v2 = mom * v1 - lr * g
        assert v == pytest.approx(v2)
        assert p == pytest.approx(1.0 + v1 + v2)

    def test_shape_mismatch(self):
        with pytest.raises(InvalidShapeError):
            sgd_step(np.zeros(3), np.zeros(4), np.zeros(3), 0.1, 0.0)
