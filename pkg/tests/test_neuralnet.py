import numpy as np
import pytest

from cxrgen import neuralnet as nn
from cxrgen.errors import ShapeMismatch, StaleCache
from cxrgen.imaging import preprocess
from conftest import pgm_bytes

# captured once from build_network(8, seed=42) on the fixture image's
# segment II and frozen
GOLDEN_SEED42_PROB = 0.4407433857770786


class TestElementaryOps:
    def test_dense_identity(self):
        x = np.array([1.0, 2.0, 3.0])
        np.testing.assert_allclose(nn.dense(x, np.eye(3), np.zeros(3)), x)

    def test_dense_zero_input(self):
        b = np.array([0.5, -1.0])
        np.testing.assert_allclose(nn.dense(np.zeros(3), np.zeros((2, 3)), b), b)

    def test_dense_hand(self):
        out = nn.dense(np.array([1.0, 1.0]), np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([0.0, 1.0]))
        np.testing.assert_allclose(out, [3.0, 8.0])

    def test_dense_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            nn.dense(np.zeros(3), np.zeros((2, 4)), np.zeros(2))

    def test_relu(self):
        np.testing.assert_allclose(nn.activation(np.array([-1.0, 0.0, 2.0]), "relu"), [0, 0, 2])

    def test_sigmoid(self):
        assert nn.activation(np.array([0.0]), "sigmoid")[0] == 0.5
        assert nn.activation(np.array([np.log(3.0)]), "sigmoid")[0] == pytest.approx(0.75)

    def test_bce(self):
        assert nn.bce_loss(0.5, 1) == pytest.approx(np.log(2))
        assert nn.bce_loss(1 - 1e-7, 1) == pytest.approx(0.0, abs=1e-6)
        assert nn.bce_loss(0.9, 0) == pytest.approx(-np.log(0.1))

    def test_bce_clamp_no_infinity(self):
        assert np.isfinite(nn.bce_loss(0.0, 1))
        assert np.isfinite(nn.bce_loss(1.0, 0))


class TestForward:
    def _zero_net(self):
        net = nn.build_network(8, seed=0)
        for p in net.params():
            p[...] = 0.0
        return net

    def test_zero_params_give_half(self):
        x = np.random.default_rng(0).random((1, 64, 128))
        p, _ = nn.forward(self._zero_net(), x)
        assert p == 0.5

    def test_golden_probability(self, fixture_image_bytes):
        pre = preprocess(fixture_image_bytes)
        net = nn.build_network(8, seed=42)
        p, _ = nn.forward(net, pre.seg2.pixels[np.newaxis])
        assert p == pytest.approx(GOLDEN_SEED42_PROB, abs=1e-15)

    def test_deterministic(self):
        net = nn.build_network(8, seed=3)
        x = np.random.default_rng(1).random((1, 64, 128))
        p1, c1 = nn.forward(net, x)
        p2, c2 = nn.forward(net, x)
        assert p1 == p2
        assert len(c1) == len(c2)

    def test_output_in_open_interval(self):
        net = nn.build_network(8, seed=5)
        x = np.random.default_rng(2).random((1, 64, 128))
        p, _ = nn.forward(net, x)
        assert 0.0 < p < 1.0

    def test_shape_mismatch(self):
        net = nn.build_network(8, seed=0)
        with pytest.raises(ShapeMismatch):
            nn.forward(net, np.zeros((1, 128, 128)))

    def test_shape_algebra(self):
        """Intermediate shapes of the default architecture."""
        net = nn.build_network(8, seed=0)
        x = np.random.default_rng(0).random((1, 64, 128))
        shapes = []
        cur = x
        for layer in net.layers:
            if isinstance(layer, nn.Conv2D):
                cur = nn.conv2d(cur, layer.kernels, layer.bias)
            elif isinstance(layer, nn.ReLU):
                cur = nn.activation(cur, "relu")
            elif isinstance(layer, nn.MaxPool2):
                cur, _ = nn.maxpool2(cur)
            elif isinstance(layer, nn.Flatten):
                cur = cur.reshape(-1)
            elif isinstance(layer, nn.Dense):
                cur = nn.dense(cur, layer.weights, layer.bias)
            else:
                cur = nn.activation(cur, "sigmoid")
            shapes.append(cur.shape)
        assert shapes[0] == (8, 64, 128)
        assert shapes[2] == (8, 32, 64)
        assert shapes[3] == (16, 32, 64)
        assert shapes[5] == (16, 16, 32)
        assert shapes[6] == (8192,)
        assert shapes[7] == (64,)
        assert shapes[-2] == (1,)
        assert shapes[-1] == (1,)


class TestBackward:
    def test_output_bias_gradient_is_p_minus_y(self):
        net = nn.build_network(8, seed=7)
        x = np.random.default_rng(3).random((1, 64, 128))
        p, cache = nn.forward(net, x)
        grads = nn.backward(net, cache, 1)
        # final dense layer bias gradient equals (p - y)
        final_dense = max(i for i, l in enumerate(net.layers) if isinstance(l, nn.Dense))
        assert grads[final_dense][1][0] == pytest.approx(p - 1, abs=1e-12)

    def test_perfect_prediction_zero_gradients(self):
        net = nn.build_network(8, seed=0)
        for p in net.params():
            p[...] = 0.0
        x = np.zeros((1, 64, 128))
        prob, cache = nn.forward(net, x)
        # force the saturated case: p == y through a huge output bias
        net.layers[-2].bias[0] = 50.0
        prob, cache = nn.forward(net, x)
        grads = nn.backward(net, cache, 1)
        for layer_grads in grads:
            for g in layer_grads:
                assert np.abs(g).max() < 1e-6

    def test_stale_cache(self):
        net = nn.build_network(8, seed=0)
        x = np.random.default_rng(0).random((1, 64, 128))
        _, cache = nn.forward(net, x)
        with pytest.raises(StaleCache):
            nn.backward(net, cache[:-2], 1)


class TestGradCheck:
    def test_seeded_network(self):
        net = nn.build_network(8, seed=11)
        x = np.random.default_rng(4).random((1, 64, 128))
        assert nn.grad_check(net, x, 1, n_samples=150, seed=0) <= 1e-4

    def test_zero_network(self):
        net = nn.build_network(8, seed=0)
        for p in net.params():
            p[...] = 0.0
        x = np.random.default_rng(5).random((1, 64, 128))
        assert nn.grad_check(net, x, 0, n_samples=100, seed=0) <= 1e-6

    def test_central_difference_order(self):
        """Halving the step shrinks the finite-difference error ~4x on a
        smooth (conv-free, relu-free) network."""
        rng = np.random.default_rng(6)
        net = nn.Network(
            layers=[
                nn.Flatten(),
                nn.Dense(rng.standard_normal((1, 4)), np.array([0.3])),
                nn.Sigmoid(),
            ],
            input_shape=(1, 2, 2),
        )
        x = rng.random((1, 2, 2))
        p, cache = nn.forward(net, x)
        analytic = nn.backward(net, cache, 1)[1][0][0, 0]
        w = net.layers[1].weights

        def numeric(h):
            orig = w[0, 0]
            w[0, 0] = orig + h
            lp = nn.bce_loss(nn.forward(net, x)[0], 1)
            w[0, 0] = orig - h
            lm = nn.bce_loss(nn.forward(net, x)[0], 1)
            w[0, 0] = orig
            return (lp - lm) / (2 * h)

        err_big = abs(numeric(2e-3) - analytic)
        err_small = abs(numeric(1e-3) - analytic)
        assert err_big / err_small == pytest.approx(4.0, rel=0.5)


def test_init_deterministic_and_glorot_bounded():
    a = nn.build_network(8, seed=9)
    b = nn.build_network(8, seed=9)
    for pa, pb in zip(a.params(), b.params()):
        np.testing.assert_array_equal(pa, pb)
    conv1 = a.layers[0]
    limit = np.sqrt(6.0 / (1 * 9 + 8 * 9))
    assert np.abs(conv1.kernels).max() <= limit
    assert (conv1.bias == 0).all()
