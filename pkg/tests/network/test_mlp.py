"""
MLP 单元测试
"""
import unittest

import numpy as np

from core.errors import UsageError
from core.rng import make_rng
from network.mlp import (
    MlpConfig,
    MlpParams,
    backward,
    copy_params,
    forward,
    gradient_check,
    init_params,
    params_equal,
)
from network.adam import AdamState, adam_step


def away_from_kink(params: MlpParams, rng, batch: int, margin: float = 1e-3, tries: int = 50) -> np.ndarray:
    """抽取所有隐藏层预激活都离 0 至少 margin 的输入，避免差分跨过 ReLU 折点"""
    for _ in range(tries):
        x = rng.normal(size=(batch, params.config.input_dim))
        _, cache = forward(params, x, "eval")
        if all(np.min(np.abs(z)) > margin for z in cache.pre_activations):
            return x
    raise AssertionError("找不到远离折点的输入")


def zero_params(config: MlpConfig) -> MlpParams:
    return MlpParams(
        config=config,
        weights=[np.zeros((o, i)) for i, o in config.layer_dims],
        biases=[np.zeros(o) for _, o in config.layer_dims],
    )


class TestForward(unittest.TestCase):
    """forward 测试"""

    def setUp(self):
        self.config = MlpConfig(input_dim=7, hidden_dims=[16, 8], output_dim=3)
        self.params = init_params(self.config, make_rng(0, "init"))

    def test_shapes(self):
        """单个向量与批量输入"""
        out, _ = forward(self.params, np.ones(7))
        self.assertEqual(out.shape, (3,))
        out, _ = forward(self.params, np.ones((5, 7)))
        self.assertEqual(out.shape, (5, 3))

    def test_wrong_input_dim(self):
        with self.assertRaises(UsageError):
            forward(self.params, np.ones(6))

    def test_zero_weights_give_zero_output(self):
        params = zero_params(self.config)
        out, _ = forward(params, np.arange(7.0))
        np.testing.assert_array_equal(out, np.zeros(3))

    def test_bias_only(self):
        params = zero_params(self.config)
        params.biases[-1][:] = [1.0, -2.0, 0.5]
        out, _ = forward(params, np.ones(7))
        np.testing.assert_array_equal(out, [1.0, -2.0, 0.5])

    def test_relu_clips_negative_hidden(self):
        """隐藏层预激活为负时输出只剩偏置"""
        config = MlpConfig(input_dim=1, hidden_dims=[1], output_dim=1)
        params = MlpParams(
            config=config,
            weights=[np.array([[1.0]]), np.array([[2.0]])],
            biases=[np.array([0.0]), np.array([0.5])],
        )
        out, _ = forward(params, np.array([3.0]))
        self.assertEqual(out[0], 6.5)
        out, _ = forward(params, np.array([-3.0]))
        self.assertEqual(out[0], 0.5)

    def test_relu_positive_homogeneity(self):
        """偏置为 0 时 forward(c·x) == c·forward(x)，c > 0"""
        rng = make_rng(3, "homogeneity")
        x = rng.normal(size=(6, 7))
        base, _ = forward(self.params, x)
        for c in (0.5, 2.0, 7.25):
            scaled, _ = forward(self.params, c * x)
            np.testing.assert_allclose(scaled, c * base, rtol=1e-12, atol=1e-12)

    def test_init_bounds(self):
        for (fan_in, _), w, b in zip(self.config.layer_dims, self.params.weights, self.params.biases):
            self.assertLessEqual(np.abs(w).max(), 1.0 / np.sqrt(fan_in))
            np.testing.assert_array_equal(b, 0.0)

    def test_eval_mode_is_deterministic(self):
        config = self.config.model_copy(update={"dropout_rate": 0.5})
        params = init_params(config, make_rng(0))
        a, _ = forward(params, np.ones(7), "eval")
        b, _ = forward(params, np.ones(7), "eval")
        np.testing.assert_array_equal(a, b)

    def test_dropout_requires_rng(self):
        config = self.config.model_copy(update={"dropout_rate": 0.2})
        params = init_params(config, make_rng(0))
        with self.assertRaises(UsageError):
            forward(params, np.ones(7), "train")

    def test_dropout_preserves_expectation(self):
        """inverted dropout 的期望输出与 eval 输出相差 2% 以内"""
        config = MlpConfig(input_dim=2, hidden_dims=[200], output_dim=1, dropout_rate=0.5)
        rng = make_rng(1)
        params = MlpParams(
            config=config,
            weights=[rng.uniform(0.1, 1.0, size=(200, 2)), rng.uniform(0.1, 1.0, size=(1, 200))],
            biases=[np.zeros(200), np.zeros(1)],
        )
        x = np.tile([1.0, 2.0], (4000, 1))
        expected, _ = forward(params, x[0], "eval")
        sampled, _ = forward(params, x, "train", rng=make_rng(2))
        self.assertAlmostEqual(sampled.mean() / expected[0], 1.0, delta=0.02)


class TestBackward(unittest.TestCase):
    """backward 测试"""

    def test_linear_closed_form(self):
        """单层线性网络: dW = g x^T, db = g"""
        config = MlpConfig(input_dim=3, hidden_dims=[], output_dim=2)
        params = init_params(config, make_rng(0))
        x = np.array([1.0, -2.0, 0.5])
        g = np.array([0.3, -1.0])
        _, cache = forward(params, x)
        grads = backward(params, cache, g)
        np.testing.assert_allclose(grads.weights[0], np.outer(g, x))
        np.testing.assert_allclose(grads.biases[0], g)

    def test_gradient_check_random_networks(self):
        """100 个随机网络（各维度 <= 16）的中心差分误差 < 1e-4"""
        rng = make_rng(0, "gradcheck")
        for trial in range(100):
            activation = ("relu", "tanh", "leaky_relu")[trial % 3]
            if trial == 0:
                config = MlpConfig(input_dim=7, hidden_dims=[8], output_dim=3, activation=activation)
            else:
                hidden = [int(d) for d in rng.integers(1, 17, size=int(rng.integers(0, 3)))]
                config = MlpConfig(
                    input_dim=int(rng.integers(1, 17)),
                    hidden_dims=hidden,
                    output_dim=int(rng.integers(1, 17)),
                    activation=activation,
                )
            params = init_params(config, rng)
            for b in params.biases:
                b[:] = rng.uniform(-0.5, 0.5, size=b.shape)
            x = away_from_kink(params, rng, batch=2)
            target = rng.normal(size=(2, config.output_dim))
            self.assertLess(gradient_check(params, x, target), 1e-4, f"trial {trial} ({activation})")

    def test_gradient_check_q_network_shape(self):
        """7→8→3 ReLU 网络（网络实际使用的形状）"""
        rng = make_rng(1, "gradcheck")
        config = MlpConfig(input_dim=7, hidden_dims=[8], output_dim=3)
        for trial in range(20):
            params = init_params(config, rng)
            for b in params.biases:
                b[:] = rng.uniform(-0.5, 0.5, size=b.shape)
            x = away_from_kink(params, rng, batch=4)
            self.assertLess(gradient_check(params, x, rng.normal(size=(4, 3))), 1e-4, f"trial {trial}")

    def test_stale_cache_rejected(self):
        config = MlpConfig(input_dim=2, hidden_dims=[3], output_dim=1)
        params = init_params(config, make_rng(0))
        _, cache = forward(params, np.ones(2))
        grads = backward(params, cache, np.ones(1))
        adam_step(params, grads, AdamState.for_params(params))
        with self.assertRaises(UsageError):
            backward(params, cache, np.ones(1))

    def test_foreign_cache_rejected(self):
        config = MlpConfig(input_dim=2, hidden_dims=[3], output_dim=1)
        params = init_params(config, make_rng(0))
        other = copy_params(params)
        _, cache = forward(params, np.ones(2))
        with self.assertRaises(UsageError):
            backward(other, cache, np.ones(1))

    def test_gradient_shape_mismatch(self):
        config = MlpConfig(input_dim=2, hidden_dims=[3], output_dim=2)
        params = init_params(config, make_rng(0))
        _, cache = forward(params, np.ones((4, 2)))
        with self.assertRaises(UsageError):
            backward(params, cache, np.ones((3, 2)))


class TestCopyParams(unittest.TestCase):
    """copy_params / params_equal 测试"""

    def test_copy_is_independent(self):
        config = MlpConfig(input_dim=2, hidden_dims=[3], output_dim=1)
        params = init_params(config, make_rng(0))
        clone = copy_params(params)
        self.assertTrue(params_equal(params, clone))
        clone.weights[0][0, 0] += 1.0
        self.assertFalse(params_equal(params, clone))

    def test_shape_validation(self):
        config = MlpConfig(input_dim=2, hidden_dims=[3], output_dim=1)
        with self.assertRaises(UsageError):
            MlpParams(config=config, weights=[np.zeros((2, 3)), np.zeros((1, 3))], biases=[np.zeros(3), np.zeros(1)])


if __name__ == "__main__":
    unittest.main()
