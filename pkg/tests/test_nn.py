"""신경망 코어 테스트: MLP 순전파/역전파, 기울기 검증, Adam"""
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.encoding import Grid2DEncoder, HashGrid3DEncoder
from src.nn.gradcheck import finite_difference_check, relative_error
from src.nn.mlp import Mlp, mse_loss
from src.nn.optimizer import AdamState, adam_step
from src.sampling.fibonacci import fibonacci_directions
from src.utils.errors import ShapeError, StaleCacheError

GRAD_TOLERANCE = 1e-4


def mlp_grads(mlp: Mlp, X: np.ndarray, y: np.ndarray):
    pred, cache = mlp.forward(X)
    _, g = mse_loss(pred, y)
    return mlp.backward(cache, g)


class TestMlp:
    """MLP 구성과 추론"""

    def test_init_bounds(self):
        mlp = Mlp.create(input_dim=12, width=32, depth=3, seed=1)
        assert mlp.layer_sizes == [12, 32, 32, 32, 1]
        for w, b in zip(mlp.weights, mlp.biases):
            assert np.all(np.abs(w) <= np.sqrt(6.0 / w.shape[1]))
            assert np.all(b == 0.0)
        assert mlp.parameter_count() == 12 * 32 + 32 + 2 * (32 * 32 + 32) + 32 + 1
        assert mlp.shape_label == "32x3"

    def test_seeded(self):
        a = Mlp.create(4, 8, 2, seed=3)
        b = Mlp.create(4, 8, 2, seed=3)
        assert all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights))

    def test_predict_paths_agree(self):
        mlp = Mlp.create(5, 16, 2, seed=0)
        X = np.random.default_rng(0).normal(size=(10, 5))
        pred, _ = mlp.forward(X)
        assert np.allclose(mlp.predict(X), pred)
        assert mlp.predict_one(X[4]) == pytest.approx(pred[4])

    def test_bad_layer_sizes(self):
        with pytest.raises(ShapeError):
            Mlp([3, 4])
        with pytest.raises(ShapeError):
            Mlp([3])

    def test_input_width_mismatch(self):
        mlp = Mlp.create(5, 8, 1)
        with pytest.raises(ShapeError):
            mlp.forward(np.zeros((2, 4)))
        with pytest.raises(ShapeError):
            mlp.predict_one(np.zeros(6))

    def test_decay_names_exclude_biases(self):
        mlp = Mlp.create(3, 8, 2)
        assert mlp.decay_names() == ["W0", "W1", "W2"]
        assert set(mlp.parameters()) == {"W0", "b0", "W1", "b1", "W2", "b2"}


class TestBackward:
    """역전파 기울기 vs 중앙 차분"""

    @pytest.mark.parametrize("width, depth", [(32, 2), (128, 4)])
    def test_mlp_gradients(self, width, depth):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(16, 9))
        y = rng.uniform(0, 1, size=16)
        mlp = Mlp.create(9, width, depth, seed=2)
        grads = mlp_grads(mlp, X, y)

        def loss_fn():
            return mse_loss(mlp.predict(X), y)[0]

        for name, param in mlp.parameters().items():
            analytic = grads.as_dict()[name]
            assert finite_difference_check(loss_fn, param, analytic) < GRAD_TOLERANCE, name

    def test_input_gradient(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(8, 4))
        y = rng.normal(size=8)
        mlp = Mlp.create(4, 16, 2, seed=0)
        grads = mlp_grads(mlp, X, y)

        def loss_fn():
            return mse_loss(mlp.predict(X), y)[0]

        assert finite_difference_check(loss_fn, X, grads.input, max_checks=None) < GRAD_TOLERANCE

    @pytest.mark.parametrize("width, depth", [(32, 2), (128, 4)])
    def test_grid2d_texel_gradients(self, width, depth):
        enc = Grid2DEncoder(levels=3, features=2, finest=(64, 32), seed=4)
        # 학습 후처럼 특징 크기를 키워 ReLU 경계에서 떨어뜨린다
        enc.grid.features[...] = np.random.default_rng(0).normal(size=enc.grid.features.shape)
        ctx = enc.prepare(fibonacci_directions(40).directions)
        y = np.random.default_rng(1).uniform(size=len(ctx))
        mlp = Mlp.create(enc.output_dim, width, depth, seed=1)

        grads = mlp_grads(mlp, enc.forward(ctx), y)
        analytic = enc.backward(ctx, grads.input)["features"]

        def loss_fn():
            return mse_loss(mlp.predict(enc.forward(ctx)), y)[0]

        touched = np.flatnonzero(analytic)
        assert len(touched) > 0
        err = finite_difference_check(loss_fn, enc.grid.features, analytic, indices=touched[:64])
        assert err < GRAD_TOLERANCE

    @pytest.mark.parametrize("width, depth", [(32, 2), (128, 4)])
    def test_hash3d_table_gradients(self, width, depth):
        enc = HashGrid3DEncoder(levels=4, features=2, log2_table_size=10, base_resolution=4,
                                finest_resolution=32, seed=3)
        enc.grid.features[...] = np.random.default_rng(2).normal(size=enc.grid.features.shape)
        P = np.random.default_rng(3).uniform(-1, 1, size=(30, 3))
        ctx = enc.prepare(P)
        y = np.random.default_rng(4).uniform(size=30)
        mlp = Mlp.create(enc.output_dim, width, depth, seed=5)

        grads = mlp_grads(mlp, enc.forward(ctx), y)
        analytic = enc.backward(ctx, grads.input)["features"]

        def loss_fn():
            return mse_loss(mlp.predict(enc.forward(ctx)), y)[0]

        touched = np.flatnonzero(analytic)
        err = finite_difference_check(loss_fn, enc.grid.features, analytic, indices=touched[:64])
        assert err < GRAD_TOLERANCE

    def test_untouched_texels_get_zero_gradient(self):
        enc = Grid2DEncoder(levels=1, features=1, coarsest=(16, 8))
        ctx = enc.prepare(np.array([[1.0, 0.0, 0.0]]))
        g = enc.backward(ctx, np.ones((1, 1)))["features"]
        assert np.count_nonzero(g) <= 4
        assert g.sum() == pytest.approx(1.0)


class TestCacheDiscipline:
    """forward 캐시 규칙"""

    def setup_method(self):
        self.mlp = Mlp.create(3, 8, 2, seed=0)
        self.X = np.ones((4, 3))

    def test_consumed_cache(self):
        _, cache = self.mlp.forward(self.X)
        self.mlp.backward(cache, np.ones(4))
        with pytest.raises(StaleCacheError):
            self.mlp.backward(cache, np.ones(4))

    def test_stale_after_update(self):
        _, cache = self.mlp.forward(self.X)
        self.mlp.touch()
        with pytest.raises(StaleCacheError):
            self.mlp.backward(cache, np.ones(4))

    def test_load_tensors_invalidates(self):
        _, cache = self.mlp.forward(self.X)
        self.mlp.load_tensors({k: v.copy() for k, v in self.mlp.parameters().items()})
        with pytest.raises(StaleCacheError):
            self.mlp.backward(cache, np.ones(4))

    def test_d_out_shape(self):
        _, cache = self.mlp.forward(self.X)
        with pytest.raises(ShapeError):
            self.mlp.backward(cache, np.ones(3))
        # 형상 오류로는 캐시가 소모되지 않는다
        self.mlp.backward(cache, np.ones(4))


class TestLossAndOptimizer:
    """MSE 손실과 Adam"""

    def test_mse(self):
        loss, grad = mse_loss(np.array([1.0, 2.0]), np.array([0.0, 0.0]))
        assert loss == pytest.approx(2.5)
        assert grad.tolist() == [1.0, 2.0]
        loss, grad = mse_loss(3.0, 1.0)
        assert loss == 4.0 and float(grad) == 4.0
        with pytest.raises(ShapeError):
            mse_loss(np.zeros(2), np.zeros(3))

    def test_first_adam_step(self):
        p = {"W0": np.array([1.0, -2.0]), "b0": np.array([0.5])}
        g = {"W0": np.array([0.1, -0.3]), "b0": np.array([2.0])}
        state = AdamState.for_parameters(p, decay_names=["W0"], lr=0.01, weight_decay=0.1)
        adam_step(p, g, state)
        # 첫 스텝: m̂ = g, v̂ = g² → 갱신 크기 ≈ lr·sign(g)
        w = np.array([1.0, -2.0]) * (1 - 0.01 * 0.1)
        expected_w = w - 0.01 * np.array([0.1, -0.3]) / (np.abs([0.1, -0.3]) + 1e-8)
        assert np.allclose(p["W0"], expected_w, rtol=1e-12)
        assert np.allclose(p["b0"], 0.5 - 0.01 * 2.0 / (2.0 + 1e-8), rtol=1e-12)
        assert state.step == 1

    def test_bias_correction_second_step(self):
        p = {"x": np.array([0.0])}
        state = AdamState.for_parameters(p, lr=0.1, weight_decay=0.0)
        adam_step(p, {"x": np.array([1.0])}, state)
        adam_step(p, {"x": np.array([3.0])}, state)
        m = 0.9 * 0.1 + 0.1 * 3.0
        v = 0.999 * 0.001 + 0.001 * 9.0
        m_hat, v_hat = m / (1 - 0.9 ** 2), v / (1 - 0.999 ** 2)
        assert p["x"][0] == pytest.approx(-0.1 - 0.1 * m_hat / (np.sqrt(v_hat) + 1e-8))

    def test_decay_mask_only(self):
        p = {"W0": np.array([1.0]), "features": np.array([1.0])}
        state = AdamState.for_parameters(p, decay_names=["W0"], lr=0.1, weight_decay=1.0)
        adam_step(p, {"W0": np.array([0.0]), "features": np.array([0.0])}, state)
        assert p["W0"][0] == pytest.approx(0.9)
        assert p["features"][0] == 1.0

    def test_gradient_shape_checked(self):
        p = {"W0": np.zeros(2)}
        state = AdamState.for_parameters(p)
        with pytest.raises(ShapeError):
            adam_step(p, {"W0": np.zeros(3)}, state)
        with pytest.raises(ShapeError):
            adam_step(p, {"W9": np.zeros(2)}, state)

    def test_training_reduces_loss(self):
        rng = np.random.default_rng(0)
        X = rng.uniform(-1, 1, size=(256, 2))
        y = np.sin(3 * X[:, 0]) * X[:, 1]
        mlp = Mlp.create(2, 32, 2, seed=0)
        state = AdamState.for_parameters(mlp.parameters(), mlp.decay_names(), lr=1e-2)
        first = mse_loss(mlp.predict(X), y)[0]
        for _ in range(200):
            grads = mlp_grads(mlp, X, y)
            adam_step(mlp.parameters(), grads.as_dict(), state)
            mlp.touch()
        assert mse_loss(mlp.predict(X), y)[0] < 0.5 * first

    def test_relative_error(self):
        assert relative_error([1.0, 2.0], [1.0, 2.0]) == 0.0
        assert relative_error([1.0], [1.1]) == pytest.approx(0.1 / 1.1)
        assert relative_error([], []) == 0.0
