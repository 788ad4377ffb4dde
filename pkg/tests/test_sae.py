"""Autoencoder training, gradients, encoding, and serialization."""

import numpy as np
import pytest

from survact.errors import DimensionError, TrainingDivergedError, ValidationError
from survact.sae import (
    SaeConfig,
    SaeWeights,
    _init_layers,
    _stack_widths,
    encode,
    loss_gradients,
    reconstruction_loss,
    train_sae,
)

ACTIVATION_AT_ZERO = {"sigmoid": 0.5, "tanh": 0.0, "relu": 0.0}


def _zero_weights(input_dim, encoder_widths, activation):
    widths = _stack_widths(input_dim, encoder_widths)
    layers = [(np.zeros((a, b)), np.zeros(b)) for a, b in zip(widths[:-1], widths[1:])]
    return SaeWeights(
        layer_sizes=tuple(encoder_widths),
        activation=activation,
        layers=layers,
        mean=np.zeros(input_dim),
        std=np.ones(input_dim),
    )


class TestForward:
    @pytest.mark.parametrize("activation", ["sigmoid", "tanh", "relu"])
    def test_zero_weights_encode_to_activation_of_zero(self, activation):
        weights = _zero_weights(4, (3, 2), activation)
        out = encode(weights, np.random.default_rng(0).standard_normal((5, 4)))
        assert out.shape == (5, 2)
        assert np.all(out == ACTIVATION_AT_ZERO[activation])

    def test_zero_weights_loss_is_second_moment(self):
        # zero output layer reconstructs 0, so the loss is E[x^2]
        rng = np.random.default_rng(1)
        x = rng.standard_normal((20, 4))
        weights = _zero_weights(4, (3, 2), "sigmoid")
        assert reconstruction_loss(weights.layers, x, "sigmoid") == pytest.approx(np.mean(x**2))

    def test_shape_chain(self):
        widths = _stack_widths(10, (6, 4, 2))
        assert widths == [10, 6, 4, 2, 4, 6, 10]
        layers = _init_layers(10, (6, 4, 2), np.random.default_rng(0))
        for (w, b), fan_in, fan_out in zip(layers, widths[:-1], widths[1:]):
            assert w.shape == (fan_in, fan_out)
            assert b.shape == (fan_out,)


class TestGradients:
    @pytest.mark.parametrize("activation", ["sigmoid", "tanh", "relu"])
    def test_matches_central_finite_differences(self, activation):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((7, 4))
        layers = _init_layers(4, (3, 2), rng)
        layers = [(w + rng.normal(0, 0.2, w.shape), b + rng.normal(0, 0.2, b.shape)) for w, b in layers]
        _, grads = loss_gradients(layers, x, activation)

        h = 1e-6
        for k, (w, b) in enumerate(layers):
            for idx in [(0, 0), (w.shape[0] - 1, w.shape[1] - 1)]:
                bumped_hi = [(wi.copy(), bi.copy()) for wi, bi in layers]
                bumped_lo = [(wi.copy(), bi.copy()) for wi, bi in layers]
                bumped_hi[k][0][idx] += h
                bumped_lo[k][0][idx] -= h
                num = (
                    reconstruction_loss(bumped_hi, x, activation)
                    - reconstruction_loss(bumped_lo, x, activation)
                ) / (2 * h)
                assert grads[k][0][idx] == pytest.approx(num, rel=1e-4, abs=1e-8)
            bumped_hi = [(wi.copy(), bi.copy()) for wi, bi in layers]
            bumped_lo = [(wi.copy(), bi.copy()) for wi, bi in layers]
            bumped_hi[k][1][0] += h
            bumped_lo[k][1][0] -= h
            num = (
                reconstruction_loss(bumped_hi, x, activation)
                - reconstruction_loss(bumped_lo, x, activation)
            ) / (2 * h)
            assert grads[k][1][0] == pytest.approx(num, rel=1e-4, abs=1e-8)


class TestTraining:
    def test_rank_one_data_compresses_to_one_dimension(self):
        rng = np.random.default_rng(3)
        direction = rng.standard_normal(6)
        scales = rng.standard_normal(64)
        x = np.outer(scales, direction)
        config = SaeConfig(layer_sizes=(1,), activation="tanh", epochs=400, batch_size=16, learning_rate=0.05, seed=0)
        weights = train_sae(x, config)
        history = weights.training_loss_history
        assert history[-1] <= 0.05 * history[0]

    def test_loss_trend_downward(self):
        rng = np.random.default_rng(4)
        basis = rng.standard_normal((3, 8))
        x = rng.standard_normal((80, 3)) @ basis  # rank-3 structure in 8 dims
        config = SaeConfig(layer_sizes=(5, 3), activation="tanh", epochs=100, batch_size=16, learning_rate=0.02, seed=1)
        weights = train_sae(x, config)
        history = np.array(weights.training_loss_history)
        tail = max(1, len(history) // 10)
        assert history[-tail:].mean() < history[:tail].mean()
        assert history[-1] < history[0]

    def test_deterministic(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((40, 5))
        config = SaeConfig(layer_sizes=(3, 2), epochs=30, seed=9)
        w1 = train_sae(x, config)
        w2 = train_sae(x, config)
        for (a, b), (c, d) in zip(w1.layers, w2.layers):
            assert np.array_equal(a, c) and np.array_equal(b, d)

    def test_divergence_reports_epoch(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((30, 4)) * 10
        config = SaeConfig(layer_sizes=(3,), activation="relu", epochs=50, learning_rate=1e4, seed=0)
        with pytest.raises(TrainingDivergedError) as err:
            train_sae(x, config)
        assert err.value.epoch >= 0

    def test_latent_must_shrink(self):
        with pytest.raises(ValidationError):
            train_sae(np.zeros((5, 3)), SaeConfig(layer_sizes=(4,), epochs=1))

    def test_standardization_stored(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((50, 4)) * 7.0 + 3.0
        weights = train_sae(x, SaeConfig(layer_sizes=(2,), epochs=5, seed=0))
        np.testing.assert_allclose(weights.mean, x.mean(axis=0))
        np.testing.assert_allclose(weights.std, x.std(axis=0))


class TestEncode:
    @pytest.fixture()
    def weights(self):
        rng = np.random.default_rng(11)
        return train_sae(rng.standard_normal((60, 6)), SaeConfig(layer_sizes=(4, 2), epochs=10, seed=2))

    def test_output_width_is_latent_dim(self, weights):
        out = encode(weights, np.random.default_rng(0).standard_normal((9, 6)))
        assert out.shape == (9, 2)

    def test_row_concatenation_equivariance(self, weights):
        rng = np.random.default_rng(12)
        a = rng.standard_normal((4, 6))
        b = rng.standard_normal((3, 6))
        combined = encode(weights, np.vstack([a, b]))
        np.testing.assert_array_equal(combined, np.vstack([encode(weights, a), encode(weights, b)]))

    def test_pure_function(self, weights):
        x = np.random.default_rng(13).standard_normal((5, 6))
        np.testing.assert_array_equal(encode(weights, x), encode(weights, x))

    def test_dimension_mismatch(self, weights):
        with pytest.raises(DimensionError):
            encode(weights, np.zeros((3, 5)))

    def test_save_load_round_trip(self, weights, tmp_path):
        path = tmp_path / "weights.json"
        weights.save(path)
        loaded = SaeWeights.load(path)
        x = np.random.default_rng(14).standard_normal((4, 6))
        np.testing.assert_array_equal(encode(weights, x), encode(loaded, x))
