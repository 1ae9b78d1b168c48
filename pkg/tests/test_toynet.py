from __future__ import annotations

import csv

import numpy as np
import pytest
from scipy.special import expit

from grec import lossmetrics as lm
from grec import toynet

from oracles import finite_difference_gradients, max_relative_gradient_error


def random_case(seed: int, m: int = 6, d: int = 4, h: int = 3, n: int = 5):
    rng = np.random.default_rng(seed)
    model = toynet.init_model(d, h, n, rng)
    x = rng.normal(size=(m, d))
    t = (rng.random((m, n)) < 0.4).astype(float)
    w = rng.uniform(0.5, 2.0, size=n)
    return model, x, t, w


class TestForward:
    def test_zero_parameters_give_half(self):
        model = toynet.ToyModel(np.zeros((3, 2)), np.zeros(2), np.zeros((2, 4)), np.zeros(4))
        _, outputs = toynet.forward([1.0, -2.0, 0.5], model)
        np.testing.assert_array_equal(outputs, np.full(4, 0.5))

    def test_large_bias_saturates(self):
        model = toynet.ToyModel(np.zeros((2, 2)), np.zeros(2), np.zeros((2, 3)), np.zeros(3))
        model.b2[1] = 10.0
        _, outputs = toynet.forward([0.0, 0.0], model)
        assert outputs[1] >= 0.9999

    def test_matches_straight_reimplementation(self):
        model, x, _, _ = random_case(2)
        hidden, outputs = toynet.forward(x, model)
        ref_hidden = np.maximum(x @ model.w1 + model.b1, 0.0)
        ref_out = np.clip(expit(ref_hidden @ model.w2 + model.b2), lm.CLIP_EPS, 1 - lm.CLIP_EPS)
        np.testing.assert_allclose(hidden, ref_hidden, rtol=0, atol=0)
        np.testing.assert_allclose(outputs, ref_out, rtol=0, atol=0)

    def test_dimension_mismatch(self):
        model, _, _, _ = random_case(0)
        with pytest.raises(ValueError):
            toynet.forward([1.0, 2.0], model)


class TestEmbed:
    def test_zero_input_zero_biases(self):
        rng = np.random.default_rng(0)
        model = toynet.init_model(3, 4, 2, rng)
        model.b1[:] = 0.0
        np.testing.assert_array_equal(toynet.embed(np.zeros(3), model), np.zeros(4))

    def test_embed_is_forward_hidden(self):
        model, x, _, _ = random_case(4)
        np.testing.assert_array_equal(toynet.embed(x[0], model), toynet.forward(x[0], model)[0])

    def test_purity_on_duplicates(self):
        model, x, _, _ = random_case(5)
        a = toynet.embed(x[0], model)
        b = toynet.embed(x[0].copy(), model)
        np.testing.assert_array_equal(a, b)


class TestGradients:
    def test_perfect_prediction_has_tiny_gradient(self):
        # Saturate outputs onto the targets so the loss sits at its floor.
        d, h, n = 2, 2, 3
        model = toynet.ToyModel(
            np.zeros((d, h)), np.ones(h), np.zeros((h, n)), np.array([40.0, -40.0, 40.0])
        )
        x = np.zeros((4, d))
        t = np.tile(np.array([1.0, 0.0, 1.0]), (4, 1))
        _, grads = toynet.gradients(model, x, t, np.ones(n), use_scaling=True)
        total = sum(float(np.abs(g).sum()) for g in grads.values())
        assert total <= 1e-6

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_finite_differences_scaled(self, seed):
        model, x, t, w = random_case(seed)
        _, analytic = toynet.gradients(model, x, t, w, use_scaling=True)
        numeric = finite_difference_gradients(model, x, t, w, use_scaling=True)
        assert max_relative_gradient_error(analytic, numeric) <= 1e-5

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_finite_differences_plain(self, seed):
        model, x, t, w = random_case(seed + 100)
        _, analytic = toynet.gradients(model, x, t, w, use_scaling=False)
        numeric = finite_difference_gradients(model, x, t, w, use_scaling=False)
        assert max_relative_gradient_error(analytic, numeric) <= 1e-5

    def test_loss_value_matches_batch_loss(self):
        model, x, t, w = random_case(9)
        loss, _ = toynet.gradients(model, x, t, w, use_scaling=True)
        assert loss == pytest.approx(toynet.batch_loss(model, x, t, w, True), rel=1e-12)

    def test_empty_batch_rejected(self):
        model, _, _, w = random_case(1)
        with pytest.raises(ValueError):
            toynet.gradients(model, np.empty((0, 4)), np.empty((0, 5)), w)


class TestTraining:
    def test_separable_loss_halves(self):
        x, t = toynet.make_separable_dataset(200, seed=0)
        config = toynet.TrainConfig(learning_rate=1.0, epochs=50, batch_size=32, seed=0)
        _, history = toynet.train(x, t, config, [1.0, 1.0], hidden_dim=8)
        assert len(history) == 50
        assert history[-1].loss < 0.5 * history[0].loss

    def test_scaling_factors_shrink_late_in_training(self):
        x, t = toynet.make_separable_dataset(200, seed=0)
        config = toynet.TrainConfig(learning_rate=1.0, epochs=50, batch_size=32, seed=0)
        _, history = toynet.train(x, t, config, [1.0, 1.0], hidden_dim=8)
        factors = [(1 - row.soft_f1) * (1 - row.soft_iou) for row in history[-10:]]
        assert all(b <= a for a, b in zip(factors, factors[1:]))

    def test_same_seed_bit_identical(self):
        x, t = toynet.make_separable_dataset(80, seed=1)
        config = toynet.TrainConfig(learning_rate=0.5, epochs=5, batch_size=16, seed=42)
        model_a, hist_a = toynet.train(x, t, config, [1.0, 1.0])
        model_b, hist_b = toynet.train(x, t, config, [1.0, 1.0])
        assert hist_a == hist_b
        for name in ("w1", "b1", "w2", "b2"):
            assert model_a.params()[name].tobytes() == model_b.params()[name].tobytes()

    def test_zero_learning_rate_keeps_loss_constant(self):
        x, t = toynet.make_separable_dataset(40, seed=2)
        config = toynet.TrainConfig(learning_rate=0.0, epochs=4, batch_size=8, seed=0)
        _, history = toynet.train(x, t, config, [1.0, 1.0])
        losses = {row.loss for row in history}
        assert len(losses) == 1

    def test_divergence_reports_epoch(self):
        x, t = toynet.make_separable_dataset(40, seed=3)
        x[7, 0] = np.inf  # poisoned feature turns the loss non-finite
        config = toynet.TrainConfig(learning_rate=0.1, epochs=10, batch_size=8, seed=0)
        with np.errstate(invalid="ignore"):
            with pytest.raises(toynet.TrainingDivergence) as info:
                toynet.train(x, t, config, [1.0, 1.0])
        assert info.value.epoch == 1


class TestSerialization:
    def test_model_json_round_trip_exact(self, tmp_path):
        model, _, _, _ = random_case(13)
        path = tmp_path / "model.json"
        toynet.save_model(model, path)
        again = toynet.load_model(path)
        for name in ("w1", "b1", "w2", "b2"):
            assert again.params()[name].tobytes() == model.params()[name].tobytes()

    def test_history_csv(self, tmp_path):
        history = [toynet.EpochStats(1, 0.5, 0.25, 0.125), toynet.EpochStats(2, 0.25, 0.5, 0.25)]
        path = tmp_path / "hist.csv"
        toynet.write_history(history, path)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["epoch", "loss", "soft_f1", "soft_iou"]
        assert float(rows[1][1]) == 0.5
        assert int(rows[2][0]) == 2

    def test_header_mismatch_rejected(self, tmp_path):
        model, _, _, _ = random_case(14)
        path = tmp_path / "model.json"
        toynet.save_model(model, path)
        obj = path.read_text().replace('"n_labels": 5', '"n_labels": 6')
        path.write_text(obj)
        with pytest.raises(Exception):
            toynet.load_model(path)
