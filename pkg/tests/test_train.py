import numpy as np
import pytest

from xnids.nn import TrainConfig, train
from xnids.nn.io import load_model_bundle, save_model_bundle
from xnids.nn.model import cnn_reference_spec, lstm_reference_spec
from xnids.nn.train import NonFiniteLoss


def toy_two_class(n=200, n_features=4, seed=0):
    """Linearly separable two-class set; a logistic-regression-style margin
    check below confirms separability before any network sees it."""
    rng = np.random.default_rng(seed)
    w = np.array([2.0, -1.5, 1.0, 0.5])
    x = rng.uniform(0, 1, size=(n, n_features))
    margin = x @ w - np.median(x @ w)
    keep = np.abs(margin) > 0.15
    x, margin = x[keep], margin[keep]
    y = (margin > 0).astype(np.int64)
    return x, y, w


def test_toy_set_is_separable():
    # a perfect linear separator exists: sorting by the generating score
    # splits the labels into a clean 0-block then 1-block
    x, y, w = toy_two_class()
    order = np.argsort(x @ w)
    assert np.all(np.diff(y[order]) >= 0)


class TestTraining:
    def test_toy_convergence_cnn(self):
        x, y, _ = toy_two_class()
        spec = cnn_reference_spec(input_length=4)
        config = TrainConfig(epochs=50, batch_size=32, seed=0)
        params, history = train(spec, x.reshape(-1, 4, 1), y, config)
        assert history.epoch_accuracy[-1] >= 0.99
        assert len(history.epoch_loss) == 50

    def test_toy_convergence_lstm(self):
        x, y, _ = toy_two_class()
        spec = lstm_reference_spec(n_features=4, dropout_rate=0.0)
        config = TrainConfig(epochs=50, batch_size=32, seed=0, loss="categorical_ce")
        params, history = train(spec, x.reshape(-1, 1, 4), y, config)
        assert history.epoch_accuracy[-1] >= 0.99

    def test_same_seed_bit_identical(self):
        x, y, _ = toy_two_class(n=120)
        spec = lstm_reference_spec(n_features=4, dropout_rate=0.3)
        config = TrainConfig(epochs=3, batch_size=16, seed=7)
        params_a, history_a = train(spec, x.reshape(-1, 1, 4), y, config)
        params_b, history_b = train(spec, x.reshape(-1, 1, 4), y, config)
        for la, lb in zip(params_a, params_b):
            for key in la:
                assert np.array_equal(la[key], lb[key]), key
        assert history_a.epoch_loss == history_b.epoch_loss

    def test_partial_batch_trained(self):
        # batch_size larger than the set: the single (partial) batch must
        # still produce an update.
        x, y, _ = toy_two_class(n=70)
        spec = cnn_reference_spec(input_length=4)
        shaped = x.reshape(-1, 4, 1)
        params, history = train(spec, shaped, y, TrainConfig(epochs=1, batch_size=1024, seed=3))
        frozen, _ = train(spec, shaped, y, TrainConfig(epochs=1, batch_size=1024, seed=3, learning_rate=0.0))
        changed = any(
            not np.array_equal(pa[k], pb[k]) for pa, pb in zip(params, frozen) for k in pa
        )
        assert changed
        assert 0.0 <= history.epoch_accuracy[0] <= 1.0

    def test_non_finite_loss_aborts(self):
        x, y, _ = toy_two_class(n=60)
        spec = cnn_reference_spec(input_length=4)
        config = TrainConfig(epochs=2, batch_size=16, seed=0, learning_rate=1e150)
        with pytest.raises((NonFiniteLoss, FloatingPointError)):
            train(spec, x.reshape(-1, 4, 1), y, config)

    def test_empty_training_set(self):
        spec = cnn_reference_spec(input_length=4)
        with pytest.raises(ValueError):
            train(spec, np.zeros((0, 4, 1)), np.zeros(0, dtype=np.int64), TrainConfig(epochs=1))


class TestModelBundle:
    def test_roundtrip(self, tmp_path):
        x, y, _ = toy_two_class(n=80)
        spec = cnn_reference_spec(input_length=4)
        config = TrainConfig(epochs=2, batch_size=32, seed=1)
        params, history = train(spec, x.reshape(-1, 4, 1), y, config)
        out = save_model_bundle(tmp_path / "m", spec, params, config, history)
        spec2, params2 = load_model_bundle(out)
        assert spec2 == spec
        for la, lb in zip(params, params2):
            for key in la:
                assert np.array_equal(la[key], lb[key])
        assert (out / "history.csv").read_text().startswith("epoch,loss,accuracy,seconds")
        assert (out / "train_config.json").exists()

    def test_version_check(self, tmp_path):
        import json

        x, y, _ = toy_two_class(n=60)
        spec = cnn_reference_spec(input_length=4)
        params, _ = train(spec, x.reshape(-1, 4, 1), y, TrainConfig(epochs=1, seed=0))
        out = save_model_bundle(tmp_path / "m", spec, params)
        meta = json.loads((out / "model.json").read_text())
        meta["version"] = 99
        (out / "model.json").write_text(json.dumps(meta))
        with pytest.raises(ValueError):
            load_model_bundle(out)
