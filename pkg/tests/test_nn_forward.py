import numpy as np
import pytest

from tests.conftest import Stack
from xnids.nn import (
    Conv1D,
    Dense,
    Flatten,
    LSTMLayer,
    MaxPool1D,
    Softmax,
    cross_entropy,
    forward,
    init_params,
    predict_class,
)
from xnids.nn.layers import lstm_step
from xnids.nn.losses import InvalidTarget, onehot_encode
from xnids.nn.model import NonFiniteActivation, ShapeMismatch, cnn_reference_spec, lstm_reference_spec


def zero_params_like(params):
    return [{k: np.zeros_like(v) for k, v in layer.items()} for layer in params]


# ---------------------------------------------------------------------------
# Straight-line reimplementations (oracle: same arithmetic, naive loops)


def naive_dense(x, w, b, act):
    n, d = x.shape
    units = w.shape[1]
    out = np.zeros((n, units))
    for i in range(n):
        for u in range(units):
            s = b[u]
            for j in range(d):
                s += x[i, j] * w[j, u]
            out[i, u] = s
    if act == "relu":
        out = np.where(out > 0, out, 0.0)
    elif act == "tanh":
        out = np.tanh(out)
    return out


def naive_conv1d(x, w, b, stride, padding):
    n, length, c_in = x.shape
    k, _, f = w.shape
    if padding == "same":
        length_out = -(-length // stride)
        pad_total = max(0, (length_out - 1) * stride + k - length)
        left = pad_total // 2
        xp = np.zeros((n, length + pad_total, c_in))
        xp[:, left : left + length, :] = x
    else:
        xp = x
        length_out = (length - k) // stride + 1
    out = np.zeros((n, length_out, f))
    for i in range(n):
        for t in range(length_out):
            for ff in range(f):
                s = b[ff]
                for j in range(k):
                    for c in range(c_in):
                        s += xp[i, t * stride + j, c] * w[j, c, ff]
                out[i, t, ff] = s
    return out


def naive_maxpool(x, window, stride):
    n, length, c = x.shape
    length_out = (length - window) // stride + 1
    out = np.zeros((n, length_out, c))
    for i in range(n):
        for t in range(length_out):
            for ch in range(c):
                out[i, t, ch] = max(x[i, t * stride + j, ch] for j in range(window))
    return out


def naive_softmax(z):
    out = np.zeros_like(z)
    for i in range(z.shape[0]):
        e = np.exp(z[i] - z[i].max())
        out[i] = e / e.sum()
    return out


def sigmoid(v):
    return 1.0 / (1.0 + np.exp(-v))


class TestForwardContracts:
    def test_zero_params_uniform_output(self):
        spec = cnn_reference_spec()
        params = zero_params_like(init_params(spec, seed=0))
        x = np.random.default_rng(0).random((6, 41, 1))
        probs = forward(spec, params, x)
        assert np.allclose(probs, 0.2)

    def test_rows_sum_to_one(self, rng):
        for spec in (cnn_reference_spec(), lstm_reference_spec()):
            params = init_params(spec, seed=3)
            x = rng.random((10,) + spec.input_shape)
            probs = forward(spec, params, x)
            assert np.all(probs >= 0)
            assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-9)

    def test_infer_deterministic(self, rng):
        spec = lstm_reference_spec()  # has dropout layers
        params = init_params(spec, seed=1)
        x = rng.random((5, 1, 41))
        assert np.array_equal(forward(spec, params, x), forward(spec, params, x))

    def test_train_mode_dropout_differs_from_infer(self, rng):
        spec = lstm_reference_spec(dropout_rate=0.5)
        params = init_params(spec, seed=1)
        x = rng.random((5, 1, 41))
        train_out = forward(spec, params, x, mode="train", rng=np.random.default_rng(0))
        infer_out = forward(spec, params, x, mode="infer")
        assert not np.allclose(train_out, infer_out)

    def test_shape_mismatch(self, rng):
        spec = cnn_reference_spec()
        params = init_params(spec, seed=0)
        with pytest.raises(ShapeMismatch):
            forward(spec, params, rng.random((4, 40, 1)))

    def test_non_finite_activation_detected(self, rng):
        spec = cnn_reference_spec()
        params = init_params(spec, seed=0)
        params[0]["W"][0, 0, 0] = np.nan
        with pytest.raises(NonFiniteActivation):
            forward(spec, params, rng.random((2, 41, 1)))

    def test_forward_matches_naive_reimplementation(self, rng):
        spec = Stack(
            layers=(
                Conv1D(5, kernel_width=3, padding="same", activation="relu"),
                MaxPool1D(2),
                Conv1D(4, kernel_width=3, padding="valid", activation="tanh"),
                Flatten(),
                Dense(6, activation="relu"),
                Dense(5, activation="linear"),
                Softmax(),
            ),
            input_shape=(12, 2),
        )
        params = init_params(spec, seed=9)
        x = rng.standard_normal((4, 12, 2))

        h = naive_conv1d(x, params[0]["W"], params[0]["b"], 1, "same")
        h = np.where(h > 0, h, 0.0)
        h = naive_maxpool(h, 2, 2)
        h = np.tanh(naive_conv1d(h, params[2]["W"], params[2]["b"], 1, "valid"))
        h = h.reshape(4, -1)
        h = naive_dense(h, params[4]["W"], params[4]["b"], "relu")
        h = naive_dense(h, params[5]["W"], params[5]["b"], "linear")
        expected = naive_softmax(h)

        actual = forward(spec, params, x)
        assert np.allclose(actual, expected, atol=1e-10)


class TestLstmStep:
    def test_zero_everything(self):
        params = {
            f"{g}_{t}": np.zeros((3, 3) if g in ("W", "U") else 3)
            for g in ("W", "U", "b")
            for t in ("i", "f", "o", "c")
        }
        h, c, _ = lstm_step(np.zeros((2, 3)), np.zeros((2, 3)), np.zeros((2, 3)), params)
        assert np.allclose(c, 0.0)
        assert np.allclose(h, 0.0)

    def test_zero_weights_halve_cell(self):
        params = {
            f"{g}_{t}": np.zeros((3, 3) if g in ("W", "U") else 3)
            for g in ("W", "U", "b")
            for t in ("i", "f", "o", "c")
        }
        c_prev = np.array([[1.0, -2.0, 0.5]])
        h, c, _ = lstm_step(np.zeros((1, 3)), np.zeros((1, 3)), c_prev, params)
        assert np.allclose(c, 0.5 * c_prev)  # f = sigmoid(0) = 0.5, i*g = 0

    def test_matches_scalar_gate_arithmetic(self, rng):
        n_in, h_units = 4, 3
        params = {}
        for gate in ("i", "f", "o", "c"):
            params[f"W_{gate}"] = rng.standard_normal((n_in, h_units))
            params[f"U_{gate}"] = rng.standard_normal((h_units, h_units))
            params[f"b_{gate}"] = rng.standard_normal(h_units)
        x = rng.standard_normal((1, n_in))
        h_prev = rng.standard_normal((1, h_units))
        c_prev = rng.standard_normal((1, h_units))

        # scalar re-evaluation, unit by unit
        expected_h = np.zeros(h_units)
        expected_c = np.zeros(h_units)
        for u in range(h_units):
            def gate(name):
                s = params[f"b_{name}"][u]
                for j in range(n_in):
                    s += x[0, j] * params[f"W_{name}"][j, u]
                for j in range(h_units):
                    s += h_prev[0, j] * params[f"U_{name}"][j, u]
                return s

            i = sigmoid(gate("i"))
            f = sigmoid(gate("f"))
            o = sigmoid(gate("o"))
            g = np.tanh(gate("c"))
            expected_c[u] = f * c_prev[0, u] + i * g
            expected_h[u] = o * np.tanh(expected_c[u])

        h, c, _ = lstm_step(x, h_prev, c_prev, params)
        assert np.allclose(c[0], expected_c, atol=1e-12)
        assert np.allclose(h[0], expected_h, atol=1e-12)

    def test_final_state_only_matters_without_sequences(self, rng):
        # Output with return_sequences=False equals the last row of the
        # return_sequences=True output.
        from xnids.nn.layers import FORWARD, init_layer_params

        params = init_layer_params(LSTMLayer(4), (3, 2), np.random.default_rng(2))
        x = rng.standard_normal((2, 3, 2))
        seq_out, _ = FORWARD[LSTMLayer](LSTMLayer(4, return_sequences=True), params, x, "infer", None)
        last_out, _ = FORWARD[LSTMLayer](LSTMLayer(4, return_sequences=False), params, x, "infer", None)
        assert np.allclose(seq_out[:, -1, :], last_out)


class TestConvExamples:
    def test_identity_kernel(self):
        x = np.arange(8, dtype=float).reshape(1, 8, 1)
        w = np.array([0.0, 1.0, 0.0]).reshape(3, 1, 1)
        spec = Conv1D(1, kernel_width=3, padding="same", activation="linear")
        from xnids.nn.layers import FORWARD

        out, _ = FORWARD[Conv1D](spec, {"W": w, "b": np.zeros(1)}, x, "infer", None)
        assert np.allclose(out, x)

    def test_adjacent_sums(self):
        x = np.array([1.0, 2.0, 3.0, 4.0]).reshape(1, 4, 1)
        w = np.ones((2, 1, 1))
        spec = Conv1D(1, kernel_width=2, padding="valid", activation="linear")
        from xnids.nn.layers import FORWARD

        out, _ = FORWARD[Conv1D](spec, {"W": w, "b": np.zeros(1)}, x, "infer", None)
        assert np.allclose(out.ravel(), [3.0, 5.0, 7.0])

    def test_random_case_matches_naive(self, rng):
        x = rng.standard_normal((3, 10, 2))
        w = rng.standard_normal((3, 2, 4))
        b = rng.standard_normal(4)
        spec = Conv1D(4, kernel_width=3, stride=2, padding="valid", activation="linear")
        from xnids.nn.layers import FORWARD

        out, _ = FORWARD[Conv1D](spec, {"W": w, "b": b}, x, "infer", None)
        assert np.allclose(out, naive_conv1d(x, w, b, 2, "valid"), atol=1e-12)


class TestCrossEntropy:
    def test_perfect_prediction(self):
        probs = onehot_encode(np.array([0, 1, 2]), 5)
        assert cross_entropy(probs, np.array([0, 1, 2])) <= 1e-9

    def test_uniform_prediction(self):
        probs = np.full((4, 5), 0.2)
        assert cross_entropy(probs, np.array([0, 1, 2, 3])) == pytest.approx(np.log(5), abs=1e-12)

    def test_sparse_equals_onehot(self, rng):
        probs = rng.random((6, 5))
        probs /= probs.sum(axis=1, keepdims=True)
        y = rng.integers(0, 5, 6)
        assert cross_entropy(probs, y) == pytest.approx(
            cross_entropy(probs, onehot_encode(y, 5)), abs=1e-12
        )

    def test_invalid_target(self):
        probs = np.full((2, 5), 0.2)
        with pytest.raises(InvalidTarget):
            cross_entropy(probs, np.array([0, 7]))


class TestPredictClass:
    def test_argmax(self):
        spec = cnn_reference_spec()
        row = np.array([[0.1, 0.7, 0.1, 0.05, 0.05]])
        assert np.argmax(row, axis=1)[0] == 1

    def test_tie_breaks_low(self, rng):
        spec = cnn_reference_spec()
        params = zero_params_like(init_params(spec, seed=0))
        x = rng.random((3, 41, 1))
        assert np.array_equal(predict_class(spec, params, x), [0, 0, 0])

    def test_batch_length(self, rng):
        spec = lstm_reference_spec()
        params = init_params(spec, seed=0)
        labels = predict_class(spec, params, rng.random((17, 1, 41)))
        assert labels.shape == (17,)
        assert np.all((labels >= 0) & (labels <= 4))
