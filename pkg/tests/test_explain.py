import numpy as np
import pytest

from xnids.explain import (
    BackgroundSet,
    DegenerateCoalition,
    EmptyAttributionSet,
    InsufficientCoalitions,
    ModelEvaluationFailure,
    TooManyFeatures,
    exact_shap_bruteforce,
    explain_batch,
    instance_seed,
    kernel_shap,
    kernel_shap_all_classes,
    masked_prediction,
    sample_background,
    shapley_kernel_weight,
    summarize,
)


def single_output(fn):
    """Wrap a scalar function of rows into the (n, 1) model surface."""

    def model(rows):
        return np.asarray(fn(rows)).reshape(-1, 1)

    return model


def random_softmax_model(m, k=3, seed=0):
    rng = np.random.default_rng(seed)
    w1 = rng.standard_normal((m, 2 * m))
    w2 = rng.standard_normal((2 * m, k))

    def model(rows):
        h = np.tanh(rows @ w1)
        e = np.exp(h @ w2)
        return e / e.sum(axis=1, keepdims=True)

    return model


class TestKernelWeight:
    def test_analytic_values(self):
        assert shapley_kernel_weight(4, 1) == pytest.approx(0.25)
        assert shapley_kernel_weight(4, 2) == pytest.approx(0.125)

    def test_symmetry(self, rng):
        for _ in range(20):
            m = int(rng.integers(3, 30))
            s = int(rng.integers(1, m))
            assert shapley_kernel_weight(m, s) == pytest.approx(shapley_kernel_weight(m, m - s))

    def test_degenerate(self):
        for s in (0, 5):
            with pytest.raises(DegenerateCoalition):
                shapley_kernel_weight(5, s)


class TestMaskedPrediction:
    def test_all_ones_is_fx(self, rng):
        model = random_softmax_model(6, seed=1)
        x = rng.standard_normal(6)
        bg = BackgroundSet(rng.standard_normal((7, 6)))
        assert masked_prediction(model, x, np.ones(6), bg, 2) == pytest.approx(
            model(x[None])[0, 2], abs=1e-12
        )

    def test_all_zeros_is_background_mean(self, rng):
        model = random_softmax_model(6, seed=2)
        x = rng.standard_normal(6)
        bg = BackgroundSet(rng.standard_normal((7, 6)))
        assert masked_prediction(model, x, np.zeros(6), bg, 0) == pytest.approx(
            model(bg.matrix)[:, 0].mean(), abs=1e-12
        )

    def test_single_row_midpoint(self, rng):
        model = single_output(lambda rows: rows.sum(axis=1))
        x = np.array([1.0, 2.0, 3.0])
        bg = BackgroundSet(np.array([[10.0, 20.0, 30.0]]))
        z = np.array([1, 0, 1])
        assert masked_prediction(model, x, z, bg, 0) == pytest.approx(1 + 20 + 3, abs=1e-12)

    def test_model_failure_surfaces(self):
        def broken(rows):
            raise RuntimeError("boom")

        with pytest.raises(ModelEvaluationFailure):
            masked_prediction(broken, np.zeros(3), np.ones(3), BackgroundSet(np.zeros((1, 3))), 0)


class TestKernelShap:
    def test_linear_closed_form(self):
        model = single_output(lambda rows: 2 * rows[:, 0] + 3 * rows[:, 1])
        bg = BackgroundSet(np.zeros((1, 2)))
        av = kernel_shap(model, np.array([1.0, 1.0]), bg, 0, n_coalitions=16)
        assert av.phi == pytest.approx([2.0, 3.0], abs=1e-9)
        assert av.base_value == pytest.approx(0.0, abs=1e-12)

    def test_linear_closed_form_general_background(self, rng):
        w = rng.standard_normal(7)
        b_rows = rng.standard_normal((5, 7))
        model = single_output(lambda rows: rows @ w)
        x = rng.standard_normal(7)
        av = kernel_shap(model, x, BackgroundSet(b_rows), 0, n_coalitions=4096)
        expected = w * (x - b_rows.mean(axis=0))
        assert av.phi == pytest.approx(expected, abs=1e-9)

    def test_symmetry(self):
        model = single_output(lambda rows: rows[:, 0] + rows[:, 1])
        bg = BackgroundSet(np.zeros((1, 2)))
        av = kernel_shap(model, np.array([1.0, 1.0]), bg, 0, n_coalitions=16)
        assert av.phi[0] == pytest.approx(av.phi[1], abs=1e-9)

    def test_full_enumeration_matches_bruteforce(self, rng):
        for m in (5, 8, 10):
            model = random_softmax_model(m, seed=m)
            x = rng.standard_normal(m)
            bg = BackgroundSet(rng.standard_normal((6, m)))
            for c in range(3):
                kernel = kernel_shap(model, x, bg, c, n_coalitions=2048)
                brute = exact_shap_bruteforce(model, x, bg, c)
                assert np.abs(kernel.phi - brute.phi).max() < 1e-6

    def test_sampled_local_accuracy_still_exact(self, rng):
        m = 20
        model = random_softmax_model(m, seed=4)
        x = rng.standard_normal(m)
        bg = BackgroundSet(rng.standard_normal((10, m)))
        av = kernel_shap(model, x, bg, 1, n_coalitions=400, seed=5)
        assert av.local_accuracy_gap() < 1e-12

    def test_missingness_sampled(self, rng):
        m = 16
        model = random_softmax_model(m, seed=6)
        x = rng.standard_normal(m)
        bgm = rng.standard_normal((5, m))
        bgm[:, 4] = x[4]
        bgm[:, 9] = x[9]
        av = kernel_shap(model, x, BackgroundSet(bgm), 0, n_coalitions=300, seed=1)
        assert av.phi[4] == 0.0
        assert av.phi[9] == 0.0

    def test_insufficient_coalitions(self, rng):
        m = 20
        model = random_softmax_model(m, seed=0)
        with pytest.raises(InsufficientCoalitions):
            kernel_shap(model, rng.standard_normal(m), BackgroundSet(rng.standard_normal((3, m))), 0, n_coalitions=10)

    def test_determinism(self, rng):
        m = 14
        model = random_softmax_model(m, seed=2)
        x = rng.standard_normal(m)
        bg = BackgroundSet(rng.standard_normal((4, m)))
        a = kernel_shap(model, x, bg, 0, n_coalitions=128, seed=9)
        b = kernel_shap(model, x, bg, 0, n_coalitions=128, seed=9)
        assert np.array_equal(a.phi, b.phi)

    def test_base_values_sum_to_one_across_classes(self, rng):
        model = random_softmax_model(8, k=5, seed=3)
        x = rng.standard_normal(8)
        bg = BackgroundSet(rng.standard_normal((9, 8)))
        results = kernel_shap_all_classes(model, x, bg, n_coalitions=512)
        assert sum(a.base_value for a in results) == pytest.approx(1.0, abs=1e-9)

    def test_singular_system_ridge_fallback(self):
        from xnids.explain import _solve_constrained_wls

        # two identical regression columns make the normal equations singular
        z_rows = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 1.0], [0.0, 0.0, 0.0]])
        weights = np.ones(4)
        values = np.array([2.0, 1.0, 3.0, 0.0])
        phi, ridge = _solve_constrained_wls(z_rows, weights, values, total=3.0)
        assert ridge
        assert np.all(np.isfinite(phi))
        assert phi.sum() == pytest.approx(3.0, abs=1e-6)  # constraint still enforced


class TestBruteForce:
    def test_constant_model(self, rng):
        model = single_output(lambda rows: np.full(rows.shape[0], 0.7))
        x = rng.standard_normal(5)
        bg = BackgroundSet(rng.standard_normal((4, 5)))
        av = exact_shap_bruteforce(model, x, bg, 0)
        assert np.allclose(av.phi, 0.0)
        assert av.base_value == pytest.approx(0.7)

    def test_missingness_exact(self, rng):
        model = random_softmax_model(6, seed=8)
        x = rng.standard_normal(6)
        bgm = rng.standard_normal((3, 6))
        bgm[:, 2] = x[2]
        av = exact_shap_bruteforce(model, x, BackgroundSet(bgm), 0)
        assert av.phi[2] == pytest.approx(0.0, abs=1e-15)

    def test_efficiency_exact(self, rng):
        model = random_softmax_model(7, seed=9)
        x = rng.standard_normal(7)
        bg = BackgroundSet(rng.standard_normal((5, 7)))
        av = exact_shap_bruteforce(model, x, bg, 1)
        assert av.phi.sum() == pytest.approx(av.prediction - av.base_value, abs=1e-12)

    def test_linearity(self, rng):
        x = rng.standard_normal(5)
        bg = BackgroundSet(rng.standard_normal((4, 5)))
        wf = rng.standard_normal(5)
        wg = rng.standard_normal(5)
        f = single_output(lambda rows: np.sin(rows @ wf))
        g = single_output(lambda rows: np.cos(rows @ wg))
        fg = single_output(lambda rows: np.sin(rows @ wf) + np.cos(rows @ wg))
        phi_f = exact_shap_bruteforce(f, x, bg, 0).phi
        phi_g = exact_shap_bruteforce(g, x, bg, 0).phi
        phi_fg = exact_shap_bruteforce(fg, x, bg, 0).phi
        assert np.allclose(phi_fg, phi_f + phi_g, atol=1e-12)

    def test_too_many_features(self, rng):
        model = single_output(lambda rows: rows.sum(axis=1))
        with pytest.raises(TooManyFeatures):
            exact_shap_bruteforce(model, np.zeros(13), BackgroundSet(np.zeros((1, 13))), 0)


class TestBatchAndSummary:
    def test_batch_of_one_equals_single_call(self, rng):
        m = 12
        model = random_softmax_model(m, seed=1)
        x = rng.standard_normal((1, m))
        bg = BackgroundSet(rng.standard_normal((5, m)))
        batch = explain_batch(model, x, bg, n_coalitions=200, seed=11)
        single = kernel_shap_all_classes(model, x[0], bg, 200, instance_seed(11, 0))
        for a, b in zip(batch[0], single):
            assert np.array_equal(a.phi, b.phi)

    def test_batch_shape(self, rng):
        model = random_softmax_model(6, k=5, seed=2)
        x = rng.standard_normal((4, 6))
        bg = BackgroundSet(rng.standard_normal((3, 6)))
        out = explain_batch(model, x, bg, n_coalitions=128, seed=0)
        assert len(out) == 4
        assert all(len(per_instance) == 5 for per_instance in out)

    def test_threaded_matches_serial(self, rng):
        model = random_softmax_model(8, k=3, seed=3)
        x = rng.standard_normal((6, 8))
        bg = BackgroundSet(rng.standard_normal((4, 8)))
        serial = explain_batch(model, x, bg, n_coalitions=128, seed=2, n_jobs=1)
        threaded = explain_batch(model, x, bg, n_coalitions=128, seed=2, n_jobs=3)
        for pa, pb in zip(serial, threaded):
            for a, b in zip(pa, pb):
                assert np.array_equal(a.phi, b.phi)

    def test_local_accuracy_all(self, rng):
        model = random_softmax_model(10, k=5, seed=4)
        x = rng.standard_normal((5, 10))
        bg = BackgroundSet(rng.standard_normal((6, 10)))
        out = explain_batch(model, x, bg, n_coalitions=256, seed=0)
        for per_instance in out:
            for a in per_instance:
                assert a.local_accuracy_gap() < 1e-3

    def test_summarize_single(self, rng):
        model = random_softmax_model(5, seed=5)
        x = rng.standard_normal((1, 5))
        bg = BackgroundSet(rng.standard_normal((3, 5)))
        out = explain_batch(model, x, bg, n_coalitions=64, seed=0)
        summary = summarize(out[0], class_index=0)
        expected_rank = np.argsort(-np.abs(out[0][0].phi), kind="stable")
        assert np.array_equal(summary.ranking, expected_rank)

    def test_summarize_opposite_signs(self):
        from xnids.explain import AttributionVector

        a = AttributionVector(0, 0.0, np.array([1.0, 0.0]), 1.0)
        b = AttributionVector(0, 0.0, np.array([-1.0, 0.0]), -1.0)
        summary = summarize([a, b], class_index=0)
        assert summary.mean_abs_phi[0] == pytest.approx(1.0)  # mean of magnitudes

    def test_summarize_empty(self):
        with pytest.raises(EmptyAttributionSet):
            summarize([], class_index=0)

    def test_sample_background(self, rng):
        train = rng.standard_normal((50, 6))
        bg = sample_background(train, size=10, seed=4)
        assert bg.matrix.shape == (10, 6)
        # rows drawn from the training matrix
        for row in bg.matrix:
            assert any(np.array_equal(row, t) for t in train)
        again = sample_background(train, size=10, seed=4)
        assert np.array_equal(bg.matrix, again.matrix)
