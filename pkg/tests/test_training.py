import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from flowlaw import FlowStressRegressor, JohnsonCookLaw
from flowlaw.johnson_cook import STEEL_42CRMO4 as P, jc_flow_stress
from flowlaw.training import (
    Dataset,
    TrainConfig,
    aare,
    default_ranges,
    evaluate,
    generate_test_set,
    init_model,
    loss_and_gradient,
    loss_erms,
    train_adam,
    write_history,
)


def gradient_error(model, data, h=1e-5):
    """Max relative deviation of the backprop gradient from central differences."""
    theta = model.to_vector()
    _, grad = loss_and_gradient(model, data)
    fd = np.empty_like(theta)
    for k in range(theta.size):
        tp, tm = theta.copy(), theta.copy()
        tp[k] += h
        tm[k] -= h
        fd[k] = (loss_and_gradient(model.with_parameters(tp), data)[0]
                 - loss_and_gradient(model.with_parameters(tm), data)[0]) / (2 * h)
    return np.max(np.abs(grad - fd) / np.maximum(np.abs(fd), 1e-8))


@pytest.fixture(scope="module")
def small():
    return generate_test_set(P, count=40, seed=7)


def test_grid_shape(grid):
    assert len(grid) == 2520 == 70 * 6 * 6
    assert (grid.eps_p[0], grid.rate[0], grid.T[0], grid.sigma[0]) == (0.0, 1.0, 20.0, 806.0)
    assert set(grid.rate) == {1.0, 10.0, 50.0, 500.0, 5000.0, 50000.0}
    assert set(grid.T) == {20.0, 100.0, 200.0, 300.0, 400.0, 500.0}
    assert grid.derivs is None


def test_test_set(test_set):
    assert len(test_set) == 5000
    assert np.all(np.isfinite(test_set.sigma)) and np.all(test_set.sigma > 0)
    assert test_set.derivs.shape == (5000, 3)
    assert test_set.rate.min() >= 1.0 and test_set.rate.max() <= 5e4
    again = generate_test_set(P, count=5000, seed=0)
    np.testing.assert_array_equal(again.X, test_set.X)
    assert not np.array_equal(generate_test_set(P, count=5000, seed=1).X, test_set.X)


def test_test_set_derivatives_match_differences(test_set):
    e, r, T = test_set.eps_p[:200], test_set.rate[:200], test_set.T[:200]
    f = lambda *a: jc_flow_stress(P, *a)
    fd = np.column_stack([
        (f(e * (1 + 1e-6), r, T) - f(e * (1 - 1e-6), r, T)) / (2e-6 * e),
        (f(e, r * (1 + 1e-6), T) - f(e, r * (1 - 1e-6), T)) / (2e-6 * r),
        (f(e, r, T * (1 + 1e-6)) - f(e, r, T * (1 - 1e-6))) / (2e-6 * T),
    ])
    keep = (r > 1.0 + 1e-5) & (T > 20.0 + 1e-3)
    np.testing.assert_allclose(test_set.derivs[:200][keep], fd[keep], rtol=1e-5)


def test_linear_rate_sampling_option():
    data = generate_test_set(P, count=2000, seed=3, rate_sampling="linear")
    assert np.median(data.rate) > 1e4
    with pytest.raises(ValueError):
        generate_test_set(P, count=10, rate_sampling="cubic")


def test_csv_round_trip(tmp_path, small):
    path = tmp_path / "d.csv"
    small.to_csv(path)
    back = Dataset.from_csv(path)
    np.testing.assert_array_equal(back.X, small.X)
    np.testing.assert_array_equal(back.sigma, small.sigma)
    np.testing.assert_array_equal(back.derivs, small.derivs)
    assert back.digest() == small.digest()


def test_csv_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c,d\n1,2,3,4\n")
    with pytest.raises(ValueError, match="header"):
        Dataset.from_csv(path)


@pytest.mark.parametrize("pred, ref, expected", [
    ([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], 0.0),
    ([1.1, 2.1, 3.1], [1.0, 2.0, 3.0], 0.1),
    ([0.0, 1.0], [1.0, 0.0], 1.0),
])
def test_loss_erms(pred, ref, expected):
    assert loss_erms(pred, ref) == pytest.approx(expected, abs=1e-15)


def test_loss_erms_errors():
    with pytest.raises(ValueError):
        loss_erms([1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        loss_erms([], [])


def test_aare():
    ref = np.array([1.0, 2.0, 0.0, 4.0])
    value, excluded = aare(ref, 1.01 * ref)
    assert value == pytest.approx(1.0) and excluded == 1


def test_evaluate_reference_law_against_itself(small):
    report = evaluate(JohnsonCookLaw(), small)
    assert report.erms == 0.0
    assert (report.aare_sigma, report.aare_deps, report.aare_drate, report.aare_dT) == (0, 0, 0, 0)
    assert "d_sigma%" in report.format_table()


@pytest.mark.parametrize("widths", [(2,), (3, 2)])
@pytest.mark.parametrize("activation", ["tanh", "sigmoid"])
def test_backprop_gradient(small, widths, activation):
    for seed in range(3):
        model = init_model(widths, activation, default_ranges(P, small), seed=seed)
        rng = np.random.default_rng(seed)
        model = model.with_parameters(model.to_vector() + 0.3 * rng.normal(size=model.n_params))
        assert gradient_error(model, small) <= 1e-5


def test_zero_learning_rate_keeps_parameters(small):
    model = init_model((3, 2), "sigmoid", default_ranges(P, small))
    trained, history = train_adam(model, small, TrainConfig(iterations=1, learning_rate=0.0,
                                                            lr_final=0.0))
    np.testing.assert_array_equal(trained.to_vector(), model.to_vector())
    assert history == [(1, history[0][1])]


def test_training_is_deterministic_and_decreases_loss(small):
    model = init_model((5, 3), "sigmoid", default_ranges(P, small), seed=4)
    cfg = TrainConfig(iterations=300, report_stride=50, seed=4)
    a, hist_a = train_adam(model, small, cfg)
    b, hist_b = train_adam(model, small, cfg)
    np.testing.assert_array_equal(a.to_vector(), b.to_vector())
    assert hist_a == hist_b
    assert [it for it, _ in hist_a] == [1, 50, 100, 150, 200, 250, 300]
    assert hist_a[-1][1] < 0.5 * hist_a[0][1]
    assert a.provenance == {"seed": 4, "iterations": 300, "dataset_sha256": small.digest()}


def test_history_csv(tmp_path):
    path = tmp_path / "h.csv"
    write_history([(1, 0.5), (100, 0.25)], path)
    assert path.read_text() == "iter,erms\n1,0.5\n100,0.25\n"


def test_cosine_schedule_endpoints():
    cfg = TrainConfig(iterations=11, learning_rate=0.1, lr_final=0.001)
    assert cfg.step_size(1) == pytest.approx(0.1)
    assert cfg.step_size(11) == pytest.approx(0.001)
    assert cfg.step_size(6) == pytest.approx(0.0505)
    assert TrainConfig(schedule="constant").step_size(5000) == 0.1


@pytest.mark.parametrize("kwargs", [dict(iterations=0), dict(learning_rate=-1.0),
                                    dict(batch="mini"), dict(schedule="step")])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        TrainConfig(**kwargs)


def test_init_model_rejects_deep_nets():
    with pytest.raises(ValueError):
        init_model((3, 3, 3), "tanh", default_ranges(P, generate_test_set(P, count=5)))


def test_estimator_api(small):
    est = FlowStressRegressor(hidden_layer_sizes=(4, 3), max_iter=200)
    assert clone(est).get_params() == est.get_params()
    with pytest.raises(NotFittedError):
        est.predict(small.X)
    est.fit(small.X, small.sigma)
    assert est.model_.name == "3-4-3-1-sig"
    assert est.loss_curve_.size == 3 and est.n_features_in_ == 3
    pred = est.predict(small.X)
    assert pred.shape == (40,)
    np.testing.assert_array_equal(pred, est.model_(small.eps_p, small.rate, small.T)[0])
    assert est.predict_derivatives(small.X).shape == (40, 3)
    assert est.score(small.X, small.sigma) > 0.5


def test_estimator_input_checks(small):
    est = FlowStressRegressor(max_iter=5)
    with pytest.raises(ValueError, match="3 columns"):
        est.fit(small.X[:, :2], small.sigma)
    X = small.X.copy()
    X[0, 1] = 0.0
    with pytest.raises(ValueError, match="rates"):
        est.fit(X, small.sigma)


def test_estimator_wraps_trained_model(small):
    model = init_model((3,), "tanh", default_ranges(P, small))
    est = FlowStressRegressor.from_model(model)
    assert est.hidden_layer_sizes == (3,) and est.activation == "tanh"
    np.testing.assert_array_equal(est.predict(small.X), model(small.eps_p, small.rate, small.T)[0])
