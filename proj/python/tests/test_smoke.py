import math

import numpy as np
import pytest

import medfs


def test_penalties_and_threshold():
    assert medfs.clf_margin_penalty(0.0, 10.0) == 0.0
    c, eps = 10.0, 0.2
    assert medfs.reg_margin_penalty(0.0, c, eps) == pytest.approx(math.log(eps + 1.0 / c))
    assert medfs.feature_inclusion_prob(3.0, 0.5) == pytest.approx(0.989013, abs=1e-6)
    star = medfs.selection_threshold(0.01)
    assert medfs.feature_inclusion_prob(star, 0.01) == pytest.approx(0.5)


def test_dual_objective_gradient_matches_differences():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(6, 3))
    y = np.where(rng.normal(size=6) > 0, 1.0, -1.0)
    d = medfs.Dataset(x, y)
    h = medfs.Hyperparams()
    h.p0 = 0.1
    lam = rng.uniform(0.1, 1.0, size=6)
    value, grad = medfs.dual_objective(d, h, lam)
    step = 1e-6
    for k in range(6):
        e = np.zeros(6)
        e[k] = step
        fd = (medfs.dual_objective(d, h, lam + e)[0] - medfs.dual_objective(d, h, lam - e)[0]) / (2 * step)
        assert grad[k] == pytest.approx(fd, rel=1e-5, abs=1e-6)
    assert np.isfinite(value)


def test_fit_predict_round_trip(tmp_path):
    train, test, informative = medfs.gen_sparse_binary(train=80, test=60, n=12, k_informative=3)
    assert len(informative) == 3
    h = medfs.Hyperparams()
    h.p0 = 1e-3
    o = medfs.OptimizerConfig()
    o.method = medfs.Method.bounded_qp
    model = medfs.fit(train, h, o)
    assert model.converged
    assert model.W_tilde.shape == (12,)
    assert np.all(np.abs(model.W_tilde) <= np.abs(model.W) + 1e-15)

    scores = medfs.predict_scores(model, test.examples)
    labels = medfs.predict(model, test.examples)
    assert set(np.unique(labels)) <= {-1.0, 1.0}
    fpr, tpr, auc = medfs.roc_curve(scores, test.targets)
    assert 0.0 <= auc <= 1.0
    assert fpr[0] == 0.0 and tpr[-1] == 1.0

    path = tmp_path / "m.json"
    medfs.save_model(model, path)
    back = medfs.load_model(path)
    assert back.to_json() == model.to_json()
    with pytest.raises(medfs.InvalidArgument):
        medfs.load_model(path, medfs.Task.regression)


def test_regression_and_metrics():
    train, test = medfs.gen_housing_like(seed=3, train=60, test=20)
    model = medfs.fit(train, medfs.Hyperparams(), medfs.OptimizerConfig(), degree=1, standardize=True)
    pred = medfs.predict(model, test.examples)
    assert medfs.eps_insensitive_loss(pred, test.targets, 0.2) >= 0.0
    assert medfs.rmse(pred, pred) == 0.0
    x, frac = medfs.coefficient_cdf(model.W_tilde, 10)
    assert frac[-1] == 1.0


def test_invalid_arguments_raise():
    h = medfs.Hyperparams()
    h.p0 = 1.5
    with pytest.raises(medfs.InvalidArgument):
        h.validate()
    with pytest.raises(ValueError):
        medfs.Dataset(np.ones((2, 1)), np.array([1.0, 2.0]))
