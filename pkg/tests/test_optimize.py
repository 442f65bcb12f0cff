import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from plnnflat import kernels
from plnnflat._accel import HAS_NUMBA
from plnnflat.analysis import accuracy
from plnnflat.errors import DataError, ShapeError, TrainingDataError
from plnnflat.optimize import (AdamState, TrainConfig, adam_update, glorot_layers, logistic_fit,
                               logistic_gradient, logistic_objective, train_plnn)

from oracles import adam_reference, bce, central_gradient


# --------------------------------------------------------------------------
# Adam


def test_adam_zero_gradient_is_fixed_point():
    s = AdamState.start([1.0, -2.0, 3.0])
    for _ in range(50):
        s = adam_update(s, np.zeros(3))
    assert s.params.tolist() == [1.0, -2.0, 3.0]


def test_adam_first_step_has_learning_rate_magnitude():
    s = AdamState.start(np.zeros(4), learning_rate=0.02)
    s = adam_update(s, np.array([3.0, -0.5, 1e-3, 40.0]))
    # bias-corrected m/sqrt(v) is sign(g) on the first step, up to eps
    np.testing.assert_allclose(s.params, -0.02 * np.sign([3.0, -0.5, 1e-3, 40.0]), rtol=1e-4)


def test_adam_matches_scalar_reference():
    rng = np.random.default_rng(0)
    grads = rng.normal(size=(25, 5))
    s = AdamState.start(np.ones(5), learning_rate=0.05)
    for g in grads:
        s = adam_update(s, g)
    np.testing.assert_allclose(s.params, adam_reference(np.ones(5), grads, 0.05), rtol=0, atol=1e-14)
    assert s.step == 25


def test_adam_minimizes_quadratic():
    s = AdamState.start([5.0], learning_rate=0.05)
    for _ in range(500):
        s = adam_update(s, 2 * (s.params - 3.0))
    assert abs(s.params[0] - 3.0) < 1e-3


def test_adam_shape_mismatch():
    with pytest.raises(ShapeError):
        adam_update(AdamState.start(np.zeros(3)), np.zeros(2))


# --------------------------------------------------------------------------
# network training


def blobs(n=400, seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(-2.5, 0.6, size=(n // 2, 2)), rng.normal(2.5, 0.6, size=(n // 2, 2))])
    y = np.repeat([0, 1], n // 2)
    return X, y


def test_train_separable_blobs():
    X, y = blobs()
    net = train_plnn(X, y, TrainConfig((5,), epochs=50, seed=1))
    assert net.hidden_widths == [5]
    assert accuracy(net, X, y) >= 0.99


def test_train_is_deterministic():
    X, y = blobs(200)
    cfg = TrainConfig((4, 3), epochs=5, seed=7)
    assert train_plnn(X, y, cfg).to_dict() == train_plnn(X, y, cfg).to_dict()


def test_train_losses_are_finite_and_fall():
    X, y = blobs(200)
    losses = []
    train_plnn(X, y, TrainConfig((4,), epochs=10, seed=2), losses=losses)
    assert len(losses) == 10 and np.all(np.isfinite(losses))
    assert losses[-1] < losses[0]


@pytest.mark.skipif(not HAS_NUMBA, reason="numba not installed")
def test_backends_agree():
    X, y = blobs(120, seed=3)
    cfg = TrainConfig((6, 4), epochs=3, batch_size=4, seed=5)
    a = train_plnn(X, y, cfg, backend="numba")
    b = train_plnn(X, y, cfg, backend="numpy")
    for (wa, ba), (wb, bb) in zip(a.layers, b.layers):
        np.testing.assert_allclose(wa, wb, atol=1e-9)
        np.testing.assert_allclose(ba, bb, atol=1e-9)


def test_epoch_gradient_matches_finite_differences():
    # one full-batch step of the numpy kernel from a zero Adam state moves each
    # parameter by -lr * sign(grad); compare those signs with a numerical gradient
    rng = np.random.default_rng(1)
    X = rng.normal(size=(16, 3))
    y = (X[:, 0] * X[:, 1] > 0).astype(float)
    theta, dims = kernels.pack(glorot_layers([3, 4, 1], rng))

    def loss(t):
        (W1, b1), (W2, b2) = kernels.unpack(t, dims)
        h = np.maximum(X @ W1.T + b1, 0)
        z = (h @ W2.T + b2)[:, 0]
        return float(np.sum(np.logaddexp(0, z) - y * z))

    g = central_gradient(loss, theta.copy(), 1e-6)
    t0 = theta.copy()
    m, v = np.zeros_like(theta), np.zeros_like(theta)
    kernels.train_epoch_numpy(theta, m, v, 0, dims, X, y, np.arange(16, dtype=np.int64), 16,
                              1e-3, 0.9, 0.999, 1e-12)
    moved = np.abs(g) > 1e-6
    assert np.array_equal(np.sign(t0 - theta)[moved], np.sign(g)[moved])


def test_train_rejects_single_class():
    X, _ = blobs(40)
    with pytest.raises(TrainingDataError):
        train_plnn(X, np.zeros(40), TrainConfig((3,), epochs=1))


def test_train_rejects_empty():
    with pytest.raises(TrainingDataError):
        train_plnn(np.zeros((0, 2)), np.zeros(0), TrainConfig((3,), epochs=1))


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig((3, 0))
    with pytest.raises(ValueError):
        TrainConfig((3,), learning_rate=0)
    cfg = TrainConfig((4, 4), batch_size=32, seed=9)
    assert TrainConfig.from_dict(cfg.to_dict()) == cfg


# --------------------------------------------------------------------------
# logistic regression


def test_constant_zero_features_give_zero_fit():
    fit = logistic_fit(np.zeros((10, 3)), np.array([0, 1] * 5), l2=1.0)
    assert fit.converged
    assert np.all(np.abs(fit.w) < 1e-12) and abs(fit.b) < 1e-12


def test_separable_norm_grows_as_penalty_shrinks():
    x = np.linspace(-1, 1, 20)[:, None]
    y = (x[:, 0] > 0).astype(float)
    norms = []
    for l2 in (1.0, 0.1, 0.01):
        fit = logistic_fit(x, y, l2)
        assert fit.converged and np.all(np.isfinite(fit.w))
        norms.append(abs(fit.w[0]))
    assert norms[0] < norms[1] < norms[2]


def random_problem(seed, n=80, k=5):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, k))
    y = (rng.random(n) < 1 / (1 + np.exp(-X @ rng.normal(size=k)))).astype(float)
    return X, y


@pytest.mark.parametrize("seed", range(5))
def test_fit_is_stationary_and_matches_oracle(seed):
    X, y = random_problem(seed)
    l2 = 0.05
    fit = logistic_fit(X, y, l2)
    theta = np.append(fit.w, fit.b)
    g = logistic_gradient(theta, X, y, l2)
    assert np.max(np.abs(g)) < 1e-6
    fd = central_gradient(lambda t: bce(t, X, y, l2), theta, 1e-5)
    np.testing.assert_allclose(g, fd, atol=1e-5)
    ref = minimize(lambda t: bce(t, X, y, l2), np.zeros(X.shape[1] + 1), method="BFGS",
                   options={"gtol": 1e-9})
    np.testing.assert_allclose(theta, ref.x, atol=1e-4)


def test_objective_matches_loop_oracle():
    X, y = random_problem(9)
    theta = np.random.default_rng(1).normal(size=6)
    assert abs(logistic_objective(theta, X, y, 0.3) - bce(theta, X, y, 0.3)) < 1e-12


def test_bias_is_not_penalized():
    # zero features: only the bias can move, to the log-odds of the class rate
    fit = logistic_fit(np.zeros((30, 2)), np.r_[np.ones(24), np.zeros(6)], l2=10.0)
    assert abs(fit.b - np.log(24 / 6)) < 1e-8


def test_singular_hessian_falls_back():
    X, y = random_problem(2, k=3)
    X = np.hstack([X, X[:, :1]])  # duplicated column, no penalty
    fit = logistic_fit(X, y, l2=0.0)
    assert np.all(np.isfinite(fit.w))
    assert np.all(np.diff(fit.history) <= 1e-15)


def test_warm_start_reaches_same_optimum():
    X, y = random_problem(4)
    cold = logistic_fit(X, y, 0.1)
    warm = logistic_fit(X, y, 0.1, init=np.append(cold.w + 0.3, cold.b - 0.2))
    np.testing.assert_allclose(warm.w, cold.w, atol=1e-7)
    assert warm.converged


def test_logistic_input_errors():
    with pytest.raises(TrainingDataError):
        logistic_fit(np.zeros((0, 2)), np.zeros(0))
    with pytest.raises(DataError):
        logistic_fit(np.array([[np.inf]]), np.array([1]))
    with pytest.raises(ShapeError):
        logistic_fit(np.zeros((3, 2)), np.zeros(4))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 2.0))
def test_objective_never_increases(seed, l2):
    X, y = random_problem(seed, n=40, k=4)
    fit = logistic_fit(X, y, l2)
    assert np.all(np.diff(fit.history) <= 0)
    assert fit.converged == (fit.grad_norm < 1e-8)
    assert fit.converged
