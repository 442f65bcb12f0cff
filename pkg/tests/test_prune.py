import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plnnflat.analysis import accuracy
from plnnflat.data import gen_synthetic, split
from plnnflat.errors import UndefinedSimilarityError
from plnnflat.flatten import FlatNetwork, flatten, relu_features
from plnnflat.model import PLNN, configuration_of, linear_equation, random_network, toy_network
from plnnflat.optimize import TrainConfig, logistic_fit, train_plnn
from plnnflat.prune import (boundary_cosine, default_probes, leave_one_out_accuracy, neuron_criterion,
                            prune_flat, prune_sweep, verify_theorem2, write_sweep_csv)


def synthetic(seed, n=2000):
    return split(gen_synthetic(n, seed=seed), 0.6, seed=seed)


def fitted_flat(M, V, X, y, l2=1e-3):
    fit = logistic_fit(relu_features(X, M, V), y, l2)
    return FlatNetwork(M, V, fit.w, fit.b, fit=fit)


@pytest.fixture(scope="module")
def trained_flat():
    tr, te = synthetic(0, 3000)
    net = train_plnn(tr.X, tr.y, TrainConfig((5, 5), epochs=20, seed=0))
    return flatten(net, tr.X, tr.y), tr, te


def test_criterion_order():
    flat = FlatNetwork(np.eye(3), np.zeros(3), [0.5, -2.0, 0.1], 0.0)
    assert neuron_criterion(flat) == [(2, 0.1), (0, 0.5), (1, 2.0)]


def test_criterion_ties_prefer_lower_index():
    flat = FlatNetwork(np.eye(3), np.zeros(3), [1.5, 1.5, -1.5], 0.0)
    assert [i for i, _ in neuron_criterion(flat)] == [0, 1, 2]


def test_lowest_criterion_is_least_harmful_removal():
    # flat networks from differently seeded trained nets; leave-one-out oracle
    hits = 0
    for t in range(10):
        tr, te = split(gen_synthetic(5000, seed=t), 0.6, seed=t)
        net = train_plnn(tr.X, tr.y, TrainConfig((5, 5), epochs=20, seed=t))
        flat = flatten(net, tr.X, tr.y)
        base = accuracy(flat, te.X, te.y)
        change = np.abs(leave_one_out_accuracy(flat, tr.X, tr.y, te.X, te.y) - base)
        hits += change[neuron_criterion(flat)[0][0]] <= change.min()
    assert hits >= 8


def test_prune_to_full_width_is_noop(trained_flat):
    flat, tr, te = trained_flat
    same = prune_flat(flat, tr.X, tr.y, flat.width)
    assert np.array_equal(same.M, flat.M) and np.array_equal(same.V, flat.V)
    assert abs(accuracy(same, te.X, te.y) - accuracy(flat, te.X, te.y)) < 1e-9


def test_prune_to_one_neuron_is_parallel(trained_flat):
    flat, tr, _ = trained_flat
    one = prune_flat(flat, tr.X, tr.y, 1)
    assert one.width == 1
    # the region boundary M x + V = 0 and the active side's decision boundary share a normal
    eq = linear_equation(one, (1,))
    cos = eq.w @ one.M[0] / (np.linalg.norm(eq.w) * np.linalg.norm(one.M[0]))
    assert abs(abs(cos) - 1.0) < 1e-12
    assert not np.any(linear_equation(one, (0,)).w)


def test_pruning_a_negligible_neuron():
    tr, te = synthetic(3)
    rng = np.random.default_rng(3)
    M, V = rng.normal(size=(4, 2)), rng.normal(size=4)
    three = fitted_flat(M[:3], V[:3], tr.X, tr.y)
    # fourth neuron joins with a typical weight scaled by 1e-4
    W = np.append(three.W, 1e-4 * np.abs(three.W).mean())
    flat = FlatNetwork(M, V, W, three.B)
    assert neuron_criterion(flat)[0][0] == 3
    pruned = prune_flat(flat, tr.X, tr.y, 3)
    assert np.array_equal(pruned.M, M[:3])
    assert abs(accuracy(pruned, te.X, te.y) - accuracy(flat, te.X, te.y)) <= 0.005


def test_prune_range_error(trained_flat):
    flat, tr, _ = trained_flat
    with pytest.raises(ValueError):
        prune_flat(flat, tr.X, tr.y, 0)
    with pytest.raises(ValueError):
        prune_flat(flat, tr.X, tr.y, flat.width + 1)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 9), st.data())
def test_pruned_rows_are_input_rows(width, data):
    seed = data.draw(st.integers(0, 10_000))
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(60, 3))
    y = (X[:, 0] > 0).astype(int)
    y[:2] = [0, 1]
    flat = fitted_flat(rng.normal(size=(width, 3)), rng.normal(size=width), X, y, l2=0.1)
    k = data.draw(st.integers(1, width))
    pruned = prune_flat(flat, X, y, k, l2=0.1)
    assert pruned.width == k
    rows = {tuple(r) + (v,) for r, v in zip(flat.M, flat.V)}
    assert all(tuple(r) + (v,) in rows for r, v in zip(pruned.M, pruned.V))
    # kept rows are the top-k by magnitude, in original order
    top = sorted(i for i, _ in neuron_criterion(flat)[width - k:])
    assert np.array_equal(pruned.M, flat.M[top])


def test_sweep_from_width_one():
    tr, te = synthetic(1, 400)
    flat = fitted_flat(np.array([[1.0, 1.0]]), np.zeros(1), tr.X, tr.y)
    steps = prune_sweep(flat, tr.X, tr.y, te.X, te.y)
    assert len(steps) == 1 and steps[0].width == 1


def test_sweep_visits_every_width(trained_flat):
    flat, tr, te = trained_flat
    steps = prune_sweep(flat, tr.X, tr.y, te.X, te.y, keep_models=True)
    assert [s.width for s in steps] == list(range(flat.width, 0, -1))
    full = steps[0].accuracy
    assert max(s.accuracy for s in steps) >= full - 0.005
    # a fresh prune with the same kept set reproduces the sweep's metrics
    checked = 0
    for s in steps:
        fresh = prune_flat(flat, tr.X, tr.y, s.width)
        if np.array_equal(fresh.M, flat.M[s.kept]):
            assert abs(accuracy(fresh, te.X, te.y) - s.accuracy) < 1e-9
            checked += 1
    assert checked >= 1


def test_sweep_halving_and_early_stop(trained_flat):
    flat, tr, te = trained_flat
    widths = [s.width for s in prune_sweep(flat, tr.X, tr.y, te.X, te.y, halve_until=4)]
    expect = [flat.width]
    while expect[-1] > 4:
        expect.append(expect[-1] // 2)
    while expect[-1] > 1:
        expect.append(expect[-1] - 1)
    assert widths == expect
    steps = prune_sweep(flat, tr.X, tr.y, te.X, te.y, stop_below=1.01)
    assert len(steps) == 1


def test_sweep_csv(tmp_path, trained_flat):
    flat, tr, te = trained_flat
    steps = prune_sweep(flat, tr.X, tr.y, te.X, te.y, halve_until=2)
    write_sweep_csv(steps, tmp_path / "s.csv", comment="cmd: x")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "# cmd: x" and lines[1] == "width,accuracy,auc"
    assert len(lines) == 2 + len(steps)


# --------------------------------------------------------------------------
# boundary cosine


def random_flat(k, seed, dim=3):
    rng = np.random.default_rng(seed)
    return FlatNetwork(rng.normal(size=(k, dim)), rng.normal(size=k), rng.normal(size=k), 0.1)


def test_cosine_is_one_for_zero_weight():
    flat = random_flat(5, 0)
    W = flat.W.copy()
    W[2] = 0.0
    assert boundary_cosine(FlatNetwork(flat.M, flat.V, W, flat.B), 2) == 1.0


def test_cosine_grows_as_weight_shrinks():
    flat = random_flat(5, 1)
    vals = []
    for f in (1.0, 0.1, 0.01):
        W = flat.W.copy()
        W[0] *= f
        vals.append(boundary_cosine(FlatNetwork(flat.M, flat.V, W, flat.B), 0))
    assert vals[0] < vals[1] < vals[2] <= 1.0


def test_cosine_zero_normal_error():
    flat = FlatNetwork(np.array([[1.0, 0.0], [0.0, 1.0]]), np.zeros(2), [1.0, 1.0], 0.0)
    # with neuron 1 off, the side of neuron 0 that is off has no normal at all
    with pytest.raises(UndefinedSimilarityError):
        boundary_cosine(flat, 0, config=(1, 0))


def test_cosine_orthogonal_adjacent_normals():
    # W_0 M_0 + W_1 M_1 perpendicular to W_1 M_1
    flat = FlatNetwork(np.array([[1.0, -1.0], [1.0, 1.0]]), np.zeros(2), [1.0, 1.0], 0.0)
    assert abs(boundary_cosine(flat, 0) - np.cos(np.pi / 4)) < 1e-12
    flat = FlatNetwork(np.array([[1.0, -1.0], [0.0, 1.0]]), np.zeros(2), [1.0, 1.0], 0.0)
    # on: (1, 0); off: (0, 1)
    assert abs(boundary_cosine(flat, 0)) < 1e-12


def test_cosine_scale_invariance():
    flat = random_flat(4, 2)
    c = boundary_cosine(flat, 1)
    scaled = FlatNetwork(flat.M, flat.V, flat.W * 3.7, flat.B)
    assert abs(boundary_cosine(scaled, 1) - c) < 1e-12


def test_cosine_index_error():
    with pytest.raises(IndexError):
        boundary_cosine(random_flat(3, 0), 3)


# --------------------------------------------------------------------------
# boundary intersection of adjacent regions


def test_theorem2_single_layer_width_two():
    net = random_network([2], 2, np.random.default_rng(0))
    rep = verify_theorem2(net, default_probes(net, 300, seed=1), tol=1e-7)
    assert rep.ok and rep.pairs_checked > 0


def test_theorem2_zero_downstream_weight():
    net = PLNN(((np.array([[1.0, 2.0], [-1.0, 0.5]]), np.array([0.3, 0.1])),
                (np.array([[1.5, 0.0]]), np.array([-0.2]))))
    rep = verify_theorem2(net, default_probes(net, 200, seed=2))
    assert rep.ok and rep.pairs_checked > 0
    for c in [(1, 1), (1, 0)]:
        assert np.array_equal(linear_equation(net, c).w, linear_equation(net, (1, 1)).w)


def test_theorem2_toy_network():
    net = toy_network()
    probes = np.random.default_rng(0).uniform(-6, 6, size=(2000, 2))
    rep = verify_theorem2(net, probes)
    assert rep.ok and rep.pairs_checked > 0


def test_theorem2_deep_random():
    for seed in range(3):
        net = random_network([6, 5, 4], 3, np.random.default_rng(seed))
        rep = verify_theorem2(net, default_probes(net, 150, seed=seed))
        assert rep.ok, rep.violations[:3]


def test_residual_grows_linearly_off_boundary():
    # move the shared root z off the region boundary: |g_b| grows in proportion
    net = random_network([3], 2, np.random.default_rng(5))
    W1, B1 = net.layers[0]
    ca = (1, 1, 1)
    cb = (0, 1, 1)
    ga, gb = linear_equation(net, ca), linear_equation(net, cb)
    n = W1[0] / np.linalg.norm(W1[0])
    d = np.array([-n[1], n[0]])
    z0 = -B1[0] * n / np.linalg.norm(W1[0])
    t = -ga(z0) / (ga.w @ d)
    z = z0 + t * d
    assert abs(gb(z)) < 1e-9
    r = [abs(gb(z + h * n)) for h in (1e-3, 2e-3, 4e-3)]
    assert abs(r[1] / r[0] - 2) < 1e-6 and abs(r[2] / r[0] - 4) < 1e-6
