from collections import Counter

import numpy as np
import pytest

from plnnflat.errors import ShapeError
from plnnflat.flatten import (FlatNetwork, active_configurations, flatten, harvest_equations,
                              load_flat, relu_features)
from plnnflat.model import (PLNN, configuration_of, linear_equation, logits, random_network,
                            toy_network, zero_activation_hyperplane)


def xor_data(n=400, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 2)) * 2
    return X, (X[:, 0] * X[:, 1] < 0).astype(int)


def test_active_configurations_single_point():
    assert active_configurations(toy_network(), [[2.0, 1.0]]) == [((1, 0, 1, 1, 0), 1)]


def test_active_configurations_one_region():
    net = PLNN(((np.eye(2), np.full(2, 100.0)), (np.ones((1, 2)), np.zeros(1))))
    X = np.random.default_rng(0).normal(size=(50, 2))
    assert active_configurations(net, X) == [((1, 1), 50)]


def test_active_configuration_counts_match_grouping_oracle():
    rng = np.random.default_rng(4)
    net = random_network([4, 3], 3, rng)
    X = rng.normal(size=(600, 3)) * 2
    ref = Counter(configuration_of(net, x) for x in X)
    got = active_configurations(net, X)
    assert dict(got) == ref
    assert sum(n for _, n in got) == 600
    # first-occurrence order
    firsts = [next(k for k, x in enumerate(X) if configuration_of(net, x) == c) for c, _ in got]
    assert firsts == sorted(firsts)


def test_active_configurations_shape_error():
    with pytest.raises(ShapeError):
        active_configurations(toy_network(), np.zeros((3, 5)))


def test_all_trivial_returns_original():
    net = PLNN(((np.eye(2), np.full(2, -100.0)), (np.ones((1, 2)), np.array([0.3]))))
    X, y = xor_data(50)
    out = flatten(net, X, y)
    assert out is net
    np.testing.assert_array_equal(logits(out, X), logits(net, X))


def test_rows_are_harvested_equations():
    rng = np.random.default_rng(2)
    net = random_network([5, 4], 2, rng)
    X, y = xor_data(500, seed=2)
    flat = flatten(net, X, y)
    assert isinstance(flat, FlatNetwork)
    assert len(flat.provenance) == flat.width
    seen = set()
    for i in range(flat.width):
        assert np.any(flat.M[i])
        for c in flat.provenance[i]:
            eq = linear_equation(net, c)
            assert np.array_equal(eq.w, flat.M[i]) and eq.b == flat.V[i]
            seen.add(c)
    nontrivial = {c for c, _ in active_configurations(net, X) if np.any(linear_equation(net, c).w)}
    assert seen == nontrivial


def test_duplicate_equations_collapse_with_both_provenances():
    # the second neuron has no outgoing weight, so its bit never changes the equation
    net = PLNN(((np.array([[1.0, 0.0], [0.0, 1.0]]), np.zeros(2)), (np.array([[2.0, 0.0]]), np.zeros(1))))
    X = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0]])
    M, V, prov = harvest_equations(net, X)
    assert M.tolist() == [[2.0, 0.0]]
    assert sorted(prov[0]) == [(1, 0), (1, 1)]


def test_reservoir_ignores_labels():
    rng = np.random.default_rng(3)
    net = random_network([4, 4], 2, rng)
    X, y = xor_data(300, seed=3)
    a = flatten(net, X, y)
    b = flatten(net, X, 1 - y)
    assert np.array_equal(a.M, b.M) and np.array_equal(a.V, b.V)


def test_flat_boundaries_are_original_decision_boundaries():
    rng = np.random.default_rng(5)
    net = random_network([3, 3], 2, rng)
    X, y = xor_data(400, seed=5)
    flat = flatten(net, X, y)
    pl = flat.to_plnn()
    for i in range(flat.width):
        w, b = zero_activation_hyperplane(pl, (1,) * flat.width, 0, i)
        eq = linear_equation(net, flat.provenance[i][0])
        assert np.array_equal(w, eq.w) and b == eq.b


def test_flat_network_forward_definition():
    rng = np.random.default_rng(6)
    net = random_network([4], 2, rng)
    X, y = xor_data(200, seed=6)
    flat = flatten(net, X, y)
    ref = relu_features(X, flat.M, flat.V) @ flat.W + flat.B
    np.testing.assert_allclose(logits(flat, X), ref, atol=1e-12)
    assert flat.fit.converged


def test_flat_json_roundtrip(tmp_path):
    rng = np.random.default_rng(7)
    net = random_network([4, 3], 2, rng)
    X, y = xor_data(200, seed=7)
    flat = flatten(net, X, y)
    flat.save(tmp_path / "f.json")
    back = load_flat(tmp_path / "f.json")
    assert np.array_equal(back.M, flat.M) and np.array_equal(back.W, flat.W) and back.B == flat.B
    assert back.provenance == flat.provenance


def test_flat_network_validation():
    with pytest.raises(ShapeError):
        FlatNetwork(np.array([[0.0, 0.0]]), [0.0], [1.0], 0.0)
    with pytest.raises(ShapeError):
        FlatNetwork(np.ones((2, 2)), [0.0], [1.0, 1.0], 0.0)
    with pytest.raises(ShapeError):
        FlatNetwork.from_plnn(toy_network())
