"""Pruning of flat networks and the boundary-geometry checks behind it."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analysis import auc, _labels
from .errors import DataError, UndefinedSimilarityError
from .flatten import DEFAULT_L2, FlatNetwork, relu_features
from .model import (as_plnn, configuration_of, is_trivial, linear_equation, predict_proba,
                    zero_activation_hyperplane)
from .optimize import logistic_fit


def neuron_criterion(flat: FlatNetwork) -> list[tuple[int, float]]:
    """``(index, |W_i|)`` sorted ascending; ties keep the lower index first."""
    mags = np.abs(flat.W)
    order = np.lexsort((np.arange(mags.shape[0]), mags))
    return [(int(i), float(mags[i])) for i in order]


def _refit(flat: FlatNetwork, keep, X, y, l2) -> FlatNetwork:
    # warm start from the surviving weights; the optimum does not depend on it
    keep = np.sort(np.asarray(keep, dtype=np.int64))
    M, V = flat.M[keep], flat.V[keep]
    fit = logistic_fit(relu_features(X, M, V), y, l2, init=np.append(flat.W[keep], flat.B))
    return FlatNetwork(M, V, fit.w, fit.b, [flat.provenance[i] for i in keep], fit)


def prune_flat(flat: FlatNetwork, X, y, k: int, l2: float = DEFAULT_L2) -> FlatNetwork:
    """Keep the ``k`` neurons with the largest ``|W_i|`` and refit the output layer.

    Kept rows retain their original order.
    """
    if not 1 <= k <= flat.width:
        raise ValueError(f"target width {k} outside [1, {flat.width}]")
    ranked = [i for i, _ in neuron_criterion(flat)]
    return _refit(flat, ranked[flat.width - k:], X, y, l2)


@dataclass
class SweepStep:
    width: int
    accuracy: float
    auc: float
    kept: np.ndarray = field(repr=False)
    model: FlatNetwork | None = field(default=None, repr=False)


def _next_width(width: int, halve_until: int | None) -> int:
    if halve_until is not None and width > halve_until:
        return max(width // 2, 1)
    return width - 1


def prune_sweep(flat: FlatNetwork, X_train, y_train, X_test, y_test, l2: float = DEFAULT_L2,
                stop_below: float | None = None, halve_until: int | None = None,
                keep_models: bool = False) -> list[SweepStep]:
    """Prune from the full width down to one neuron, scoring the test set at each width.

    By default one neuron is removed per step.  ``halve_until`` halves the
    width while it exceeds that value.  ``stop_below`` ends the sweep after the
    first width whose test accuracy falls below it.  Each step prunes the
    previous step's refit network.
    """
    y_test = _labels(y_test)
    current = flat
    kept = np.arange(flat.width)
    steps = []
    while True:
        p = predict_proba(current, X_test)
        acc = float(np.mean((p >= 0.5) == y_test))
        steps.append(SweepStep(current.width, acc, auc(p, y_test), kept.copy(),
                               current if keep_models else None))
        if current.width == 1 or (stop_below is not None and acc < stop_below):
            break
        target = _next_width(current.width, halve_until)
        ranked = [i for i, _ in neuron_criterion(current)]
        local = np.sort(np.asarray(ranked[current.width - target:]))
        kept = kept[local]
        current = _refit(current, local, X_train, y_train, l2)
    return steps


def write_sweep_csv(steps, path, comment: str | None = None) -> None:
    with open(path, "w") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        fh.write("width,accuracy,auc\n")
        for s in steps:
            fh.write(f"{s.width},{s.accuracy!r},{s.auc!r}\n")


# --------------------------------------------------------------------------
# boundary geometry


def boundary_cosine(flat: FlatNetwork, i: int, config=None) -> float:
    """Cosine between the normals of the two regions separated by neuron ``i``.

    The regions share every other activation bit, taken from ``config``
    (all neurons on by default).
    """
    k = flat.width
    if not 0 <= i < k:
        raise IndexError(f"neuron {i} out of range for width {k}")
    base = np.ones(k) if config is None else np.asarray(config, dtype=float).reshape(-1)
    if base.shape[0] != k:
        raise ValueError(f"configuration has {base.shape[0]} bits for width {k}")
    on, off = base.copy(), base.copy()
    on[i], off[i] = 1.0, 0.0
    n_on = (flat.W * on) @ flat.M
    n_off = (flat.W * off) @ flat.M
    if np.array_equal(n_on, n_off) and np.any(n_on):
        return 1.0  # W_i = 0: the neuron leaves the equation unchanged
    norm = np.linalg.norm(n_on) * np.linalg.norm(n_off)
    if norm == 0:
        raise UndefinedSimilarityError("one of the adjacent regions has a zero normal")
    return float(np.clip(n_on @ n_off / norm, -1.0, 1.0))


@dataclass
class Theorem2Violation:
    config_a: tuple
    config_b: tuple
    layer: int
    neuron: int
    residual: float


@dataclass
class Theorem2Report:
    pairs_checked: int = 0
    parallel_pairs: int = 0
    max_residual: float = 0.0
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _neuron_index(widths):
    return [(L, i) for L, w in enumerate(widths) for i in range(w)]


def verify_theorem2(model, probes, tol: float = 1e-7, rel_eps: float = 1e-4,
                    max_radius: float = 1e3) -> Theorem2Report:
    """Check that decision boundaries of adjacent nontrivial regions meet on their shared boundary.

    For each probe and hidden neuron, the probe is projected onto the neuron's
    zero-activation hyperplane and the configurations a small step to either
    side are read off.  When they differ in exactly that neuron and both are
    nontrivial, a point ``z`` on the hyperplane with ``g_a(z) = 0`` is found by
    a root solve along the hyperplane and ``|g_b(z)|`` is compared with ``tol``.
    If ``g_a`` has no root on the hyperplane within ``max_radius`` of the probe
    scale, the pair is counted as parallel and ``|g_a - g_b|`` on the
    hyperplane is checked instead.
    """
    net = as_plnn(model)
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    report = Theorem2Report()
    seen = set()
    flat_index = {li: k for k, li in enumerate(_neuron_index(net.hidden_widths))}
    for x in probes:
        c1 = configuration_of(net, x)
        for (L, i), k in flat_index.items():
            hw, hb = zero_activation_hyperplane(net, c1, L, i)
            hn = hw @ hw
            if hn == 0:
                continue
            z0 = x - (hw @ x + hb) / hn * hw
            scale = max(1.0, float(np.linalg.norm(z0)))
            step = rel_eps * scale * hw / np.sqrt(hn)
            ca = configuration_of(net, z0 + step)
            cb = configuration_of(net, z0 - step)
            diff = [j for j in range(len(ca)) if ca[j] != cb[j]]
            if diff != [k] or ca[k] != 1:
                continue
            if (ca, k) in seen or is_trivial(net, ca) or is_trivial(net, cb):
                continue
            seen.add((ca, k))

            hw, hb = zero_activation_hyperplane(net, ca, L, i)
            hn = hw @ hw
            ga, gb = linear_equation(net, ca), linear_equation(net, cb)
            z1 = z0 - (hw @ z0 + hb) / hn * hw
            d = ga.w - (ga.w @ hw) / hn * hw
            dd = d @ d
            report.pairs_checked += 1
            if dd <= 1e-24 * max(ga.w @ ga.w, 1e-300):
                t = None
            else:
                t = -ga(z1) / dd
                if np.linalg.norm(t * d) > max_radius * scale:
                    t = None
            if t is None:
                report.parallel_pairs += 1
                residual = abs(ga(z1) - gb(z1))
            else:
                residual = abs(gb(z1 + t * d))
            report.max_residual = max(report.max_residual, float(residual))
            if not residual < tol:
                report.violations.append(Theorem2Violation(ca, cb, L, i, float(residual)))
    return report


def default_probes(model, n: int = 200, radius: float = 3.0, seed: int = 0) -> np.ndarray:
    net = as_plnn(model)
    return np.random.default_rng(seed).uniform(-radius, radius, size=(n, net.input_dim))


def leave_one_out_accuracy(flat: FlatNetwork, X_train, y_train, X_test, y_test,
                           l2: float = DEFAULT_L2) -> np.ndarray:
    """Test accuracy after removing each single neuron and refitting."""
    if flat.width < 2:
        raise DataError("need at least two neurons for leave-one-out")
    y_test = _labels(y_test)
    out = np.empty(flat.width)
    for j in range(flat.width):
        keep = np.delete(np.arange(flat.width), j)
        pruned = _refit(flat, keep, X_train, y_train, l2)
        out[j] = np.mean((predict_proba(pruned, X_test) >= 0.5) == y_test)
    return out
