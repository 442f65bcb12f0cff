"""Piecewise-linear network representation and its closed-form region structure.

A network is a stack of affine layers with ReLU between them and a sigmoid on
the single output.  Hidden layers and neurons are addressed 0-based; a
configuration lists the activation bit of every hidden neuron, layer-major.
A neuron is "on" (bit 1) when its pre-activation is >= 0.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.special import expit

from .errors import DataError, ShapeError

Configuration = tuple  # tuple[int, ...] of 0/1, length = number of hidden neurons


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PLNN:
    """Feed-forward ReLU network with a sigmoid output unit.

    ``layers`` holds ``(W, b)`` pairs with ``W`` shaped ``(out, in)``.  The
    last layer must have a single output.
    """

    layers: tuple

    def __post_init__(self):
        if len(self.layers) < 1:
            raise ShapeError("a network needs at least one layer")
        fixed = []
        prev = None
        for k, (w, b) in enumerate(self.layers):
            w = _frozen(w)
            b = _frozen(b).reshape(-1)
            if w.ndim != 2:
                raise ShapeError(f"layer {k}: weight must be 2-D, got shape {w.shape}")
            if b.shape[0] != w.shape[0]:
                raise ShapeError(f"layer {k}: bias length {b.shape[0]} != {w.shape[0]} outputs")
            if prev is not None and w.shape[1] != prev:
                raise ShapeError(f"layer {k}: expects {w.shape[1]} inputs, previous layer gives {prev}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ShapeError(f"layer {k}: non-finite parameters")
            prev = w.shape[0]
            fixed.append((w, b))
        if prev != 1:
            raise ShapeError(f"output layer must have 1 unit, got {prev}")
        object.__setattr__(self, "layers", tuple(fixed))

    @property
    def input_dim(self) -> int:
        return self.layers[0][0].shape[1]

    @property
    def hidden_widths(self) -> list[int]:
        return [w.shape[0] for w, _ in self.layers[:-1]]

    @property
    def n_hidden(self) -> int:
        return sum(self.hidden_widths)

    @property
    def weights(self) -> list[np.ndarray]:
        return [w for w, _ in self.layers]

    @property
    def biases(self) -> list[np.ndarray]:
        return [b for _, b in self.layers]

    def to_plnn(self) -> "PLNN":
        return self

    def to_dict(self) -> dict:
        return {"layers": [{"w": w.tolist(), "b": b.tolist()} for w, b in self.layers]}

    @classmethod
    def from_dict(cls, doc: dict) -> "PLNN":
        try:
            layers = [(np.array(L["w"], dtype=float), np.array(L["b"], dtype=float)) for L in doc["layers"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed model document: {exc}") from exc
        return cls(tuple(layers))

    def __eq__(self, other):
        if not isinstance(other, PLNN) or len(self.layers) != len(other.layers):
            return NotImplemented if not isinstance(other, PLNN) else False
        return all(
            np.array_equal(w1, w2) and np.array_equal(b1, b2)
            for (w1, b1), (w2, b2) in zip(self.layers, other.layers)
        )

    __hash__ = None


def as_plnn(model) -> PLNN:
    """Coerce a PLNN-like object (anything with ``to_plnn``) to a PLNN."""
    if isinstance(model, PLNN):
        return model
    if hasattr(model, "to_plnn"):
        return model.to_plnn()
    raise TypeError(f"cannot interpret {type(model).__name__} as a PLNN")


def toy_network() -> PLNN:
    """The 2-3-2-1 demonstration network with integer weights."""
    return PLNN((
        (np.array([[3.0, 2.0], [-1.0, 1.0], [1.0, 0.0]]), np.array([2.0, -1.0, -1.0])),
        (np.array([[2.0, 1.0, -5.0], [0.0, 7.0, -4.0]]), np.array([-2.0, 1.0])),
        (np.array([[1.0, -4.0]]), np.array([-5.0])),
    ))


def random_network(widths: Sequence[int], input_dim: int, rng=None, scale: float = 1.0) -> PLNN:
    """Gaussian-weight network, mainly for tests and verification probes."""
    rng = np.random.default_rng(rng)
    dims = [input_dim, *widths, 1]
    layers = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        w = rng.normal(0.0, scale / np.sqrt(fan_in), size=(fan_out, fan_in))
        b = rng.normal(0.0, 0.5 * scale, size=fan_out)
        layers.append((w, b))
    return PLNN(tuple(layers))


def save_model(model, path, extra: dict | None = None) -> None:
    doc = as_plnn(model).to_dict()
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_model(path) -> PLNN:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read model {path}: {exc}") from exc
    return PLNN.from_dict(doc)


# --------------------------------------------------------------------------
# structure types


@dataclass(frozen=True, eq=False)
class LinearEquation:
    w: np.ndarray
    b: float

    def __post_init__(self):
        object.__setattr__(self, "w", _frozen(self.w))
        object.__setattr__(self, "b", float(self.b))

    def __call__(self, x):
        return np.asarray(x, dtype=float) @ self.w + self.b

    @property
    def is_zero(self) -> bool:
        return not np.any(self.w)


@dataclass(frozen=True, eq=False)
class Inequality:
    """``w . x + b  (>= | <)  0``."""

    w: np.ndarray
    b: float
    sense: str

    def __post_init__(self):
        if self.sense not in (">=", "<"):
            raise ValueError(f"sense must be '>=' or '<', got {self.sense!r}")
        object.__setattr__(self, "w", _frozen(self.w))
        object.__setattr__(self, "b", float(self.b))

    def value(self, x):
        return np.asarray(x, dtype=float) @ self.w + self.b

    def satisfied(self, x):
        v = self.value(x)
        return v >= 0 if self.sense == ">=" else v < 0


@dataclass(eq=False)
class Region:
    config: Configuration
    inequalities: list
    equation: LinearEquation
    trivial: bool
    class_counts: tuple = (0, 0)
    first_index: int = field(default=-1, repr=False)

    @property
    def instance_count(self) -> int:
        return int(self.class_counts[0] + self.class_counts[1])

    @property
    def mixed(self) -> bool:
        return self.class_counts[0] > 0 and self.class_counts[1] > 0

    @property
    def label(self) -> str:
        return config_str(self.config)


def config_str(config: Iterable[int]) -> str:
    return "".join("1" if int(c) else "0" for c in config)


def parse_config(text: str) -> Configuration:
    if not text or set(text) - {"0", "1"}:
        raise DataError(f"bad configuration bitstring {text!r}")
    return tuple(int(ch) for ch in text)


# --------------------------------------------------------------------------
# evaluation


def _check_batch(net: PLNN, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != net.input_dim:
        raise ShapeError(f"expected inputs with {net.input_dim} features, got shape {np.shape(X)}")
    return X


def preactivations(model, X) -> list[np.ndarray]:
    """Pre-activations of every layer (output layer last) for a batch, each ``(n, out_l)``."""
    net = as_plnn(model)
    h = _check_batch(net, X)
    out = []
    for k, (w, b) in enumerate(net.layers):
        z = h @ w.T + b
        out.append(z)
        if k < len(net.layers) - 1:
            h = np.where(z >= 0, z, 0.0)
    return out


def logits(model, X) -> np.ndarray:
    return preactivations(model, X)[-1][:, 0]


def predict_proba(model, X) -> np.ndarray:
    return expit(logits(model, X))


def forward(model, x) -> tuple[float, list[np.ndarray]]:
    """Evaluate one input; returns the output probability and per-layer pre-activations."""
    net = as_plnn(model)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError(f"forward takes a single input vector, got shape {x.shape}")
    pre = [z[0] for z in preactivations(net, x)]
    return float(expit(pre[-1][0])), pre


def configurations(model, X) -> np.ndarray:
    """Activation bits for a batch as a ``(n, N)`` uint8 matrix."""
    net = as_plnn(model)
    pre = preactivations(net, X)[:-1]
    if not pre:
        return np.zeros((_check_batch(net, X).shape[0], 0), dtype=np.uint8)
    return np.concatenate([(z >= 0) for z in pre], axis=1).astype(np.uint8)


def configuration_of(model, x) -> Configuration:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError(f"configuration_of takes a single input vector, got shape {x.shape}")
    return tuple(int(v) for v in configurations(model, x)[0])


# --------------------------------------------------------------------------
# closed-form region structure


def _layer_masks(net: PLNN, config) -> list[np.ndarray]:
    c = np.asarray(config).reshape(-1)
    if c.shape[0] != net.n_hidden:
        raise ShapeError(f"configuration has {c.shape[0]} bits, network has {net.n_hidden} hidden neurons")
    if np.any((c != 0) & (c != 1)):
        raise ShapeError("configuration bits must be 0 or 1")
    bounds = np.cumsum([0, *net.hidden_widths])
    return [c[i:j].astype(np.float64) for i, j in zip(bounds[:-1], bounds[1:])]


def masked_weights(model, config) -> list[np.ndarray]:
    """Weights with the columns fed by "off" neurons zeroed; the first layer is untouched."""
    net = as_plnn(model)
    masks = _layer_masks(net, config)
    out = [net.weights[0].copy()]
    for w, m in zip(net.weights[1:], masks):
        out.append(w * m[None, :])
    return out


def _affine_chain(net: PLNN, config, stop: int) -> list[tuple[np.ndarray, np.ndarray]]:
    # (A_l, c_l) with A_l x + c_l = pre-activations of layer l inside the region, l < stop
    wc = masked_weights(net, config)
    A, c = wc[0], net.biases[0].copy()
    chain = [(A, c)]
    for l in range(1, stop):
        A = wc[l] @ A
        c = wc[l] @ c + net.biases[l]
        chain.append((A, c))
    return chain


def linear_equation(model, config) -> LinearEquation:
    """Local affine map ``w . x + b`` equal to the output logit inside the region."""
    net = as_plnn(model)
    A, c = _affine_chain(net, config, len(net.layers))[-1]
    return LinearEquation(A[0], c[0])


def is_trivial(model, config) -> bool:
    """True when some hidden layer is entirely off, making the output constant."""
    net = as_plnn(model)
    return any(not np.any(m) for m in _layer_masks(net, config))


def zero_activation_hyperplane(model, config, layer: int, neuron: int) -> tuple[np.ndarray, float]:
    net = as_plnn(model)
    widths = net.hidden_widths
    if not 0 <= layer < len(widths):
        raise IndexError(f"hidden layer {layer} out of range (network has {len(widths)})")
    if not 0 <= neuron < widths[layer]:
        raise IndexError(f"neuron {neuron} out of range for layer {layer} of width {widths[layer]}")
    A, c = _affine_chain(net, config, layer + 1)[layer]
    return A[neuron].copy(), float(c[neuron])


def region_inequalities(model, config) -> list[Inequality]:
    net = as_plnn(model)
    bits = np.concatenate(_layer_masks(net, config))
    chain = _affine_chain(net, config, len(net.layers) - 1)
    A = np.concatenate([a for a, _ in chain], axis=0)
    c = np.concatenate([v for _, v in chain])
    return [Inequality(A[i], c[i], ">=" if bits[i] else "<") for i in range(len(bits))]


def satisfies_all(inequalities: Sequence[Inequality], X) -> np.ndarray:
    """Row mask of points satisfying every inequality."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    ok = np.ones(X.shape[0], dtype=bool)
    for ineq in inequalities:
        ok &= ineq.satisfied(X)
    return ok


def decision_boundary(model, config) -> LinearEquation | None:
    """Zero set of the region's equation, or None for trivial regions."""
    if is_trivial(model, config):
        return None
    return linear_equation(model, config)


def group_configurations(bits: np.ndarray):
    """Distinct rows of a bit matrix in first-occurrence order.

    Returns ``(configs, inverse, counts, first_index)`` where ``inverse[r]``
    is the group of row ``r``.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.shape[1] == 0:
        n = bits.shape[0]
        return [()], np.zeros(n, dtype=np.int64), np.array([n]), np.array([0])
    packed = np.packbits(bits, axis=1)
    _, first, inverse, counts = np.unique(packed, axis=0, return_index=True,
                                          return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.shape[0])
    configs = [tuple(int(v) for v in bits[first[g]]) for g in order]
    return configs, rank[inverse], counts[order], first[order]
