"""Flattening: rebuild a deep network as one hidden layer of its own local equations.

The hidden layer of the flat network holds one row per distinct nonzero
linear equation observed on the training data (the "reservoir"); only the
output layer is fit, by L2-penalised logistic regression on the ReLU
reservoir features.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, ShapeError
from .model import (PLNN, as_plnn, config_str, configurations, group_configurations,
                    linear_equation, parse_config)
from .optimize import LogisticFit, logistic_fit

DEFAULT_L2 = 1e-3


@dataclass(eq=False)
class FlatNetwork:
    """``sigmoid(W . ReLU(M x + V) + B)`` with per-row source configurations."""

    M: np.ndarray
    V: np.ndarray
    W: np.ndarray
    B: float
    provenance: list = field(default_factory=list)
    fit: LogisticFit | None = field(default=None, repr=False)

    def __post_init__(self):
        self.M = np.atleast_2d(np.asarray(self.M, dtype=np.float64))
        self.V = np.asarray(self.V, dtype=np.float64).reshape(-1)
        self.W = np.asarray(self.W, dtype=np.float64).reshape(-1)
        self.B = float(self.B)
        k = self.M.shape[0]
        if k < 1:
            raise ShapeError("a flat network needs at least one hidden neuron")
        if self.V.shape[0] != k or self.W.shape[0] != k:
            raise ShapeError(f"M has {k} rows but V has {self.V.shape[0]} and W has {self.W.shape[0]}")
        if np.any(~np.any(np.column_stack([self.M, self.V]), axis=1)):
            raise ShapeError("flat network contains an all-zero hidden row")
        if not self.provenance:
            self.provenance = [[] for _ in range(k)]
        if len(self.provenance) != k:
            raise ShapeError(f"{len(self.provenance)} provenance entries for {k} rows")

    @property
    def width(self) -> int:
        return self.M.shape[0]

    @property
    def input_dim(self) -> int:
        return self.M.shape[1]

    def reservoir(self, X) -> np.ndarray:
        return relu_features(X, self.M, self.V)

    def to_plnn(self) -> PLNN:
        return PLNN(((self.M, self.V), (self.W[None, :], np.array([self.B]))))

    @classmethod
    def from_plnn(cls, model, provenance=None) -> "FlatNetwork":
        net = as_plnn(model)
        if len(net.layers) != 2:
            raise ShapeError(f"expected a single-hidden-layer network, got {len(net.layers) - 1} hidden layers")
        (M, V), (W, B) = net.layers
        return cls(M, V, W[0], B[0], provenance or [])

    def to_dict(self) -> dict:
        doc = self.to_plnn().to_dict()
        doc["provenance"] = [[config_str(c) for c in srcs] for srcs in self.provenance]
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "FlatNetwork":
        prov = [[parse_config(s) for s in srcs] for srcs in doc.get("provenance", [])]
        return cls.from_plnn(PLNN.from_dict(doc), prov)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")


def load_flat(path) -> FlatNetwork:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read model {path}: {exc}") from exc
    return FlatNetwork.from_dict(doc)


def relu_features(X, M, V) -> np.ndarray:
    Z = np.asarray(X, dtype=float) @ M.T + V
    return np.where(Z >= 0, Z, 0.0)


def active_configurations(model, X) -> list[tuple[tuple, int]]:
    """Distinct configurations seen on ``X`` with their counts, in first-occurrence order."""
    net = as_plnn(model)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ShapeError("need a non-empty 2-D input matrix")
    configs, _, counts, _ = group_configurations(configurations(net, X))
    return [(c, int(n)) for c, n in zip(configs, counts)]


def harvest_equations(model, X):
    """Distinct nonzero local equations over ``X`` as ``(M, V, provenance)``.

    Exact duplicates from different configurations collapse to one row that
    lists every source configuration.  Returns ``None`` when every observed
    equation has zero weight.
    """
    net = as_plnn(model)
    rows: dict = {}
    order = []
    for c, _ in active_configurations(net, X):
        eq = linear_equation(net, c)
        if eq.is_zero:
            continue
        key = (eq.w.tobytes(), eq.b)
        if key not in rows:
            rows[key] = (eq, [])
            order.append(key)
        rows[key][1].append(c)
    if not order:
        return None
    M = np.array([rows[k][0].w for k in order])
    V = np.array([rows[k][0].b for k in order])
    return M, V, [rows[k][1] for k in order]


def flatten(model, X, y, l2: float = DEFAULT_L2):
    """Flatten ``model`` using the configurations it exhibits on ``(X, y)``.

    Returns a FlatNetwork, or the original network unchanged when all
    observed regions are trivial.
    """
    net = as_plnn(model)
    harvested = harvest_equations(net, X)
    if harvested is None:
        return model
    M, V, prov = harvested
    fit = logistic_fit(relu_features(X, M, V), y, l2)
    return FlatNetwork(M, V, fit.w, fit.b, prov, fit)
