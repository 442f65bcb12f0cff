"""Metrics and statistics: accuracy, AUC, paired t-test, region census."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import DataError, ShapeError, ZeroVarianceError
from .model import (Region, as_plnn, configurations, group_configurations, is_trivial,
                    linear_equation, logits, predict_proba, region_inequalities, satisfies_all)


def _labels(y) -> np.ndarray:
    y = np.asarray(y).reshape(-1)
    if np.any((y != 0) & (y != 1)):
        raise DataError("labels must be 0 or 1")
    return y.astype(np.int64)


def accuracy(model, X, y) -> float:
    """Fraction of rows where ``p >= 0.5`` matches the label."""
    y = _labels(y)
    if y.shape[0] == 0:
        raise DataError("accuracy of an empty dataset is undefined")
    pred = (predict_proba(model, X) >= 0.5).astype(np.int64)
    if pred.shape[0] != y.shape[0]:
        raise ShapeError(f"{pred.shape[0]} predictions for {y.shape[0]} labels")
    return float(np.mean(pred == y))


def auc(scores, y) -> float:
    """Mann-Whitney estimate of P(score_pos > score_neg), ties counting one half."""
    scores = np.asarray(scores, dtype=float).reshape(-1)
    y = _labels(y)
    if scores.shape != y.shape:
        raise ShapeError(f"{scores.shape[0]} scores for {y.shape[0]} labels")
    n1 = int(y.sum())
    n0 = y.shape[0] - n1
    if n1 == 0 or n0 == 0:
        raise DataError("AUC needs both classes present")
    ranks = rankdata(scores)  # average ranks give the half credit for ties
    u = ranks[y == 1].sum() - n1 * (n1 + 1) / 2.0
    return float(u / (n1 * n0))


def model_auc(model, X, y) -> float:
    return auc(predict_proba(model, X), y)


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    auc: float
    n: int

    def to_dict(self):
        return asdict(self)


def evaluate(model, X, y) -> Metrics:
    p = predict_proba(model, X)
    y = _labels(y)
    return Metrics(float(np.mean((p >= 0.5) == y)), auc(p, y), int(y.shape[0]))


@dataclass(frozen=True)
class PairedT:
    mean_orig: float
    mean_new: float
    sd_diff: float
    t: float
    n: int

    @property
    def mean_diff(self) -> float:
        return self.mean_new - self.mean_orig

    def to_dict(self):
        return {"original_mean": self.mean_orig, "flattened_mean": self.mean_new,
                "diff_sd": self.sd_diff, "t": self.t, "n": self.n}


def t_from_summary(n: int, mean_diff: float, sd_diff: float) -> float:
    """Paired t statistic from summary values: ``mean / (sd / sqrt(n))``."""
    if sd_diff <= 0:
        raise ZeroVarianceError("standard deviation of differences is zero")
    return mean_diff / (sd_diff / math.sqrt(n))


def paired_t(orig, new) -> PairedT:
    """Paired t-test on ``new - orig``; positive t means ``new`` scored higher."""
    a = np.asarray(orig, dtype=float).reshape(-1)
    b = np.asarray(new, dtype=float).reshape(-1)
    if a.shape != b.shape:
        raise ShapeError(f"paired samples differ in length: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] < 2:
        raise DataError("paired t-test needs at least two pairs")
    d = b - a
    sd = float(np.std(d, ddof=1))
    if not sd > 0:
        raise ZeroVarianceError("all paired differences are identical")
    return PairedT(float(a.mean()), float(b.mean()), sd, t_from_summary(d.shape[0], float(d.mean()), sd),
                   int(d.shape[0]))


def region_census(model, X, y) -> list[Region]:
    """One Region per configuration observed on ``X``, in first-occurrence order."""
    net = as_plnn(model)
    bits = configurations(net, X)
    y = _labels(y)
    if y.shape[0] != bits.shape[0]:
        raise ShapeError(f"{bits.shape[0]} rows but {y.shape[0]} labels")
    configs, inverse, _, first = group_configurations(bits)
    per_class = np.zeros((len(configs), 2), dtype=np.int64)
    np.add.at(per_class, (inverse, y), 1)
    return [
        Region(
            config=c,
            inequalities=region_inequalities(net, c),
            equation=linear_equation(net, c),
            trivial=is_trivial(net, c),
            class_counts=(int(per_class[g, 0]), int(per_class[g, 1])),
            first_index=int(first[g]),
        )
        for g, c in enumerate(configs)
    ]


def identity_residuals(model, X) -> np.ndarray:
    """Scaled gap ``|logit - (W x + B)| / (1 + |W x + B|)`` between the network and its region equations."""
    net = as_plnn(model)
    X = np.asarray(X, dtype=float)
    z = logits(net, X)
    configs, inverse, _, _ = group_configurations(configurations(net, X))
    eqs = [linear_equation(net, c) for c in configs]
    W = np.array([e.w for e in eqs])[inverse]
    B = np.array([e.b for e in eqs])[inverse]
    lin = np.einsum("ij,ij->i", W, X) + B
    return np.abs(z - lin) / (1.0 + np.abs(lin))


def theorem1_agreement(model, X) -> np.ndarray:
    """Per row: does the forward-pass configuration's inequality system hold at that row?"""
    net = as_plnn(model)
    X = np.asarray(X, dtype=float)
    configs, inverse, _, _ = group_configurations(configurations(net, X))
    ok = np.empty(X.shape[0], dtype=bool)
    for g, c in enumerate(configs):
        rows = np.flatnonzero(inverse == g)
        ok[rows] = satisfies_all(region_inequalities(net, c), X[rows])
    return ok
