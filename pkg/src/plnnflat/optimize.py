"""Network training with Adam and the L2-penalised logistic regression solver."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import lapack
from scipy.special import expit

from . import kernels
from ._accel import default_backend
from .errors import DataError, NumericError, ShapeError, TrainingDataError
from .model import PLNN

log = logging.getLogger(__name__)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    architecture: tuple = (10, 10)
    learning_rate: float = 0.02
    batch_size: int = 4
    epochs: int = 100
    seed: int = 0
    init_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "architecture", tuple(int(w) for w in self.architecture))
        if not self.architecture or min(self.architecture) < 1:
            raise ValueError(f"hidden widths must be >= 1, got {self.architecture}")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be >= 1")
        if not self.init_scale > 0:
            raise ValueError("init_scale must be positive")

    def to_dict(self) -> dict:
        return {
            "architecture": list(self.architecture),
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "seed": self.seed,
            "init_scale": self.init_scale,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainConfig":
        known = {k: doc[k] for k in cls.__dataclass_fields__ if k in doc}
        return cls(**known)


@dataclass
class AdamState:
    params: np.ndarray
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    learning_rate: float = 0.02
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS

    @classmethod
    def start(cls, params, learning_rate=0.02) -> "AdamState":
        params = np.array(params, dtype=np.float64)
        return cls(params, np.zeros_like(params), np.zeros_like(params), 0, learning_rate)


def adam_update(state: AdamState, gradient, step: int | None = None) -> AdamState:
    """Return the state after one Adam step; ``step`` defaults to ``state.step + 1``."""
    gradient = np.asarray(gradient, dtype=np.float64)
    if gradient.shape != state.params.shape:
        raise ShapeError(f"gradient shape {gradient.shape} != parameter shape {state.params.shape}")
    t = state.step + 1 if step is None else int(step)
    params, m, v = state.params.copy(), state.m.copy(), state.v.copy()
    kernels.adam_step(params, m, v, gradient, t, state.learning_rate, state.beta1, state.beta2, state.eps)
    return replace(state, params=params, m=m, v=v, step=t)


def _check_labeled(X, y, min_rows=1):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.ndim != 2:
        raise ShapeError(f"design matrix must be 2-D, got shape {X.shape}")
    if X.shape[0] != y.shape[0]:
        raise ShapeError(f"{X.shape[0]} rows but {y.shape[0]} labels")
    if X.shape[0] < min_rows:
        raise TrainingDataError("no training rows")
    if not np.all(np.isfinite(X)):
        raise DataError("non-finite feature values")
    if np.any((y != 0) & (y != 1)):
        raise DataError("labels must be 0 or 1")
    return X, y


def glorot_layers(dims, rng, scale=1.0):
    layers = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        s = scale * np.sqrt(6.0 / (fan_in + fan_out))
        layers.append((rng.uniform(-s, s, size=(fan_out, fan_in)), np.zeros(fan_out)))
    return layers


def train_plnn(X, y, cfg: TrainConfig, backend: str | None = None, losses: list | None = None) -> PLNN:
    """Train a ReLU network with sigmoid output on binary cross-entropy.

    The result is a pure function of ``(X, y, cfg)`` for a fixed backend.
    If ``losses`` is given, the mean training loss of every epoch is appended.
    """
    X, y = _check_labeled(X, y)
    if y.min() == y.max():
        raise TrainingDataError("training data contains a single class")
    backend = backend or default_backend()
    epoch_fn = {"numba": kernels.train_epoch_numba, "numpy": kernels.train_epoch_numpy}[backend]

    rng = np.random.default_rng(cfg.seed)
    dims = [X.shape[1], *cfg.architecture, 1]
    theta, dims = kernels.pack(glorot_layers(dims, rng, cfg.init_scale))
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    X = np.ascontiguousarray(X)
    step = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(X.shape[0]).astype(np.int64)
        step, total = epoch_fn(theta, m, v, step, dims, X, y, order, cfg.batch_size,
                               cfg.learning_rate, ADAM_BETA1, ADAM_BETA2, ADAM_EPS)
        mean_loss = total / X.shape[0]
        if not np.isfinite(mean_loss) or not np.all(np.isfinite(theta)):
            raise NumericError(f"training diverged at epoch {epoch}")
        if losses is not None:
            losses.append(mean_loss)
    log.debug("trained %s for %d epochs, final loss %.5f", cfg.architecture, cfg.epochs, mean_loss)
    return PLNN(tuple((w.copy(), b.copy()) for w, b in kernels.unpack(theta, dims)))


# --------------------------------------------------------------------------
# logistic regression

GRAD_TOL = 1e-8
MAX_ITER = 500
COND_LIMIT = 1e12


@dataclass
class LogisticFit:
    w: np.ndarray
    b: float
    l2: float
    converged: bool
    grad_norm: float
    iterations: int = 0
    history: list = field(default_factory=list, repr=False)

    def decision_function(self, X):
        return np.asarray(X, dtype=float) @ self.w + self.b

    def predict_proba(self, X):
        return expit(self.decision_function(X))


def logistic_objective(theta, X, y, l2):
    """Mean binary cross-entropy plus ``l2/2 * |w|^2``; ``theta = [w..., b]``."""
    z = X @ theta[:-1] + theta[-1]
    w = theta[:-1]
    return float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * (w @ w))


def logistic_gradient(theta, X, y, l2):
    r = expit(X @ theta[:-1] + theta[-1]) - y
    n = X.shape[0]
    return np.concatenate([X.T @ r / n + l2 * theta[:-1], [r.sum() / n]])


def _hessian(theta, X, l2):
    p = expit(X @ theta[:-1] + theta[-1])
    s = p * (1.0 - p)
    Xa = np.hstack([X, np.ones((X.shape[0], 1))])
    H = (Xa.T * s) @ Xa / X.shape[0]
    H[np.arange(X.shape[1]), np.arange(X.shape[1])] += l2
    return H


def _newton_direction(H, g):
    """Solve ``H d = -g`` by Cholesky; None if H is not PD or its condition estimate exceeds the limit."""
    if H.shape[0] == 0:
        return np.zeros(0)
    c, info = lapack.dpotrf(H, lower=1)
    if info != 0:
        return None
    rcond, info = lapack.dpocon(c, np.max(np.sum(np.abs(H), axis=0)), uplo="L")
    if info != 0 or rcond * COND_LIMIT < 1.0:
        return None
    d, info = lapack.dpotrs(c, -g[:, None], lower=1)
    return d[:, 0] if info == 0 else None


def logistic_fit(X, y, l2: float = 1.0, tol: float = GRAD_TOL, max_iter: int = MAX_ITER,
                 init=None) -> LogisticFit:
    """Fit ``sigmoid(X w + b)`` by damped Newton with step halving.

    Falls back to backtracking gradient descent for iterations where the
    Hessian is not positive definite or its condition estimate exceeds 1e12.
    ``init`` is an optional starting point ``[w..., b]``.  Stops once the gradient
    infinity-norm drops below ``tol`` or after ``max_iter`` iterations.
    """
    X, y = _check_labeled(X, y)
    if l2 < 0:
        raise ValueError("l2 must be nonnegative")
    k = X.shape[1]
    theta = np.zeros(k + 1) if init is None else np.array(init, dtype=np.float64).reshape(-1)
    if theta.shape[0] != k + 1:
        raise ShapeError(f"initial point has {theta.shape[0]} entries, expected {k + 1}")
    f = logistic_objective(theta, X, y, l2)
    history = [f]
    # Lipschitz bound of the gradient (Frobenius >= spectral), for the fallback step size
    lip = 0.25 * (np.einsum("ij,ij->", X, X) + X.shape[0]) / X.shape[0] + l2

    it = 0
    g = logistic_gradient(theta, X, y, l2)
    while it < max_iter and np.max(np.abs(g)) >= tol:
        it += 1
        direction = _newton_direction(_hessian(theta, X, l2), g)
        t = 1.0
        if direction is None or g @ direction >= 0:
            direction = -g
            t = 1.0 / lip
        slope = g @ direction
        for _ in range(60):
            cand = theta + t * direction
            fc = logistic_objective(cand, X, y, l2)
            if fc <= f + 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            break  # no representable decrease left
        if fc > f:
            break
        theta, f = cand, fc
        history.append(f)
        g = logistic_gradient(theta, X, y, l2)

    gnorm = float(np.max(np.abs(g)))
    return LogisticFit(theta[:-1].copy(), float(theta[-1]), float(l2), gnorm < tol, gnorm, it, history)
