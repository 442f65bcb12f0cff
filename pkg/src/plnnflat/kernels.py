"""Mini-batch Adam training epoch for a ReLU/sigmoid network.

Parameters live in one flat float64 vector ``theta`` laid out layer by layer
as ``W_l`` (row-major, ``(out, in)``) followed by ``b_l``; ``dims`` lists the
layer widths from input to the single output.  Two interchangeable
implementations are provided: a scalar-loop kernel compiled with numba and a
batch-vectorised numpy version.  ``train_epoch`` is bound to whichever the
backend switch selects.
"""
from math import exp, log1p, sqrt

import numpy as np
from scipy.special import expit

from ._accel import USE_NUMBA, njit


def pack(layers) -> tuple[np.ndarray, np.ndarray]:
    dims = [layers[0][0].shape[1]] + [w.shape[0] for w, _ in layers]
    theta = np.concatenate([np.concatenate([np.ravel(w), np.ravel(b)]) for w, b in layers])
    return theta.astype(np.float64), np.asarray(dims, dtype=np.int64)


def unpack(theta: np.ndarray, dims) -> list[tuple[np.ndarray, np.ndarray]]:
    """Views into ``theta``; writes through."""
    out = []
    pos = 0
    for nin, nout in zip(dims[:-1], dims[1:]):
        nin, nout = int(nin), int(nout)
        w = theta[pos:pos + nin * nout].reshape(nout, nin)
        pos += nin * nout
        b = theta[pos:pos + nout]
        pos += nout
        out.append((w, b))
    if pos != theta.shape[0]:
        raise ValueError(f"parameter vector has {theta.shape[0]} entries, layout needs {pos}")
    return out


def adam_step(theta, m, v, grad, step, lr, beta1, beta2, eps):
    """In-place bias-corrected Adam update for step number ``step`` (1-based)."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    mhat = m / (1.0 - beta1 ** step)
    vhat = v / (1.0 - beta2 ** step)
    theta -= lr * mhat / (np.sqrt(vhat) + eps)


@njit(cache=True, nogil=True)
def train_epoch_numba(theta, m, v, step, dims, X, y, order, batch_size, lr, beta1, beta2, eps):
    n_layers = dims.shape[0] - 1
    w_off = np.empty(n_layers, np.int64)
    b_off = np.empty(n_layers, np.int64)
    pos = 0
    maxw = dims[0]
    for l in range(n_layers):
        w_off[l] = pos
        pos += dims[l + 1] * dims[l]
        b_off[l] = pos
        pos += dims[l + 1]
        if dims[l + 1] > maxw:
            maxw = dims[l + 1]

    z = np.zeros((n_layers, maxw))
    a = np.zeros((n_layers + 1, maxw))
    delta = np.zeros(maxw)
    delta_prev = np.zeros(maxw)
    grad = np.zeros(theta.shape[0])
    n = order.shape[0]
    loss = 0.0

    start = 0
    while start < n:
        stop = min(start + batch_size, n)
        grad[:] = 0.0
        for k in range(start, stop):
            idx = order[k]
            for j in range(dims[0]):
                a[0, j] = X[idx, j]
            for l in range(n_layers):
                nin = dims[l]
                for i in range(dims[l + 1]):
                    s = theta[b_off[l] + i]
                    base = w_off[l] + i * nin
                    for j in range(nin):
                        s += theta[base + j] * a[l, j]
                    z[l, i] = s
                    a[l + 1, i] = s if s >= 0.0 else 0.0

            out = z[n_layers - 1, 0]
            yi = y[idx]
            if out >= 0.0:
                loss += out + log1p(exp(-out)) - yi * out
                p = 1.0 / (1.0 + exp(-out))
            else:
                loss += log1p(exp(out)) - yi * out
                e = exp(out)
                p = e / (1.0 + e)
            delta[0] = p - yi

            for l in range(n_layers - 1, -1, -1):
                nin = dims[l]
                nout = dims[l + 1]
                for i in range(nout):
                    d = delta[i]
                    grad[b_off[l] + i] += d
                    base = w_off[l] + i * nin
                    for j in range(nin):
                        grad[base + j] += d * a[l, j]
                if l > 0:
                    for j in range(nin):
                        s = 0.0
                        for i in range(nout):
                            s += theta[w_off[l] + i * nin + j] * delta[i]
                        delta_prev[j] = s if z[l - 1, j] >= 0.0 else 0.0
                    for j in range(nin):
                        delta[j] = delta_prev[j]

        scale = 1.0 / (stop - start)
        step += 1
        bc1 = 1.0 - beta1 ** step
        bc2 = 1.0 - beta2 ** step
        for q in range(theta.shape[0]):
            g = grad[q] * scale
            m[q] = beta1 * m[q] + (1.0 - beta1) * g
            v[q] = beta2 * v[q] + (1.0 - beta2) * g * g
            theta[q] -= lr * (m[q] / bc1) / (sqrt(v[q] / bc2) + eps)
        start = stop
    return step, loss


def train_epoch_numpy(theta, m, v, step, dims, X, y, order, batch_size, lr, beta1, beta2, eps):
    params = unpack(theta, dims)
    grad = np.zeros_like(theta)
    gparams = unpack(grad, dims)
    n = order.shape[0]
    loss = 0.0
    for start in range(0, n, batch_size):
        idx = order[start:start + batch_size]
        nb = idx.shape[0]
        h = X[idx]
        acts, zs = [h], []
        for w, b in params:
            zl = h @ w.T + b
            zs.append(zl)
            h = np.where(zl >= 0.0, zl, 0.0)
            acts.append(h)
        out = zs[-1][:, 0]
        yb = y[idx]
        loss += float(np.sum(np.logaddexp(0.0, out) - yb * out))
        d = (expit(out) - yb)[:, None]
        for l in range(len(params) - 1, -1, -1):
            gw, gb = gparams[l]
            gw[...] = d.T @ acts[l] / nb
            gb[...] = d.sum(axis=0) / nb
            if l > 0:
                d = (d @ params[l][0]) * (zs[l - 1] >= 0.0)
        step += 1
        adam_step(theta, m, v, grad, step, lr, beta1, beta2, eps)
    return step, loss


train_epoch = train_epoch_numba if USE_NUMBA else train_epoch_numpy
