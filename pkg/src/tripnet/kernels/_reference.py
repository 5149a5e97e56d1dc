"""Pure-Python/numpy kernels. Same contract as the compiled ``_compiled`` module."""
import math

import numpy as np

from ..errors import NumericDivergenceError
from ..nn import Activation, DenseLayer, Network, backward, flatten_grads, forward

NAME = "python"

BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-8

_BY_CODE = {a.code: a for a in Activation}


def adam_update(theta, g, m, v, lr, t):
    """One bias-corrected Adam update, in place on ``theta``, ``m`` and ``v``."""
    m *= BETA1
    m += (1.0 - BETA1) * g
    v *= BETA2
    v += (1.0 - BETA2) * (g * g)
    m_hat = m / (1.0 - BETA1 ** t)
    v_hat = v / (1.0 - BETA2 ** t)
    theta -= lr * m_hat / (np.sqrt(v_hat) + EPS)


def permutation(rng, n):
    return rng.permutation(n)


def _network_view(theta, dims, acts):
    layers = []
    pos = 0
    for i, code in enumerate(acts):
        fi, fo = int(dims[i]), int(dims[i + 1])
        w = theta[pos:pos + fi * fo].reshape(fi, fo)
        pos += fi * fo
        b = theta[pos:pos + fo].reshape(1, fo)
        pos += fo
        layers.append(DenseLayer(w, b, _BY_CODE[int(code)]))
    return Network(tuple(layers))


def train_epoch(theta, m, v, dims, acts, X, y, order, batch_size, lr, t0, batch_losses):
    """Run one pass of minibatch Adam over ``X[order]``.

    Parameters and moments are updated in place. Per-batch MSE goes to
    ``batch_losses``. Returns -1, or the index of the batch whose loss (or a
    pre-activation) was non-finite; updates stop at that batch.
    """
    n = order.shape[0]
    t = t0
    for k, start in enumerate(range(0, n, batch_size)):
        idx = order[start:start + batch_size]
        xb = X[idx]
        yb = y[idx].reshape(-1, 1)
        net = _network_view(theta, dims, acts)
        try:
            out, cache = forward(net, xb)
        except NumericDivergenceError:
            return k
        diff = out - yb
        with np.errstate(over="ignore", invalid="ignore"):
            loss = float(np.mean(diff * diff))
        if not math.isfinite(loss):
            return k
        grads = backward(net, cache, (2.0 / idx.shape[0]) * diff)
        t += 1
        adam_update(theta, flatten_grads(grads), m, v, lr, t)
        batch_losses[k] = loss
    return -1
