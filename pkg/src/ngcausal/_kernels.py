"""Hot numeric kernels: batched MLP loss/gradient and structured prox operators.

Every kernel is written once as a plain numpy function and compiled a second
time with numba's ``@njit``.  The active backend is picked at import time from
the ``NGCAUSAL_BACKEND`` environment variable:

* ``numba`` -- require the JIT backend (ImportError if numba is missing)
* ``numpy`` -- force the pure-numpy fallback
* unset     -- use numba when importable, numpy otherwise

Both backends are importable side by side through ``IMPLS`` so tests and the
benchmark script can compare them in one process.

Model parameters travel as one flat float64 vector ``theta``.  Layer ``l``
maps width ``dims[l]`` to ``dims[l+1]``; its weight matrix lives at
``theta[w_off[l] : w_off[l] + dims[l+1]*dims[l]]`` (row-major) and its bias at
``theta[b_off[l] : b_off[l] + dims[l+1]]``.  The first layer's input axis is
ordered lag-major: input column ``k*p + j`` is series ``j`` at lag ``k+1``,
so the column group of series ``j`` is ``w1[:, j::p]``.
"""

import os

import numpy as np

ACT_TANH = 0
ACT_RELU = 1


def _mlp_loss(theta, dims, w_off, b_off, act, X, y):
    """Sum of squared residuals of the network over all rows of X."""
    L = dims.shape[0] - 1
    a = X
    for l in range(L):
        din = dims[l]
        dout = dims[l + 1]
        W = theta[w_off[l]:w_off[l] + dout * din].reshape(dout, din)
        b = theta[b_off[l]:b_off[l] + dout]
        z = np.dot(a, W.T) + b
        if l < L - 1:
            if act == ACT_TANH:
                a = np.tanh(z)
            else:
                a = np.maximum(z, 0.0)
        else:
            a = z
    r = a[:, 0] - y
    return np.dot(r, r)


def _mlp_loss_grad(theta, dims, w_off, b_off, act, X, y, grad):
    """Loss plus exact reverse-mode gradient, written into ``grad``."""
    L = dims.shape[0] - 1
    N = X.shape[0]
    acts = [X]
    zs = []
    for l in range(L):
        din = dims[l]
        dout = dims[l + 1]
        W = theta[w_off[l]:w_off[l] + dout * din].reshape(dout, din)
        b = theta[b_off[l]:b_off[l] + dout]
        z = np.dot(acts[l], W.T) + b
        zs.append(z)
        if l < L - 1:
            if act == ACT_TANH:
                acts.append(np.tanh(z))
            else:
                acts.append(np.maximum(z, 0.0))
    out = zs[L - 1]
    r = out[:, 0] - y
    loss = np.dot(r, r)

    delta = (2.0 * r).reshape(N, 1)
    for l in range(L - 1, -1, -1):
        din = dims[l]
        dout = dims[l + 1]
        gW = np.dot(delta.T, acts[l])
        grad[w_off[l]:w_off[l] + dout * din] = gW.ravel()
        grad[b_off[l]:b_off[l] + dout] = np.sum(delta, 0)
        if l > 0:
            W = theta[w_off[l]:w_off[l] + dout * din].reshape(dout, din)
            da = np.dot(delta, W)
            if act == ACT_TANH:
                h = acts[l]
                delta = da * (1.0 - h * h)
            else:
                delta = np.where(zs[l - 1] > 0.0, da, 0.0)
    return loss


def _group_norms(w1, p, K):
    """Frobenius norm of each input series' column group of the first layer."""
    H = w1.shape[0]
    out = np.empty(p)
    for j in range(p):
        s = 0.0
        for k in range(K):
            c = k * p + j
            for h in range(H):
                s += w1[h, c] * w1[h, c]
        out[j] = np.sqrt(s)
    return out


def _lag_norms(w1, p, K):
    """Per (series j, lag k) block norms of the first layer, shape (p, K)."""
    H = w1.shape[0]
    out = np.empty((p, K))
    for j in range(p):
        for k in range(K):
            c = k * p + j
            s = 0.0
            for h in range(H):
                s += w1[h, c] * w1[h, c]
            out[j, k] = np.sqrt(s)
    return out


def _prox_group(w1, p, K, thr):
    """Blockwise group soft-threshold of every column group, in place.

    A group whose norm is <= thr is written to exact zeros; otherwise it is
    scaled by (1 - thr / norm).
    """
    H = w1.shape[0]
    for j in range(p):
        s = 0.0
        for k in range(K):
            c = k * p + j
            for h in range(H):
                s += w1[h, c] * w1[h, c]
        nrm = np.sqrt(s)
        if nrm <= thr:
            for k in range(K):
                c = k * p + j
                for h in range(H):
                    w1[h, c] = 0.0
        else:
            scale = 1.0 - thr / nrm
            for k in range(K):
                c = k * p + j
                for h in range(H):
                    w1[h, c] *= scale


def _prox_hier(w1, p, K, thr):
    """Nested-suffix prox of every column group, in place.

    For each series j the group soft-threshold is applied to the lag suffixes
    (k..K) for k = K down to 1, innermost first, each with the same threshold.
    The result always has a suffix zero pattern over lags.
    """
    H = w1.shape[0]
    for j in range(p):
        for k0 in range(K - 1, -1, -1):
            s = 0.0
            for k in range(k0, K):
                c = k * p + j
                for h in range(H):
                    s += w1[h, c] * w1[h, c]
            nrm = np.sqrt(s)
            if nrm <= thr:
                for k in range(k0, K):
                    c = k * p + j
                    for h in range(H):
                        w1[h, c] = 0.0
            else:
                scale = 1.0 - thr / nrm
                for k in range(k0, K):
                    c = k * p + j
                    for h in range(H):
                        w1[h, c] *= scale


_KERNELS = {
    "mlp_loss": _mlp_loss,
    "mlp_loss_grad": _mlp_loss_grad,
    "group_norms": _group_norms,
    "lag_norms": _lag_norms,
    "prox_group": _prox_group,
    "prox_hier": _prox_hier,
}

IMPLS = {"numpy": dict(_KERNELS)}

try:
    import numba

    IMPLS["numba"] = {
        name: numba.njit(cache=True)(fn) for name, fn in _KERNELS.items()
    }
    _HAVE_NUMBA = True
except ImportError:
    _HAVE_NUMBA = False


def _resolve_backend():
    req = os.environ.get("NGCAUSAL_BACKEND", "").strip().lower()
    if req in ("", "auto"):
        return "numba" if _HAVE_NUMBA else "numpy"
    if req == "numpy":
        return "numpy"
    if req == "numba":
        if not _HAVE_NUMBA:
            raise ImportError(
                "NGCAUSAL_BACKEND=numba but numba is not importable"
            )
        return "numba"
    raise ValueError(
        f"NGCAUSAL_BACKEND={req!r}: expected 'numba', 'numpy', or unset"
    )


BACKEND = _resolve_backend()

mlp_loss = IMPLS[BACKEND]["mlp_loss"]
mlp_loss_grad = IMPLS[BACKEND]["mlp_loss_grad"]
group_norms = IMPLS[BACKEND]["group_norms"]
lag_norms = IMPLS[BACKEND]["lag_norms"]
prox_group = IMPLS[BACKEND]["prox_group"]
prox_hier = IMPLS[BACKEND]["prox_hier"]


def backend_name():
    """Name of the active kernel backend ('numba' or 'numpy')."""
    return BACKEND


def warmup():
    """Trigger JIT compilation of every kernel on tiny inputs.

    Call before forking worker processes so children inherit compiled code.
    No-op cost on the numpy backend.
    """
    dims = np.array([2, 2, 1], dtype=np.int64)
    w_off = np.array([0, 6], dtype=np.int64)
    b_off = np.array([4, 8], dtype=np.int64)
    theta = np.linspace(0.1, 0.9, 9)
    X = np.ones((3, 2))
    y = np.zeros(3)
    g = np.zeros(9)
    mlp_loss(theta, dims, w_off, b_off, ACT_TANH, X, y)
    mlp_loss_grad(theta, dims, w_off, b_off, ACT_TANH, X, y, g)
    w1 = theta[:4].reshape(2, 2).copy()
    group_norms(w1, 2, 1)
    lag_norms(w1, 2, 1)
    prox_group(w1, 2, 1, 0.1)
    prox_hier(w1, 2, 1, 0.1)
