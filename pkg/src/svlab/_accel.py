"""Hot numeric kernels with an optional numba backend.

Every kernel has a pure-numpy reference implementation. When numba is
importable and ``SVLAB_DISABLE_NUMBA`` is unset (or ``0``), the jitted
versions are used instead. ``BACKEND`` names the active path.

The two paths agree to float32 round-off, not bitwise, so anything that
must be byte-stable should be compared within one backend.
"""

from __future__ import annotations

import math
import os

import numpy as np

_DISABLED = os.environ.get("SVLAB_DISABLE_NUMBA", "0").lower() not in ("", "0", "false", "no")

try:
    if _DISABLED:
        raise ImportError("numba disabled by SVLAB_DISABLE_NUMBA")
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    numba = None
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"

# --------------------------------------------------------------------------- numpy


def np_causal_softmax(scores: np.ndarray, offset: int = 0) -> np.ndarray:
    """Row softmax of ``scores[..., T, S]`` with key ``j`` visible to query ``i``
    iff ``j <= i + offset``. Returns a new array."""
    t, s = scores.shape[-2:]
    mask = np.arange(s)[None, :] > (np.arange(t)[:, None] + offset)
    x = np.where(mask, np.float32(-np.inf), scores)
    x = x - x.max(axis=-1, keepdims=True)
    np.exp(x, out=x)
    x /= x.sum(axis=-1, keepdims=True)
    return x


def np_layernorm(x: np.ndarray, g: np.ndarray, b: np.ndarray, eps: float = 1e-5):
    """Returns ``(y, xhat, rstd)``; the last two feed the backward pass."""
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    rstd = 1.0 / np.sqrt(var + eps)
    xhat = xc * rstd
    return xhat * g + b, xhat, rstd


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, np.float32(0.0))


def relu_grad(x: np.ndarray) -> np.ndarray:
    return (x > 0).astype(x.dtype)


def np_softmax_backward(p: np.ndarray, dp: np.ndarray) -> np.ndarray:
    return p * (dp - (dp * p).sum(axis=-1, keepdims=True))


def np_power_iteration(gram: np.ndarray, x0: np.ndarray, tol: float, max_iter: int):
    """Dominant eigenvector of a symmetric PSD matrix. Returns ``(x, n_iter)``."""
    x = x0 / np.linalg.norm(x0)
    for it in range(1, max_iter + 1):
        y = gram @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return x, it
        y /= ny
        if y @ x < 0:
            y = -y
        delta = np.linalg.norm(y - x)
        x = y
        if delta < tol:
            return x, it
    return x, max_iter


# --------------------------------------------------------------------------- numba

if HAVE_NUMBA:

    @numba.njit(cache=True, fastmath=False)
    def _nb_causal_softmax(scores, offset):
        flat = scores.reshape(-1, scores.shape[-2], scores.shape[-1])
        out = np.empty_like(flat)
        n, t, s = flat.shape
        for b in range(n):
            for i in range(t):
                lim = min(s, i + offset + 1)
                m = -np.inf
                for j in range(lim):
                    if flat[b, i, j] > m:
                        m = flat[b, i, j]
                tot = 0.0
                for j in range(lim):
                    e = math.exp(flat[b, i, j] - m)
                    out[b, i, j] = e
                    tot += e
                inv = 1.0 / tot
                for j in range(lim):
                    out[b, i, j] *= inv
                for j in range(lim, s):
                    out[b, i, j] = 0.0
        return out.reshape(scores.shape)

    @numba.njit(cache=True)
    def _nb_layernorm(x, g, b, eps):
        flat = x.reshape(-1, x.shape[-1])
        n, d = flat.shape
        y = np.empty_like(flat)
        xhat = np.empty_like(flat)
        rstd = np.empty((n, 1), dtype=flat.dtype)
        for i in range(n):
            mu = 0.0
            for j in range(d):
                mu += flat[i, j]
            mu /= d
            var = 0.0
            for j in range(d):
                c = flat[i, j] - mu
                var += c * c
            var /= d
            r = 1.0 / math.sqrt(var + eps)
            rstd[i, 0] = r
            for j in range(d):
                h = (flat[i, j] - mu) * r
                xhat[i, j] = h
                y[i, j] = h * g[j] + b[j]
        shape1 = x.shape[:-1] + (1,)
        return y.reshape(x.shape), xhat.reshape(x.shape), rstd.reshape(shape1)

    @numba.njit(cache=True)
    def _nb_softmax_backward(p, dp):
        fp = p.reshape(-1, p.shape[-1])
        fd = dp.reshape(-1, dp.shape[-1])
        out = np.empty_like(fp)
        n, s = fp.shape
        for i in range(n):
            acc = 0.0
            for j in range(s):
                acc += fd[i, j] * fp[i, j]
            for j in range(s):
                out[i, j] = fp[i, j] * (fd[i, j] - acc)
        return out.reshape(p.shape)

    @numba.njit(cache=True)
    def _nb_power_iteration(gram, x0, tol, max_iter):
        n = gram.shape[0]
        x = x0 / np.sqrt(np.sum(x0 * x0))
        y = np.empty(n)
        for it in range(1, max_iter + 1):
            for i in range(n):
                acc = 0.0
                for j in range(n):
                    acc += gram[i, j] * x[j]
                y[i] = acc
            ny = np.sqrt(np.sum(y * y))
            if ny == 0.0:
                return x, it
            dot = 0.0
            for i in range(n):
                y[i] /= ny
                dot += y[i] * x[i]
            if dot < 0:
                for i in range(n):
                    y[i] = -y[i]
            delta = 0.0
            for i in range(n):
                delta += (y[i] - x[i]) ** 2
                x[i] = y[i]
            if math.sqrt(delta) < tol:
                return x, it
        return x, max_iter


# --------------------------------------------------------------------------- dispatch


def causal_softmax(scores: np.ndarray, offset: int = 0) -> np.ndarray:
    if HAVE_NUMBA:
        return _nb_causal_softmax(np.ascontiguousarray(scores), offset)
    return np_causal_softmax(scores, offset)


def layernorm(x, g, b, eps: float = 1e-5):
    if HAVE_NUMBA:
        return _nb_layernorm(np.ascontiguousarray(x), g, b, np.float32(eps))
    return np_layernorm(x, g, b, eps)


def softmax_backward(p, dp):
    if HAVE_NUMBA:
        return _nb_softmax_backward(np.ascontiguousarray(p), np.ascontiguousarray(dp))
    return np_softmax_backward(p, dp)


def power_iteration(gram, x0, tol: float = 1e-8, max_iter: int = 10_000):
    gram = np.ascontiguousarray(gram, dtype=np.float64)
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    if HAVE_NUMBA:
        x, it = _nb_power_iteration(gram, x0.copy(), float(tol), int(max_iter))
        return x, int(it)
    return np_power_iteration(gram, x0, tol, max_iter)
