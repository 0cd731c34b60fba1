"""Central finite differences with truncation/round-off balanced steps."""

import numpy as np

EPS = np.finfo(float).eps
FIRST = EPS ** (1.0 / 3.0)
# nested differences (second derivatives, derivatives of FD quantities)
SECOND = EPS ** 0.25


def steps(x, scale=FIRST):
    x = np.asarray(x, dtype=float)
    return scale * np.maximum(1.0, np.abs(x))


def central_grad(f, x, scale=FIRST):
    """Stack ``d f / d x_i`` along a new leading axis.

    ``f`` may return a scalar or an array of any shape.
    """
    x = np.asarray(x, dtype=float)
    h = steps(x, scale)
    cols = []
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h[i]
        xm[i] -= h[i]
        # actual representable step
        hi = xp[i] - xm[i]
        cols.append((np.asarray(f(xp), dtype=float) - np.asarray(f(xm), dtype=float)) / hi)
    return np.stack(cols)


def central_hessian(f, x, scale=SECOND):
    """Hessian of a scalar function from function values only."""
    x = np.asarray(x, dtype=float)
    n = x.size
    h = steps(x, scale)
    out = np.empty((n, n))
    f0 = f(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        out[i, i] = (f(x + ei) - 2.0 * f0 + f(x - ei)) / (h[i] * h[i])
        for j in range(i):
            ej = np.zeros(n)
            ej[j] = h[j]
            v = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (
                4.0 * h[i] * h[j]
            )
            out[i, j] = out[j, i] = v
    return out


def directional(f, x, v, eps):
    """Central difference of ``f`` along direction ``v``."""
    return (f(x + eps * v) - f(x - eps * v)) / (2.0 * eps)
