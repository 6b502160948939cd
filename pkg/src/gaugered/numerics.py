"""Finite-difference helpers shared by the field and bracket code."""

import numpy as np

FD_STEP = 1e-4


def fd_jacobian(fun, x, h=FD_STEP):
    """Fourth-order central differences of ``fun`` at ``x``.

    Returns an array of shape ``fun(x).shape + (len(x),)``; the trailing axis indexes
    the differentiation variable.
    """
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.shape[0]):
        step = np.zeros_like(x)
        step[i] = h
        d = (-fun(x + 2 * step) + 8 * fun(x + step) - 8 * fun(x - step) + fun(x - 2 * step)) / (12 * h)
        cols.append(np.asarray(d, dtype=float))
    return np.stack(cols, axis=-1)


def fd_gradient(fun, x, h=FD_STEP):
    return fd_jacobian(lambda y: np.asarray(fun(y), dtype=float), x, h)
