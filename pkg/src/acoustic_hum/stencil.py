"""Staggered difference primitives.

All functions act on the trailing ``d`` axes so that arrays may carry
leading batch dimensions.
"""

import numpy as np


def face_diff(c: np.ndarray, axis: int, d: int) -> np.ndarray:
    """``c[j] - c[j-1]`` on faces ``j = 0..n``, with zero beyond the box."""
    ax = c.ndim - d + axis
    pad = [(0, 0)] * c.ndim
    pad[ax] = (1, 1)
    return np.diff(np.pad(c, pad), axis=ax)


def cell_diff(f: np.ndarray, axis: int, d: int) -> np.ndarray:
    """``f[j+1] - f[j]`` on cells."""
    return np.diff(f, axis=f.ndim - d + axis)


def face_average(c: np.ndarray, axis: int, d: int) -> np.ndarray:
    ax = c.ndim - d + axis
    pad = [(0, 0)] * c.ndim
    pad[ax] = (1, 1)
    cp = np.pad(c, pad)
    n = cp.shape[ax]
    return 0.5 * (np.take(cp, range(1, n), axis=ax) + np.take(cp, range(0, n - 1), axis=ax))


def cell_average(f: np.ndarray, axis: int, d: int) -> np.ndarray:
    ax = f.ndim - d + axis
    n = f.shape[ax]
    return 0.5 * (np.take(f, range(1, n), axis=ax) + np.take(f, range(0, n - 1), axis=ax))


def shift(c: np.ndarray, axis: int, offset: int, d: int, fill=0.0) -> np.ndarray:
    """``out[j] = c[j + offset]`` along ``axis``, ``fill`` where out of range."""
    ax = c.ndim - d + axis
    out = np.full_like(c, fill)
    n = c.shape[ax]
    src = [slice(None)] * c.ndim
    dst = [slice(None)] * c.ndim
    if offset >= 0:
        src[ax] = slice(offset, n)
        dst[ax] = slice(0, n - offset)
    else:
        src[ax] = slice(0, n + offset)
        dst[ax] = slice(-offset, n)
    out[tuple(dst)] = c[tuple(src)]
    return out
