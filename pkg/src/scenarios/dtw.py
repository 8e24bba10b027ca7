import logging
from typing import Optional, Sequence

import numpy as np
from numba import njit
from scipy.spatial.distance import cdist

logger = logging.getLogger("scenarios.dtw")


@njit(cache=True)
def _accumulate(cost: np.ndarray, window: int) -> float:
    n, m = cost.shape
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        lo = 1
        hi = m
        if window >= 0:
            lo = max(1, i - window)
            hi = min(m, i + window)
        for j in range(lo, hi + 1):
            best = acc[i - 1, j - 1]
            if acc[i - 1, j] < best:
                best = acc[i - 1, j]
            if acc[i, j - 1] < best:
                best = acc[i, j - 1]
            acc[i, j] = cost[i - 1, j - 1] + best
    return acc[n, m]


def _as_series(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError("DTW needs a non-empty series of shape (length,) or (length, dims)")
    return arr


def dtw_distance(a, b, window: Optional[int] = None) -> float:
    """Dynamic time warping cost with a Euclidean local metric.

    Multidimensional series are (length, dims) arrays; the local cost between two
    time steps is the Euclidean distance of their feature vectors. `window` is an
    optional Sakoe-Chiba band half-width in steps.
    """
    a = _as_series(a)
    b = _as_series(b)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"Series dimensions differ: {a.shape[1]} vs {b.shape[1]}")
    if window is not None:
        if window < 0:
            raise ValueError("window must be non-negative")
        window = max(window, abs(a.shape[0] - b.shape[0]))
    cost = np.ascontiguousarray(cdist(a, b, metric="euclidean"))
    return float(_accumulate(cost, -1 if window is None else int(window)))


def pairwise_dtw(series: Sequence, window: Optional[int] = None) -> np.ndarray:
    """Symmetric matrix of DTW distances."""
    n = len(series)
    prepared = [_as_series(s) for s in series]
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dist[i, j] = dist[j, i] = dtw_distance(prepared[i], prepared[j], window)
    logger.debug(f"Computed {n * (n - 1) // 2} DTW distances")
    return dist


def cross_dtw(rows: Sequence, cols: Sequence, window: Optional[int] = None) -> np.ndarray:
    out = np.zeros((len(rows), len(cols)))
    cols = [_as_series(c) for c in cols]
    for i, r in enumerate(rows):
        r = _as_series(r)
        for j, c in enumerate(cols):
            out[i, j] = dtw_distance(r, c, window)
    return out
