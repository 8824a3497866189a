"""Hot numeric inner loops: per-dimension histogram entropy and IoU matrices.

Each kernel has a numba-compiled version and a pure-numpy version with
identical binning arithmetic. The numba path is the default when numba
imports; set ``HITLOOP_NO_NUMBA=1`` to force the numpy path.
``benchmarks/bench_kernels.py`` compares the two.
"""

import os

import numpy as np

_FORCE_NUMPY = os.environ.get("HITLOOP_NO_NUMBA", "0") not in ("", "0")

HAS_NUMBA = False
if not _FORCE_NUMPY:
    try:
        from numba import njit

        HAS_NUMBA = True
    except ImportError:
        pass


def _as_matrix(values) -> np.ndarray:
    a = np.ascontiguousarray(values, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    return a


def bin_column(col: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Equal-width histogram of one dimension over its observed range.

    Returns (edges, counts). The last bin is inclusive of the upper edge;
    a zero-width range degenerates to a single bin holding every value.
    """
    lo, hi = float(col.min()), float(col.max())
    if hi == lo:
        return np.array([lo, hi]), np.array([col.size], dtype=np.int64)
    scale = k / (hi - lo)
    idx = ((col - lo) * scale).astype(np.int64)
    idx[idx >= k] = k - 1
    counts = np.bincount(idx, minlength=k)
    return np.linspace(lo, hi, k + 1), counts.astype(np.int64)


def _entropy_from_counts(counts: np.ndarray) -> float:
    n = counts.sum()
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def perdim_entropy_numpy(values, k: int) -> np.ndarray:
    """Histogram entropy (nats) of every column of an (N, d) matrix."""
    mat = _as_matrix(values)
    out = np.zeros(mat.shape[1])
    for j in range(mat.shape[1]):
        _, counts = bin_column(mat[:, j], k)
        out[j] = _entropy_from_counts(counts)
    return out


def iou_matrix_numpy(a, b) -> np.ndarray:
    """Pairwise IoU of (n, 4) and (m, 4) corner-format box arrays."""
    a = np.asarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 4)
    ix0 = np.maximum(a[:, None, 0], b[None, :, 0])
    iy0 = np.maximum(a[:, None, 1], b[None, :, 1])
    ix1 = np.minimum(a[:, None, 2], b[None, :, 2])
    iy1 = np.minimum(a[:, None, 3], b[None, :, 3])
    inter = np.clip(ix1 - ix0, 0, None) * np.clip(iy1 - iy0, 0, None)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    out = np.zeros_like(inter)
    np.divide(inter, union, out=out, where=union > 0)
    return out


if HAS_NUMBA:

    @njit(cache=True)
    def _perdim_entropy_jit(values, k):
        n, d = values.shape
        out = np.zeros(d)
        counts = np.zeros(k, dtype=np.int64)
        for j in range(d):
            lo = values[0, j]
            hi = values[0, j]
            for i in range(1, n):
                v = values[i, j]
                if v < lo:
                    lo = v
                if v > hi:
                    hi = v
            if hi == lo:
                out[j] = 0.0
                continue
            counts[:] = 0
            scale = k / (hi - lo)
            for i in range(n):
                idx = int((values[i, j] - lo) * scale)
                if idx >= k:
                    idx = k - 1
                counts[idx] += 1
            h = 0.0
            for b in range(k):
                if counts[b] > 0:
                    p = counts[b] / n
                    h -= p * np.log(p)
            out[j] = h
        return out

    @njit(cache=True)
    def _iou_matrix_jit(a, b):
        n, m = a.shape[0], b.shape[0]
        out = np.zeros((n, m))
        for i in range(n):
            ax0, ay0, ax1, ay1 = a[i, 0], a[i, 1], a[i, 2], a[i, 3]
            area_a = (ax1 - ax0) * (ay1 - ay0)
            for j in range(m):
                iw = min(ax1, b[j, 2]) - max(ax0, b[j, 0])
                if iw <= 0:
                    continue
                ih = min(ay1, b[j, 3]) - max(ay0, b[j, 1])
                if ih <= 0:
                    continue
                inter = iw * ih
                union = area_a + (b[j, 2] - b[j, 0]) * (b[j, 3] - b[j, 1]) - inter
                if union > 0:
                    out[i, j] = inter / union
        return out

    def perdim_entropy(values, k: int) -> np.ndarray:
        return _perdim_entropy_jit(_as_matrix(values), k)

    def iou_matrix(a, b) -> np.ndarray:
        a = np.ascontiguousarray(np.asarray(a, dtype=np.float64).reshape(-1, 4))
        b = np.ascontiguousarray(np.asarray(b, dtype=np.float64).reshape(-1, 4))
        return _iou_matrix_jit(a, b)

else:
    perdim_entropy = perdim_entropy_numpy
    iou_matrix = iou_matrix_numpy
