"""Pure-numpy twins of the compiled kernels.

Features are accumulated one at a time in index order so the floating-point
sums match the compiled loops bit-for-bit.
"""
import numpy as np

_CHUNK = 512


def sq_distances(a, b):
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    out = np.empty((a.shape[0], b.shape[0]))
    for s in range(0, a.shape[0], _CHUNK):
        blk = a[s:s + _CHUNK]
        acc = np.zeros((blk.shape[0], b.shape[0]))
        for f in range(a.shape[1]):
            diff = blk[:, f, None] - b[None, :, f]
            acc = acc + diff * diff
        out[s:s + _CHUNK] = acc
    return out


def knn_indices(query, ref, k, exclude_self=False):
    query = np.ascontiguousarray(query, dtype=np.float64)
    ref = np.ascontiguousarray(ref, dtype=np.float64)
    out = np.empty((query.shape[0], k), dtype=np.int64)
    for s in range(0, query.shape[0], _CHUNK):
        d = sq_distances(query[s:s + _CHUNK], ref)
        if exclude_self:
            rows = np.arange(d.shape[0])
            d[rows, rows + s] = np.inf
        out[s:s + _CHUNK] = np.argsort(d, axis=1, kind="stable")[:, :k]
    return out


def nan_distances(a, b):
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    d = a.shape[1]
    out = np.empty((a.shape[0], b.shape[0]))
    for s in range(0, a.shape[0], _CHUNK):
        blk = a[s:s + _CHUNK]
        acc = np.zeros((blk.shape[0], b.shape[0]))
        cnt = np.zeros((blk.shape[0], b.shape[0]), dtype=np.int64)
        for f in range(d):
            diff = blk[:, f, None] - b[None, :, f]
            ok = ~np.isnan(diff)
            acc = acc + np.where(ok, diff * diff, 0.0)
            cnt += ok
        with np.errstate(divide="ignore", invalid="ignore"):
            res = acc * (d / cnt)
        res[cnt == 0] = np.inf
        out[s:s + _CHUNK] = res
    return out
