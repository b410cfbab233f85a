"""Neighbor-search kernels, compiled when available.

The Cython extension is used unless it failed to build or ``ADVOS_PURE_PYTHON``
is set to a non-empty value other than ``0``. ``BACKEND`` names the choice.

All functions take float64 row matrices. Neighbor lists are ordered by
(squared distance, reference index), so ties resolve toward lower indices.
"""
import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("ADVOS_PURE_PYTHON", "0") in ("", "0"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py


def _c(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def sq_distances(a, b):
    """Squared Euclidean distances, shape (len(a), len(b))."""
    return _impl.sq_distances(_c(a), _c(b))


def knn_indices(query, ref, k, exclude_self=False):
    """Indices into ``ref`` of the ``k`` nearest rows for each query row.

    With ``exclude_self`` the query must be ``ref`` itself and row ``i`` never
    lists itself (duplicates of it still can).
    """
    query, ref = _c(query), _c(ref)
    avail = ref.shape[0] - (1 if exclude_self else 0)
    if not 1 <= k <= avail:
        raise ValueError(f"k={k} but only {avail} candidate neighbors")
    if exclude_self and query.shape[0] != ref.shape[0]:
        raise ValueError("exclude_self requires query is ref")
    return _impl.knn_indices(query, ref, int(k), bool(exclude_self))


def nan_distances(a, b):
    """Squared distances over mutually observed features, rescaled by
    d / n_shared; ``inf`` where no feature is shared. NaN marks missing."""
    return _impl.nan_distances(_c(a), _c(b))
