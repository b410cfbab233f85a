import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from advos import _kernels_py, kernels

try:
    from advos import _kernels
except ImportError:
    _kernels = None

needs_ext = pytest.mark.skipif(_kernels is None, reason="compiled extension not built")


def brute_knn(query, ref, k, exclude_self=False):
    out = []
    for i, q in enumerate(query):
        d = [(float(np.sum((q - r) ** 2)), j) for j, r in enumerate(ref) if not (exclude_self and j == i)]
        out.append([j for _, j in sorted(d)[:k]])
    return np.array(out)


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")


def test_sq_distances_small():
    a = np.array([[0.0, 0.0], [1.0, 1.0]])
    b = np.array([[3.0, 4.0]])
    np.testing.assert_array_equal(kernels.sq_distances(a, b), [[25.0], [13.0]])


def test_knn_ties_prefer_lower_index():
    ref = np.array([[1.0], [-1.0], [1.0], [5.0]])
    np.testing.assert_array_equal(kernels.knn_indices(np.zeros((1, 1)), ref, 3), [[0, 1, 2]])


def test_knn_bad_k():
    x = np.zeros((3, 2))
    with pytest.raises(ValueError):
        kernels.knn_indices(x, x, 3, exclude_self=True)
    with pytest.raises(ValueError):
        kernels.knn_indices(x, x, 0)


def test_nan_distances_rescaled():
    a = np.array([[1.0, np.nan, 3.0]])
    b = np.array([[2.0, 5.0, np.nan], [np.nan, 1.0, np.nan]])
    # shared {0}: 1 * 3/1 ; nothing shared -> inf
    np.testing.assert_array_equal(kernels.nan_distances(a, b), [[3.0, np.inf]])


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 25), st.integers(1, 4), st.integers(0, 2 ** 31), st.booleans())
def test_knn_matches_brute_force(n, d, seed, excl):
    rng = np.random.default_rng(seed)
    # coarse grid forces ties
    X = rng.integers(0, 3, size=(n, d)).astype(float)
    k = int(rng.integers(1, n)) if excl else int(rng.integers(1, n + 1))
    got = kernels.knn_indices(X, X, k, exclude_self=excl)
    np.testing.assert_array_equal(got, brute_knn(X, X, k, excl))


@needs_ext
@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 6)),
              elements=st.one_of(st.floats(-1e3, 1e3), st.just(np.nan))),
       st.integers(1, 9))
def test_backends_bitwise_equal(a, m):
    b = np.nan_to_num(a[:m], nan=0.5) if len(a) >= 1 else a
    clean = np.nan_to_num(a, nan=0.25)
    np.testing.assert_array_equal(_kernels.nan_distances(a, a), _kernels_py.nan_distances(a, a))
    np.testing.assert_array_equal(_kernels.sq_distances(clean, b), _kernels_py.sq_distances(clean, b))
    k = min(len(b), 3)
    np.testing.assert_array_equal(_kernels.knn_indices(clean, b, k, False),
                                  _kernels_py.knn_indices(clean, b, k, False))


def test_pure_python_env_switch():
    import os
    import subprocess
    import sys
    env = dict(os.environ, ADVOS_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from advos import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True).stdout.strip()
    assert out == "python"
