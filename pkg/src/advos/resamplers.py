"""Classical oversampling baselines: RO, SMOTE, Borderline-SMOTE and ADASYN.

Each function takes a training matrix and canonical labels and returns
``(X_out, y_out)``: the original rows untouched and in order, followed by the
synthetic rows. Every class smaller than the largest is grown (one-vs-rest)
toward the largest class size.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigurationError, NotApplicableError

log = logging.getLogger(__name__)

METHODS = ("RO", "SMOTE", "B-SMOTE", "ADASYN")


@dataclass(frozen=True)
class ResampleSpec:
    method: str = "SMOTE"
    k: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown resampler {self.method!r}; choose from {METHODS}")
        if self.k < 1:
            raise ConfigurationError("k must be >= 1")


def _targets(y):
    sizes = np.bincount(y)
    return sizes, int(sizes.max())


def _interpolate(X_c, bases, nn, rng):
    """x_new = x_base + u * (x_neighbor - x_base), u ~ U(0, 1), one neighbor
    drawn uniformly from the base's neighbor list."""
    if len(bases) == 0:
        return np.empty((0, X_c.shape[1]))
    pick = nn[bases, rng.integers(0, nn.shape[1], size=len(bases))]
    u = rng.uniform(0.0, 1.0, size=(len(bases), 1))
    return X_c[bases] + u * (X_c[pick] - X_c[bases])


def _effective_k(k, n_c, label):
    if n_c - 1 < k:
        log.warning("class %s has %d samples; lowering k from %d to %d", label, n_c, k, n_c - 1)
    return min(k, n_c - 1)


def _finish(X, y, new_X, new_y):
    if not new_X:
        return X.copy(), y.copy()
    return np.vstack([X] + new_X), np.concatenate([y] + new_y)


def random_oversample(X, y, spec: ResampleSpec = ResampleSpec("RO")):
    X, y = np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.int64)
    rng = np.random.default_rng(spec.seed)
    sizes, top = _targets(y)
    new_X, new_y = [], []
    for c, n_c in enumerate(sizes):
        if n_c == 0 or n_c == top:
            continue
        idx = rng.choice(np.flatnonzero(y == c), size=top - n_c, replace=True)
        new_X.append(X[idx])
        new_y.append(np.full(len(idx), c))
    return _finish(X, y, new_X, new_y)


def smote(X, y, spec: ResampleSpec = ResampleSpec("SMOTE")):
    X, y = np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.int64)
    rng = np.random.default_rng(spec.seed)
    sizes, top = _targets(y)
    new_X, new_y = [], []
    for c, n_c in enumerate(sizes):
        if n_c == 0 or n_c == top:
            continue
        X_c = X[y == c]
        need = top - n_c
        if n_c == 1:
            log.warning("class %d has a single sample; duplicating instead of SMOTE", c)
            new_X.append(np.repeat(X_c, need, axis=0))
        else:
            nn = kernels.knn_indices(X_c, X_c, _effective_k(spec.k, n_c, c), exclude_self=True)
            bases = rng.integers(0, n_c, size=need)
            new_X.append(_interpolate(X_c, bases, nn, rng))
        new_y.append(np.full(need, c))
    return _finish(X, y, new_X, new_y)


def danger_mask(X, y, c, m):
    """Borderline-SMOTE classification of class-c points from their m nearest
    neighbors in the whole set: (danger, noise) boolean masks over class c."""
    idx_c = np.flatnonzero(y == c)
    nn = kernels.knn_indices(X[idx_c], X, m + 1)
    # drop the point itself (always at distance 0; a duplicate may sort first)
    own = nn == idx_c[:, None]
    trimmed = np.array([row[~o][:m] if o.any() else row[:m] for row, o in zip(nn, own)])
    n_other = (y[trimmed] != c).sum(axis=1)
    danger = (n_other * 2 >= m) & (n_other < m)
    noise = n_other == m
    return danger, noise


def borderline_smote(X, y, spec: ResampleSpec = ResampleSpec("B-SMOTE")):
    X, y = np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.int64)
    rng = np.random.default_rng(spec.seed)
    sizes, top = _targets(y)
    new_X, new_y = [], []
    for c, n_c in enumerate(sizes):
        if n_c == 0 or n_c == top:
            continue
        X_c = X[y == c]
        need = top - n_c
        if n_c == 1:
            log.warning("class %d has a single sample; duplicating instead of B-SMOTE", c)
            new_X.append(np.repeat(X_c, need, axis=0))
            new_y.append(np.full(need, c))
            continue
        k = _effective_k(spec.k, n_c, c)
        danger, _ = danger_mask(X, y, c, min(spec.k, len(X) - 1))
        nn = kernels.knn_indices(X_c, X_c, k, exclude_self=True)
        pool = np.flatnonzero(danger)
        if pool.size == 0:
            log.info("class %d has no danger points; using plain SMOTE", c)
            pool = np.arange(n_c)
        bases = pool[rng.integers(0, pool.size, size=need)]
        new_X.append(_interpolate(X_c, bases, nn, rng))
        new_y.append(np.full(need, c))
    return _finish(X, y, new_X, new_y)


def adasyn_allocation(ratios, total: int) -> np.ndarray:
    """Split ``total`` across points proportionally to ``ratios``; exact total
    via largest remainder (ties: lower index). All-zero ratios mean uniform."""
    r = np.asarray(ratios, dtype=np.float64)
    if r.sum() <= 0:
        r = np.ones_like(r)
    share = total * r / r.sum()
    out = np.floor(share).astype(np.int64)
    rem = share - out
    order = np.argsort(-rem, kind="stable")
    out[order[: total - int(out.sum())]] += 1
    return out


def adasyn(X, y, spec: ResampleSpec = ResampleSpec("ADASYN")):
    X, y = np.asarray(X, dtype=np.float64), np.asarray(y, dtype=np.int64)
    rng = np.random.default_rng(spec.seed)
    sizes, top = _targets(y)
    small = [c for c, n in enumerate(sizes) if 0 < n < top and n < spec.k + 1]
    if small:
        raise NotApplicableError(
            f"ADASYN needs >= {spec.k + 1} samples per oversampled class; "
            f"class(es) {small} have {[int(sizes[c]) for c in small]}")
    new_X, new_y = [], []
    for c, n_c in enumerate(sizes):
        if n_c == 0 or n_c == top:
            continue
        idx_c = np.flatnonzero(y == c)
        nn_all = kernels.knn_indices(X[idx_c], X, spec.k + 1)
        own = nn_all == idx_c[:, None]
        nn_all = np.array([row[~o][: spec.k] if o.any() else row[: spec.k] for row, o in zip(nn_all, own)])
        ratios = (y[nn_all] != c).mean(axis=1)
        if ratios.sum() == 0:
            log.warning("class %d: no foreign neighbors; uniform ADASYN allocation", c)
        alloc = adasyn_allocation(ratios, top - n_c)
        X_c = X[idx_c]
        nn = kernels.knn_indices(X_c, X_c, spec.k, exclude_self=True)
        bases = np.repeat(np.arange(n_c), alloc)
        new_X.append(_interpolate(X_c, bases, nn, rng))
        new_y.append(np.full(len(bases), c))
    return _finish(X, y, new_X, new_y)


_DISPATCH = {"RO": random_oversample, "SMOTE": smote, "B-SMOTE": borderline_smote, "ADASYN": adasyn}


def resample(X, y, spec: ResampleSpec):
    if len(np.unique(y)) < 2:
        raise ConfigurationError("resampling needs at least two classes")
    return _DISPATCH[spec.method](X, y, spec)
