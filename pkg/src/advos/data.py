"""Table ingestion, imputation, scaling and stratified splitting."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from . import kernels
from .errors import ImputationError, IngestionError, SplitError

log = logging.getLogger(__name__)

MISSING_TOKENS = ("", "?", "NA", "N/A", "NaN", "nan", "null", "NULL")


@dataclass
class RawTable:
    """Feature cells as float64 with NaN for missing, plus string labels."""

    columns: list
    values: np.ndarray
    labels: np.ndarray
    label_column: str = "class"

    @property
    def n_missing(self) -> int:
        return int(np.isnan(self.values).sum())


def load_csv(path, label_column: str = "class", missing_tokens: Sequence[str] = MISSING_TOKENS,
             delimiter: str = ",", drop_columns: Sequence[str] = ()) -> RawTable:
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"{path}: no such file")
    missing = set(missing_tokens)
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise IngestionError(f"{path}: empty file") from None
        if label_column not in header:
            raise IngestionError(f"{path}: label column {label_column!r} not in header")
        li = header.index(label_column)
        # unnamed header cells are row indices written by dataframe tools
        keep = [i for i, h in enumerate(header) if i != li and h and h not in drop_columns]
        rows, labels = [], []
        for r, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise IngestionError(f"{path}: row {r} has {len(rec)} cells, header has {len(header)}")
            lab = rec[li].strip()
            if lab in missing:
                raise IngestionError(f"{path}: row {r} has a missing label")
            vals = []
            for i in keep:
                cell = rec[i].strip()
                if cell in missing:
                    vals.append(np.nan)
                    continue
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise IngestionError(f"{path}: row {r}, column {header[i]!r}: cannot parse {cell!r}") from None
            rows.append(vals)
            labels.append(lab)
    values = np.array(rows, dtype=np.float64).reshape(len(rows), len(keep))
    return RawTable([header[i] for i in keep], values, np.array(labels), label_column)


def knn_impute(table: RawTable, k: int = 2) -> RawTable:
    """Fill each missing cell with the mean of that attribute over the ``k``
    nearest rows that observe it. Distances use mutually observed attributes
    rescaled by d / n_shared; ties go to the lower row index. Observed cells
    are never touched and imputed values never feed later imputations.
    """
    if k < 1:
        raise ImputationError("k must be >= 1")
    X = table.values
    miss = np.isnan(X)
    if not miss.any():
        return table
    if np.any(miss.all(axis=0)):
        cols = [table.columns[j] for j in np.flatnonzero(miss.all(axis=0))]
        raise ImputationError(f"attribute(s) missing in every row: {cols}")
    if np.any(miss.all(axis=1)):
        raise ImputationError("a row has no observed attribute")
    out = X.copy()
    rows_with_missing = np.flatnonzero(miss.any(axis=1))
    dist = kernels.nan_distances(X[rows_with_missing], X)
    for pos, r in enumerate(rows_with_missing):
        d = dist[pos].copy()
        d[r] = np.inf
        order = np.argsort(d, kind="stable")
        for j in np.flatnonzero(miss[r]):
            donors = order[~miss[order, j] & np.isfinite(d[order])][:k]
            if donors.size == 0:
                raise ImputationError(f"row {r}: no donor shares an attribute with it for column {table.columns[j]!r}")
            out[r, j] = X[donors, j].mean()
    return RawTable(list(table.columns), out, table.labels.copy(), table.label_column)


def median_impute(table: RawTable) -> RawTable:
    X = table.values.copy()
    miss = np.isnan(X)
    if not miss.any():
        return table
    if np.any(miss.all(axis=0)):
        raise ImputationError("attribute missing in every row")
    med = np.nanmedian(X, axis=0)
    X[miss] = np.take(med, np.nonzero(miss)[1])
    return RawTable(list(table.columns), X, table.labels.copy(), table.label_column)


@dataclass(frozen=True)
class Dataset:
    """Features and canonical class ids (0 = smallest class)."""

    X: np.ndarray
    y: np.ndarray
    class_names: tuple
    feature_names: tuple = ()

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def class_sizes(self) -> np.ndarray:
        return np.bincount(self.y, minlength=self.n_classes)

    def class_indices(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.y == k)

    def class_block(self, k: int) -> np.ndarray:
        return self.X[self.y == k]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.X[idx], self.y[idx], self.class_names, self.feature_names)

    def with_features(self, X) -> "Dataset":
        return Dataset(np.asarray(X, dtype=np.float64), self.y, self.class_names, self.feature_names)


def to_dataset(table: RawTable) -> Dataset:
    """Re-index classes in ascending size order (ties: label name)."""
    names, counts = np.unique(table.labels, return_counts=True)
    order = sorted(range(len(names)), key=lambda i: (counts[i], str(names[i])))
    remap = {names[i]: new for new, i in enumerate(order)}
    y = np.array([remap[l] for l in table.labels], dtype=np.int64)
    if np.isnan(table.values).any():
        raise IngestionError("table still has missing cells; impute first")
    return Dataset(table.values.astype(np.float64), y, tuple(str(names[i]) for i in order),
                   tuple(table.columns))


def class_stats(dataset: Dataset) -> tuple:
    """(class sizes, imbalance ratio largest/smallest rounded to 2 decimals)."""
    sizes = dataset.class_sizes
    if sizes.size == 0 or sizes.min() == 0:
        raise SplitError("empty class")
    return sizes.tolist(), round(float(sizes.max() / sizes.min()), 2)


def normalize_fit_transform(train_X, test_X=None):
    """Min-max scale with train statistics; constant features map to 0.5.

    Returns (train, test, (mins, maxs)). Test values are clipped to [0, 1].
    """
    train_X = np.asarray(train_X, dtype=np.float64)
    if train_X.shape[0] == 0:
        raise ValueError("empty training matrix")
    lo, hi = train_X.min(axis=0), train_X.max(axis=0)
    span = hi - lo
    const = span == 0

    def apply(A):
        A = np.asarray(A, dtype=np.float64)
        out = (A - lo) / np.where(const, 1.0, span)
        out[:, const] = 0.5
        return np.clip(out, 0.0, 1.0)

    return apply(train_X), (None if test_X is None else apply(test_X)), (lo, hi)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    stratified: bool = True
    seed: int = 0
    # explicit per-class train counts keyed by class name (overrides fraction)
    train_counts: Optional[Mapping[str, int]] = None

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise SplitError(f"train fraction must lie in (0, 1), got {self.train_fraction}")


def allocate_train_counts(sizes: Sequence[int], fraction: float) -> np.ndarray:
    """Per-class train counts by largest remainder.

    The train total is N - ceil((1 - fraction) * N). Each class gets the floor
    of its proportional share, and leftover slots go to the largest fractional
    parts (ties: larger class, then lower id). Classes with >= 2 samples keep
    at least one sample on each side.
    """
    sizes = np.asarray(sizes, dtype=np.int64)
    N = int(sizes.sum())
    n_test = math.ceil(round((1.0 - fraction) * N, 9))
    n_train = N - n_test
    # integer arithmetic keeps remainder ties exact
    counts, rem = np.divmod(n_train * sizes, N)
    order = sorted(range(len(sizes)), key=lambda k: (-rem[k], -sizes[k], k))
    for k in order[: n_train - int(counts.sum())]:
        counts[k] += 1
    for k in range(len(sizes)):
        if sizes[k] >= 2:
            counts[k] = min(max(counts[k], 1), sizes[k] - 1)
    return counts


def stratified_split(dataset: Dataset, spec: SplitSpec, rng: Optional[np.random.Generator] = None):
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    sizes = dataset.class_sizes
    if np.any(sizes == 0):
        raise SplitError(f"empty class in {dataset.class_names}")
    if not spec.stratified and spec.train_counts is None:
        perm = rng.permutation(dataset.n)
        n_train = dataset.n - math.ceil(round((1.0 - spec.train_fraction) * dataset.n, 9))
        return dataset.subset(np.sort(perm[:n_train])), dataset.subset(np.sort(perm[n_train:]))

    if spec.train_counts is not None:
        missing = set(dataset.class_names) - set(spec.train_counts)
        if missing:
            raise SplitError(f"train_counts lacks classes {sorted(missing)}")
        counts = np.array([int(spec.train_counts[c]) for c in dataset.class_names])
        if np.any(counts < 0) or np.any(counts > sizes):
            raise SplitError(f"train_counts {counts.tolist()} exceed class sizes {sizes.tolist()}")
    else:
        counts = allocate_train_counts(sizes, spec.train_fraction)
    train_idx, test_idx = [], []
    for k in range(dataset.n_classes):
        idx = rng.permutation(dataset.class_indices(k))
        train_idx.append(idx[: counts[k]])
        test_idx.append(idx[counts[k]:])
    train_idx = np.sort(np.concatenate(train_idx))
    test_idx = np.sort(np.concatenate(test_idx))
    return dataset.subset(train_idx), dataset.subset(test_idx)


def stratified_subsample(dataset: Dataset, n: int, rng: np.random.Generator) -> Dataset:
    """Class-proportional subsample of ``n`` rows (for quick runs)."""
    if n >= dataset.n:
        return dataset
    counts = allocate_train_counts(dataset.class_sizes, n / dataset.n)
    idx = np.concatenate([rng.permutation(dataset.class_indices(k))[: counts[k]]
                          for k in range(dataset.n_classes)])
    return dataset.subset(np.sort(idx))


@dataclass
class Manifest:
    """Per-dataset ingestion recipe, read from a flat ``key = value`` file."""

    name: str
    path: Path
    label_column: str = "class"
    delimiter: str = ","
    missing_tokens: tuple = MISSING_TOKENS
    imputation: str = "none"          # none | knn | median
    knn_k: int = 2
    split: str = "stratified"         # stratified | random | fixed
    train_fraction: float = 0.7
    train_counts: Optional[dict] = None
    test_path: Optional[Path] = None
    drop_columns: tuple = ()
    extra: dict = field(default_factory=dict)

    @classmethod
    def read(cls, path) -> "Manifest":
        from .harness.config import parse_kv

        path = Path(path)
        kv = parse_kv(path.read_text())
        base = path.parent

        def resolve(p):
            p = Path(p)
            return p if p.is_absolute() else (base / p).resolve()

        if "path" not in kv:
            raise IngestionError(f"{path}: manifest needs a 'path' key")
        m = cls(name=kv.pop("name", path.stem), path=resolve(kv.pop("path")))
        if "label_column" in kv:
            m.label_column = kv.pop("label_column")
        if "delimiter" in kv:
            m.delimiter = kv.pop("delimiter").replace("\\t", "\t")
        if "missing_tokens" in kv:
            m.missing_tokens = tuple(t.strip() for t in kv.pop("missing_tokens").split("|"))
        if "imputation" in kv:
            m.imputation = kv.pop("imputation")
        if "knn_k" in kv:
            m.knn_k = int(kv.pop("knn_k"))
        if "split" in kv:
            m.split = kv.pop("split")
        if "train_fraction" in kv:
            m.train_fraction = float(kv.pop("train_fraction"))
        if "train_counts" in kv:
            pairs = [p.split(":") for p in kv.pop("train_counts").split(",")]
            m.train_counts = {a.strip(): int(b) for a, b in pairs}
        if "test_path" in kv:
            m.test_path = resolve(kv.pop("test_path"))
        if "drop_columns" in kv:
            m.drop_columns = tuple(c.strip() for c in kv.pop("drop_columns").split(","))
        if m.imputation not in ("none", "knn", "median"):
            raise IngestionError(f"{path}: unknown imputation {m.imputation!r}")
        if m.split not in ("stratified", "random", "fixed"):
            raise IngestionError(f"{path}: unknown split {m.split!r}")
        if m.split == "fixed" and m.test_path is None:
            raise IngestionError(f"{path}: fixed split needs test_path")
        m.extra = kv
        return m

    def _load(self, p) -> RawTable:
        return load_csv(p, self.label_column, self.missing_tokens, self.delimiter, self.drop_columns)

    def _impute(self, t: RawTable) -> RawTable:
        if self.imputation == "knn":
            return knn_impute(t, self.knn_k)
        if self.imputation == "median":
            return median_impute(t)
        if t.n_missing:
            raise ImputationError(f"{self.name}: {t.n_missing} missing cells but imputation = none")
        return t

    def load(self) -> Dataset:
        return to_dataset(self._impute(self._load(self.path)))

    def train_test(self, seed: int, subsample: Optional[int] = None) -> tuple:
        """Raw (unnormalized) train and test Datasets for this seed.

        ``subsample`` (rows) shrinks the data class-proportionally first; with a
        fixed split both files shrink by the same fraction.
        """
        rng = np.random.default_rng(seed)
        if self.split == "fixed":
            tr, te = self._load(self.path), self._load(self.test_path)
            both = RawTable(tr.columns, np.vstack([tr.values, te.values]),
                            np.concatenate([tr.labels, te.labels]), tr.label_column)
            full = to_dataset(self._impute(both))
            n_tr = tr.values.shape[0]
            train, test = full.subset(np.arange(n_tr)), full.subset(np.arange(n_tr, full.n))
            if subsample:
                frac = min(1.0, subsample / full.n)
                train = stratified_subsample(train, round(frac * train.n), rng)
                test = stratified_subsample(test, round(frac * test.n), rng)
            return train, test
        full = self.load()
        if subsample:
            full = stratified_subsample(full, subsample, rng)
        spec = SplitSpec(self.train_fraction, self.split == "stratified", seed,
                         None if subsample else self.train_counts)
        return stratified_split(full, spec, rng)
