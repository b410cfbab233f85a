"""Benchmark matrix runner: dataset x method x seed cells."""
from __future__ import annotations

import functools
import logging
import math
import subprocess
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .. import __version__
from ..adversarial.training import train
from ..data import Dataset, Manifest, normalize_fit_transform
from ..errors import AdvosError, ConfigurationError, NotApplicableError
from ..metrics import EvalReport
from ..resamplers import ResampleSpec, resample
from .config import ExperimentConfig

log = logging.getLogger(__name__)

TIMING_KEYS = ("wall_time",)


@functools.lru_cache(maxsize=1)
def version_string() -> str:
    """Package version, plus ``+g<sha>`` when running from a git checkout."""
    try:
        sha = subprocess.run(["git", "rev-parse", "--short", "HEAD"], cwd=Path(__file__).parent,
                             capture_output=True, text=True, timeout=5).stdout.strip()
    except (OSError, subprocess.SubprocessError):
        sha = ""
    return f"{__version__}+g{sha}" if sha else __version__


@dataclass
class Cell:
    dataset: str
    method: str
    seed: int
    status: str = "ok"                 # ok | NA | failed
    error: Optional[str] = None
    best: Optional[EvalReport] = None
    final: Optional[EvalReport] = None
    regime: Optional[str] = None
    fraction: Optional[float] = None
    generated_per_epoch: Optional[list] = None
    n_train: Optional[list] = None
    n_test: Optional[list] = None
    config_hash: Optional[str] = None
    wall_time: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in ("dataset", "method", "seed", "status", "error", "regime",
                                           "fraction", "generated_per_epoch", "n_train", "n_test",
                                           "config_hash")}
        d["best"] = self.best.to_dict() if self.best else None
        d["final"] = self.final.to_dict() if self.final else None
        d["best_epoch"] = self.best.epoch if self.best else None
        d["wall_time"] = round(self.wall_time, 3)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Cell":
        d = dict(d)
        d.pop("best_epoch", None)
        for k in ("best", "final"):
            d[k] = EvalReport.from_dict(d[k]) if d.get(k) else None
        return cls(**d)


def _median(values):
    return float(np.median(values)) if values else None


@dataclass
class ResultTable:
    """Per-seed cells plus median-over-seeds aggregates (best-epoch scores)."""

    cells: list = field(default_factory=list)
    version: str = field(default_factory=version_string)
    experiment_hash: Optional[str] = None
    fraction: Optional[float] = None

    def get(self, dataset, method) -> list:
        return [c for c in self.cells if c.dataset == dataset and c.method == method]

    @property
    def datasets(self) -> list:
        return list(dict.fromkeys(c.dataset for c in self.cells))

    @property
    def methods(self) -> list:
        return list(dict.fromkeys(c.method for c in self.cells))

    def aggregate(self, dataset, method, which: str = "best") -> dict:
        cells = self.get(dataset, method)
        ok = [c for c in cells if c.ok]
        reps = [getattr(c, which) for c in ok]
        med_acsa = _median([r.acsa for r in reps])
        med_gm = _median([r.gm for r in reps])
        return {"dataset": dataset, "method": method, "seeds": [c.seed for c in cells],
                "n_ok": len(ok), "status": "ok" if ok else ("NA" if any(c.status == "NA" for c in cells) else "failed"),
                "acsa": None if med_acsa is None else round(med_acsa, 2),
                "gm": None if med_gm is None else round(med_gm, 2),
                "final_acsa": None if not ok else round(_median([c.final.acsa for c in ok]), 2),
                "final_gm": None if not ok else round(_median([c.final.gm for c in ok]), 2)}

    def aggregates(self) -> list:
        return [self.aggregate(d, m) for d in self.datasets for m in self.methods if self.get(d, m)]

    @property
    def all_ok(self) -> bool:
        return all(c.ok for c in self.cells)

    def to_dict(self) -> dict:
        return {"version": self.version, "experiment_hash": self.experiment_hash,
                "fraction": self.fraction, "selection": "best-epoch ACSA (final also reported)",
                "cells": [c.to_dict() for c in self.cells], "aggregates": self.aggregates()}

    @classmethod
    def from_dict(cls, d: dict) -> "ResultTable":
        return cls([Cell.from_dict(c) for c in d["cells"]], d.get("version", __version__),
                   d.get("experiment_hash"), d.get("fraction"))


def _load_split(manifest: Manifest, seed: int, subsample) -> tuple:
    tr, te = manifest.train_test(seed, subsample)
    a, b, _ = normalize_fit_transform(tr.X, te.X)
    return tr.with_features(a), te.with_features(b)


def run_cell(manifest_path: str, method: str, seed: int, config: ExperimentConfig) -> Cell:
    """One (dataset, method, seed) pipeline. Errors become NA/failed cells."""
    t0 = time.perf_counter()
    manifest = Manifest.read(manifest_path)
    cell = Cell(manifest.name, method, seed)
    try:
        tr, te = _load_split(manifest, seed, config.subsample)
        cell.n_train, cell.n_test = tr.class_sizes.tolist(), te.class_sizes.tolist()
        regime = method if method in ("AO", "DO") else "BASELINE_Q"
        tc = config.train_config(regime, seed)
        if method.endswith("+Q"):
            spec = ResampleSpec(method[:-2], k=config.resampler_k, seed=seed)
            X, y = resample(tr.X, tr.y, spec)
            tr = Dataset(X, y, tr.class_names, tr.feature_names)
        result = train(tr, te, tc)
        cell.best, cell.final = result.best, result.final
        cell.regime = result.regime
        cell.fraction = tc.fraction if result.regime != "BASELINE_Q" else None
        cell.generated_per_epoch = [int(c) for c in result.plan.counts] if result.regime != "BASELINE_Q" else None
        cell.config_hash = tc.digest()
    except NotApplicableError as e:
        cell.status, cell.error = "NA", str(e)
    except (AdvosError, ValueError, FloatingPointError) as e:
        log.debug("cell %s/%s/%d failed:\n%s", manifest.name, method, seed, traceback.format_exc())
        cell.status, cell.error = "failed", f"{type(e).__name__}: {e}"
    cell.wall_time = time.perf_counter() - t0
    log.info("%s %s seed %d: %s%s", cell.dataset, method, seed, cell.status,
             f" ACSA {cell.best.acsa:.2f} GM {cell.best.gm:.2f}" if cell.ok else f" ({cell.error})")
    return cell


def _check_inputs(config: ExperimentConfig):
    for p in config.datasets:
        m = Manifest.read(p) if Path(p).exists() else None
        if m is None:
            raise ConfigurationError(f"manifest not found: {p}")
        for f in (m.path, m.test_path):
            if f is not None and not Path(f).exists():
                raise ConfigurationError(f"{m.name}: data file not found: {f}")


def run(config: ExperimentConfig, fraction: Optional[float] = None, write: bool = True) -> ResultTable:
    """Run every configured cell; optionally write results under the output dir.

    ``fraction`` overrides the oversampling fraction of the AO/DO cells.
    """
    if fraction is not None:
        config = config.with_overrides(train={**config.train, "fraction": float(fraction)})
    _check_inputs(config)
    jobs = [(d, m, s) for d in config.datasets for m in config.methods for s in config.seeds]
    if config.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            futures = [pool.submit(run_cell, d, m, s, config) for d, m, s in jobs]
            cells = [f.result() for f in futures]
    else:
        cells = [run_cell(d, m, s, config) for d, m, s in jobs]
    table = ResultTable(cells, experiment_hash=config.digest(), fraction=fraction)
    if write:
        from .tables import emit_table
        emit_table(table, config.output_path())
    return table


def parse_grid(spec: str) -> list:
    """``a:b:step`` (inclusive) or a comma list -> sorted unique fractions."""
    try:
        if ":" in spec:
            a, b, step = (float(v) for v in spec.split(":"))
            if step <= 0:
                raise ConfigurationError("grid step must be > 0")
            n = int(math.floor(round((b - a) / step, 9))) + 1
            grid = [round(a + i * step, 10) for i in range(n)]
        else:
            grid = [float(v) for v in spec.split(",") if v.strip()]
    except ValueError:
        raise ConfigurationError(f"bad grid {spec!r}") from None
    if not grid or any(not 0.0 < f <= 1.0 for f in grid):
        raise ConfigurationError(f"grid values must lie in (0, 1]: {grid}")
    return sorted(set(grid))


def sweep_fs(config: ExperimentConfig, grid: Sequence[float], write: bool = True) -> dict:
    """One full run per f; returns {f: ResultTable} and writes (f, ACSA) series."""
    bad = [m for m in config.methods if m not in ("AO", "DO")]
    if bad:
        raise ConfigurationError(f"sweep needs AO/DO methods only, got {bad}")
    _check_inputs(config)
    tables = {}
    for f in grid:
        tables[float(f)] = run(config, fraction=float(f), write=False)
    if write:
        from .tables import emit_sweep
        emit_sweep(tables, config.output_path())
    return tables


def sweep_series(tables: dict) -> dict:
    """{(dataset, method): [(f, median best ACSA or None), ...]}."""
    out = {}
    for f, t in sorted(tables.items()):
        for agg in t.aggregates():
            out.setdefault((agg["dataset"], agg["method"]), []).append((f, agg["acsa"]))
    return out
