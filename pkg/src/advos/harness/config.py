"""Flat ``key = value`` experiment configuration.

Example::

    # pima.exp
    datasets = ../datasets/pima.cfg
    methods = Q, DO
    seeds = 1, 2, 3
    output_dir = pima
    epochs = 100

Keys are the ExperimentConfig fields below plus any TrainConfig field
(``epochs``, ``fraction``, ``g_widths = 128,64`` ...). ``resampler = SMOTE``
is shorthand for adding the ``SMOTE+Q`` method. Relative manifest paths
resolve against the config file's directory.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from ..adversarial.training import TrainConfig
from ..errors import ConfigurationError

METHODS = ("Q", "RO+Q", "SMOTE+Q", "B-SMOTE+Q", "ADASYN+Q", "AO", "DO")
OUTPUT_ROOT_ENV = "ADVOS_OUTPUT_ROOT"

_TUPLE_FIELDS = {"g_widths": int, "d_widths": int, "q_widths": int, "betas_gd": float, "betas_q": float}


def parse_kv(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment, blank lines skip."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigurationError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigurationError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _split_list(value: str) -> list:
    return [v.strip() for v in value.split(",") if v.strip()]


def coerce_train_value(key: str, value):
    """Convert a config string to the type of TrainConfig field ``key``."""
    if not isinstance(value, str):
        return value
    if key in _TUPLE_FIELDS:
        try:
            return tuple(_TUPLE_FIELDS[key](v) for v in _split_list(value))
        except ValueError as e:
            raise ConfigurationError(f"{key}: {e}") from None
    kind = type(getattr(TrainConfig, key))
    try:
        return kind(value)
    except ValueError:
        raise ConfigurationError(f"{key}: cannot read {value!r} as {kind.__name__}") from None


@dataclass
class ExperimentConfig:
    datasets: list
    methods: list = field(default_factory=lambda: ["Q", "DO"])
    seeds: list = field(default_factory=lambda: [1, 2, 3])
    output_dir: str = "results"
    train: dict = field(default_factory=dict)
    resampler_k: int = 5
    subsample: Optional[int] = None
    jobs: int = 1

    def __post_init__(self):
        self.datasets = [str(d) for d in self.datasets]
        self.methods = list(self.methods)
        self.seeds = [int(s) for s in self.seeds]
        if not self.datasets:
            raise ConfigurationError("at least one dataset manifest is required")
        if not self.seeds:
            raise ConfigurationError("at least one seed is required")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ConfigurationError(f"unknown method(s) {bad}; choose from {METHODS}")
        names = {f.name for f in fields(TrainConfig)} - {"regime", "seed"}
        unknown = set(self.train) - names
        if unknown:
            raise ConfigurationError(f"unknown TrainConfig override(s) {sorted(unknown)}")
        self.train = {k: coerce_train_value(k, v) for k, v in self.train.items()}
        self.train_config("DO", 0)  # validate overrides early
        if self.resampler_k < 1 or self.jobs < 1:
            raise ConfigurationError("resampler_k and jobs must be >= 1")
        if self.subsample is not None and self.subsample < 2:
            raise ConfigurationError("subsample must be >= 2 rows")

    def train_config(self, regime: str, seed: int) -> TrainConfig:
        return TrainConfig(**{**self.train, "regime": regime, "seed": seed})

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)

    def output_path(self) -> Path:
        root = os.environ.get(OUTPUT_ROOT_ENV)
        p = Path(self.output_dir)
        return p if p.is_absolute() or not root else Path(root) / p

    def to_dict(self) -> dict:
        train = {k: list(v) if isinstance(v, tuple) else v for k, v in sorted(self.train.items())}
        return {"datasets": self.datasets, "methods": self.methods, "seeds": self.seeds,
                "output_dir": self.output_dir, "train": train, "resampler_k": self.resampler_k,
                "subsample": self.subsample, "jobs": self.jobs}

    def digest(self) -> str:
        d = self.to_dict()
        d.pop("output_dir")
        d.pop("jobs")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    @classmethod
    def from_kv(cls, kv: dict, base: Optional[Path] = None) -> "ExperimentConfig":
        kv = dict(kv)
        base = Path(base) if base is not None else Path.cwd()
        if "datasets" not in kv and "dataset" not in kv:
            raise ConfigurationError("config needs a 'datasets' key")
        ds = _split_list(kv.pop("datasets", None) or kv.pop("dataset"))
        ds = [str(p if Path(p).is_absolute() else (base / p).resolve()) for p in ds]
        kw = {"datasets": ds}
        if "methods" in kv or "method" in kv:
            kw["methods"] = _split_list(kv.pop("methods", None) or kv.pop("method"))
        if "resampler" in kv:
            # ``resampler = SMOTE, ADASYN`` adds the SMOTE+Q and ADASYN+Q cells
            extra = [f"{r}+Q" for r in _split_list(kv.pop("resampler"))]
            listed = kw.get("methods", [])
            kw["methods"] = listed + [m for m in extra if m not in listed]
        try:
            if "seeds" in kv:
                kw["seeds"] = [int(s) for s in _split_list(kv.pop("seeds"))]
            for key in ("resampler_k", "jobs", "subsample"):
                if key in kv:
                    kw[key] = int(kv.pop(key))
        except ValueError as e:
            raise ConfigurationError(str(e)) from None
        if kw.get("subsample") == 0:
            kw["subsample"] = None
        if "output_dir" in kv:
            kw["output_dir"] = kv.pop("output_dir")
        kw["train"] = kv
        return cls(**kw)

    @classmethod
    def read(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as e:
            raise ConfigurationError(f"cannot read config {path}: {e}") from None
        try:
            return cls.from_kv(parse_kv(text), base=path.parent)
        except ConfigurationError as e:
            raise ConfigurationError(f"{path}: {e}") from None
