"""Dense multilayer perceptrons on top of the autodiff tape."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import ConfigurationError, NumericError
from . import autodiff as ad
from .autodiff import Tensor

ACTIVATIONS = ("leaky_relu", "relu", "softmax", "identity")


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths (input first) and one activation per weight layer."""

    widths: tuple
    activations: tuple
    slope: float = 0.2
    init: str = "glorot_uniform"

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        object.__setattr__(self, "activations", tuple(self.activations))
        if len(self.widths) < 2:
            raise ConfigurationError("an MLP needs at least an input and an output width")
        if len(self.activations) != len(self.widths) - 1:
            raise ConfigurationError(
                f"{len(self.widths) - 1} weight layers but {len(self.activations)} activations")
        bad = [a for a in self.activations if a not in ACTIVATIONS]
        if bad:
            raise ConfigurationError(f"unknown activation(s) {bad}")
        if any(w < 1 for w in self.widths):
            raise ConfigurationError("layer widths must be positive")
        if self.init not in ("glorot_uniform", "zeros"):
            raise ConfigurationError(f"unknown init scheme {self.init!r}")

    @property
    def n_layers(self) -> int:
        return len(self.widths) - 1

    @classmethod
    def stack(cls, widths: Sequence[int], hidden: str, output: str, slope: float = 0.2) -> "MlpSpec":
        n = len(widths) - 1
        return cls(tuple(widths), (hidden,) * (n - 1) + (output,), slope)


def init_mlp(spec: MlpSpec, rng: np.random.Generator) -> list:
    """Weights as [W0, b0, W1, b1, ...]; W is (fan_in, fan_out), b is (1, fan_out)."""
    params = []
    for i, (fan_in, fan_out) in enumerate(zip(spec.widths[:-1], spec.widths[1:])):
        if spec.init == "zeros":
            w = np.zeros((fan_in, fan_out))
        else:
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        params.append(Tensor(w, requires_grad=True, name=f"W{i}"))
        params.append(Tensor(np.zeros((1, fan_out)), requires_grad=True, name=f"b{i}"))
    return params


def check_params(spec: MlpSpec, params: Sequence[Tensor]) -> None:
    if len(params) != 2 * spec.n_layers:
        raise ConfigurationError(f"expected {2 * spec.n_layers} parameter tensors, got {len(params)}")
    for i, (fan_in, fan_out) in enumerate(zip(spec.widths[:-1], spec.widths[1:])):
        w, b = params[2 * i], params[2 * i + 1]
        if w.shape != (fan_in, fan_out) or b.shape != (1, fan_out):
            raise ConfigurationError(
                f"layer {i}: got W{w.shape}, b{b.shape}; expected ({fan_in}, {fan_out})")


def activate(x: Tensor, kind: str, slope: float) -> Tensor:
    if kind == "leaky_relu":
        return ad.leaky_relu(x, slope)
    if kind == "relu":
        return ad.relu(x)
    if kind == "softmax":
        return ad.softmax(x)
    return x


def forward_mlp(spec: MlpSpec, params: Sequence[Tensor], x) -> Tensor:
    x = ad.as_tensor(x)
    if x.ndim != 2 or x.shape[1] != spec.widths[0]:
        raise ConfigurationError(f"input shape {x.shape} does not match width {spec.widths[0]}")
    check_params(spec, params)
    h = x
    for i, kind in enumerate(spec.activations):
        h = ad.add(ad.matmul(h, params[2 * i]), params[2 * i + 1])
        h = activate(h, kind, spec.slope)
    if not np.all(np.isfinite(h.data)):
        raise NumericError("non-finite MLP output")
    return h


@dataclass
class Mlp:
    """An MlpSpec bundled with its parameters."""

    spec: MlpSpec
    params: list = field(default_factory=list)

    @classmethod
    def create(cls, spec: MlpSpec, rng: np.random.Generator) -> "Mlp":
        return cls(spec, init_mlp(spec, rng))

    def __call__(self, x) -> Tensor:
        return forward_mlp(self.spec, self.params, x)

    def state(self) -> list:
        return [p.data.copy() for p in self.params]

    def load(self, arrays) -> None:
        for p, a in zip(self.params, arrays):
            if p.shape != np.shape(a):
                raise ConfigurationError(f"shape mismatch loading {p.name}: {np.shape(a)} vs {p.shape}")
            p.data = np.array(a, dtype=np.float64)
