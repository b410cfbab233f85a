from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError


@dataclass(frozen=True)
class SamplingPlan:
    """How many samples of each class the generator contributes per epoch.

    ``counts[k] = ceil(fraction * (largest - size_k))``. The classifier sees
    generated classes in proportion to ``counts``; the generator is trained on
    classes drawn uniformly.
    """

    fraction: float
    class_sizes: tuple
    counts: tuple
    generator_probs: tuple
    classifier_probs: tuple

    @property
    def active(self) -> bool:
        return sum(self.counts) > 0

    @property
    def total(self) -> int:
        return int(sum(self.counts))


def make_sampling_plan(class_sizes, fraction: float) -> SamplingPlan:
    """``fraction`` in (0, 1]; 0 is accepted and yields an inactive plan."""
    if not (0.0 <= fraction <= 1.0) or math.isnan(fraction):
        raise ConfigurationError(f"oversampling fraction must lie in (0, 1], got {fraction}")
    sizes = np.asarray(class_sizes, dtype=np.int64)
    if sizes.size == 0 or np.any(sizes < 0):
        raise ConfigurationError(f"bad class sizes {sizes.tolist()}")
    deficit = sizes.max() - sizes
    counts = np.array([math.ceil(round(fraction * int(d), 9)) for d in deficit], dtype=np.int64)
    total = counts.sum()
    clf = counts / total if total > 0 else np.zeros(len(sizes))
    gen = np.full(len(sizes), 1.0 / len(sizes))
    return SamplingPlan(float(fraction), tuple(int(s) for s in sizes), tuple(int(c) for c in counts),
                        tuple(float(p) for p in gen), tuple(float(p) for p in clf))
