"""Cross-entropy and complement cross-entropy on probability rows."""
from __future__ import annotations

import numpy as np

from ..errors import ContractError
from . import autodiff as ad
from .autodiff import Tensor

PROB_FLOOR = 1e-7


def _check(probs: Tensor, targets: np.ndarray) -> None:
    if probs.ndim != 2 or probs.shape[0] != len(targets):
        raise ContractError(f"probs {probs.shape} vs {len(targets)} targets")
    if len(targets) and (targets.min() < 0 or targets.max() >= probs.shape[1]):
        raise ContractError("target class out of range")


def _reduce(per_row: Tensor, reduction: str) -> Tensor:
    if reduction == "mean":
        return ad.mean(per_row)
    if reduction == "sum":
        return ad.sum_(per_row)
    return per_row


def ce_loss(probs, targets, reduction: str = "mean") -> Tensor:
    """-log q[target] per row, floored at PROB_FLOOR."""
    probs = ad.as_tensor(np.atleast_2d(probs) if not isinstance(probs, Tensor) else probs)
    targets = np.atleast_1d(np.asarray(targets, dtype=np.int64))
    _check(probs, targets)
    return _reduce(ad.neg(ad.log(ad.pick(probs, targets), PROB_FLOOR)), reduction)


def cce_loss(probs, targets, reduction: str = "mean") -> Tensor:
    """-log(1 - q[target]) per row: pushes mass away from ``target``."""
    probs = ad.as_tensor(np.atleast_2d(probs) if not isinstance(probs, Tensor) else probs)
    targets = np.atleast_1d(np.asarray(targets, dtype=np.int64))
    _check(probs, targets)
    rest = ad.sub(1.0, ad.pick(probs, targets))
    return _reduce(ad.neg(ad.log(rest, PROB_FLOOR)), reduction)
