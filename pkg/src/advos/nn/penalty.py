"""Critic gradient penalty via double backpropagation."""
from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from ..errors import ConfigurationError, ContractError
from . import autodiff as ad
from .autodiff import Tensor

# keeps d||g||/dg finite when the critic is locally flat
NORM_EPS = 1e-12


def input_gradient(output: Tensor, x: Tensor) -> Tensor:
    """d(sum of per-row outputs)/dx, recorded differentiably on the active tape.

    Rows of a critic are independent, so the gradient of the summed output
    gives each row's own input gradient.
    """
    tape = ad.current_tape()
    if tape is None:
        raise ContractError("input_gradient needs an active Tape")
    if output.ndim != 2 or output.shape[1] != 1:
        raise ContractError(f"expected one scalar per row, got {output.shape}")
    (g,) = tape.gradient(ad.sum_(output), [x], create_graph=True)
    return g


def gradient_penalty(critic: Callable[[Tensor], Tensor], x_real, x_fake, weight: float,
                     rng: Optional[np.random.Generator] = None,
                     eps: Optional[np.ndarray] = None) -> Tensor:
    """weight * mean_rows (||grad_x critic(x_hat)|| - 1)^2 on random interpolates.

    ``eps`` (one value per row) fixes the interpolation; otherwise it is drawn
    uniformly from ``rng``.
    """
    if weight < 0:
        raise ConfigurationError(f"gradient penalty weight must be >= 0, got {weight}")
    xr = ad.values(x_real)
    xf = ad.values(x_fake)
    if xr.shape != xf.shape:
        raise ContractError(f"real {xr.shape} and fake {xf.shape} batches differ in shape")
    if weight == 0:
        return Tensor(0.0)
    if eps is None:
        if rng is None:
            raise ContractError("need rng or eps")
        eps = rng.uniform(0.0, 1.0, size=(xr.shape[0], 1))
    eps = np.asarray(eps, dtype=np.float64).reshape(-1, 1)
    x_hat = Tensor(eps * xr + (1.0 - eps) * xf, requires_grad=True)
    g = input_gradient(critic(x_hat), x_hat)
    norm = ad.sqrt(ad.add(ad.sum_(ad.square(g), axis=1, keepdims=True), NORM_EPS))
    return ad.mul(ad.mean(ad.square(ad.sub(norm, 1.0))), float(weight))
