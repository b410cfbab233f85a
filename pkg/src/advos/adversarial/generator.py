"""Class-conditional mixture of convex-combination generators.

For class k, a shared trunk maps (z, onehot(k)) to features, and head k maps
those to a softmax over the class's training rows. The generated sample is
the weighted average of those rows, so it always lies in the convex hull of
the class. A head has one output per training row of its class.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import ConfigurationError
from ..nn import autodiff as ad
from ..nn.autodiff import Tensor
from ..nn.mlp import Mlp, MlpSpec


class GeneratorMixture:
    def __init__(self, blocks: Sequence[np.ndarray], latent_dim: int = 32,
                 widths: Sequence[int] = (128, 64), slope: float = 0.2,
                 rng: np.random.Generator | None = None):
        rng = np.random.default_rng(0) if rng is None else rng
        self.blocks = [np.ascontiguousarray(b, dtype=np.float64) for b in blocks]
        empty = [k for k, b in enumerate(self.blocks) if b.ndim != 2 or b.shape[0] == 0]
        if empty:
            raise ConfigurationError(f"class(es) {empty} have no training rows")
        self.n_classes = len(self.blocks)
        self.latent_dim = int(latent_dim)
        trunk_spec = MlpSpec.stack([self.latent_dim + self.n_classes, *widths], "leaky_relu",
                                   "leaky_relu", slope)
        self.trunk = Mlp.create(trunk_spec, rng)
        self.heads = [Mlp.create(MlpSpec((widths[-1], b.shape[0]), ("softmax",), slope), rng)
                      for b in self.blocks]

    @property
    def params(self) -> list:
        out = list(self.trunk.params)
        for h in self.heads:
            out.extend(h.params)
        return out

    @property
    def d(self) -> int:
        return self.blocks[0].shape[1]

    def weights(self, z, k: int) -> Tensor:
        """g(z|k): convex weights over the rows of class k, one row per z."""
        if not 0 <= k < self.n_classes:
            raise ConfigurationError(f"class {k} out of range")
        z = ad.values(z)
        onehot = np.zeros((z.shape[0], self.n_classes))
        onehot[:, k] = 1.0
        h = self.trunk(np.hstack([z, onehot]))
        return self.heads[k](h)

    def generate(self, z, k: int):
        """Returns (weights, samples) with samples = weights @ class-k rows."""
        w = self.weights(z, k)
        return w, ad.matmul(w, Tensor(self.blocks[k]))

    def sample(self, classes, z):
        """Samples for a batch of class labels with aligned latent rows.

        Output rows are grouped by class in ascending id; the returned labels
        follow that order.
        """
        classes = np.asarray(classes, dtype=np.int64)
        z = np.asarray(z, dtype=np.float64)
        parts, labels = [], []
        for k in np.unique(classes):
            sel = classes == k
            parts.append(self.generate(z[sel], int(k))[1])
            labels.append(np.full(int(sel.sum()), k))
        if not parts:
            return Tensor(np.empty((0, self.d))), np.empty(0, dtype=np.int64)
        return ad.concat_rows(parts), np.concatenate(labels)
