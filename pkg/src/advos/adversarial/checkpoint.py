"""Model checkpoints as ``.npz`` archives.

Layout (format version 1):

* ``__meta__``: JSON string with ``format_version``, ``config`` (TrainConfig
  dict), ``config_hash``, ``n_classes``, ``d`` and ``regime``.
* ``Q/<i>``, ``D/<i>``, ``G/trunk/<i>``, ``G/head<k>/<i>``: parameter arrays in
  [W0, b0, W1, b1, ...] order.
* ``G/block<k>``: the class-k training rows the generator mixes.

Readers accept any archive whose major format version matches.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError
from .players import ThreePlayerState, build_players
from .training import TrainConfig

FORMAT_VERSION = 1


def save_checkpoint(path, state: ThreePlayerState, config: TrainConfig, regime: str | None = None) -> Path:
    path = Path(path)
    arrays = {f"Q/{i}": p.data for i, p in enumerate(state.classifier.params)}
    d = state.classifier.spec.widths[0]
    n_classes = state.classifier.spec.widths[-1]
    if state.critic is not None:
        arrays.update({f"D/{i}": p.data for i, p in enumerate(state.critic.params)})
    if state.generator is not None:
        g = state.generator
        arrays.update({f"G/trunk/{i}": p.data for i, p in enumerate(g.trunk.params)})
        for k, head in enumerate(g.heads):
            arrays.update({f"G/head{k}/{i}": p.data for i, p in enumerate(head.params)})
            arrays[f"G/block{k}"] = g.blocks[k]
    meta = {
        "format_version": FORMAT_VERSION,
        "config": config.to_dict(),
        "config_hash": config.digest(),
        "n_classes": int(n_classes),
        "d": int(d),
        "regime": regime or config.regime,
    }
    arrays["__meta__"] = np.array(json.dumps(meta, sort_keys=True))
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    return path


def load_checkpoint(path):
    """Returns (ThreePlayerState, TrainConfig, meta)."""
    with np.load(Path(path), allow_pickle=False) as z:
        meta = json.loads(str(z["__meta__"]))
        if meta.get("format_version") != FORMAT_VERSION:
            raise ConfigurationError(f"unsupported checkpoint format {meta.get('format_version')}")
        config = TrainConfig.from_dict(meta["config"])
        arrays = {k: z[k] for k in z.files}
    n_classes, d = meta["n_classes"], meta["d"]
    adversarial = "G/trunk/0" in arrays
    blocks = [arrays[f"G/block{k}"] for k in range(n_classes)] if adversarial else None
    state = build_players(blocks, n_classes, d, latent_dim=config.latent_dim,
                          g_widths=config.g_widths, d_widths=config.d_widths,
                          q_widths=config.q_widths, slope=config.slope,
                          operator=config.operator, with_adversaries=adversarial)
    state.classifier.load([arrays[f"Q/{i}"] for i in range(len(state.classifier.params))])
    if adversarial:
        state.critic.load([arrays[f"D/{i}"] for i in range(len(state.critic.params))])
        g = state.generator
        g.trunk.load([arrays[f"G/trunk/{i}"] for i in range(len(g.trunk.params))])
        for k, head in enumerate(g.heads):
            head.load([arrays[f"G/head{k}/{i}"] for i in range(len(head.params))])
    return state, config, meta
