"""Three-player training loop."""
from __future__ import annotations

import hashlib
import json
import logging
import math
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Optional

import numpy as np

from ..data import Dataset
from ..errors import ConfigurationError, NumericError
from ..metrics import EvalReport
from ..nn.autodiff import Tape
from ..nn.optim import Adam
from .plan import SamplingPlan, make_sampling_plan
from .players import (OPERATORS, REGIMES, ThreePlayerState, build_players, classifier_terms,
                      loss_classifier, loss_critic, loss_generator, predict)

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    regime: str = "DO"
    operator: str = "wgan-gp"
    gp_weight: float = 10.0
    latent_dim: int = 32
    g_widths: tuple = (128, 64)
    d_widths: tuple = (128, 64)
    q_widths: tuple = (256, 128, 64)
    slope: float = 0.2
    epochs: int = 100
    batch_size: int = 64
    critic_steps: int = 2
    lr_g: float = 2e-4
    lr_d: float = 2e-4
    betas_gd: tuple = (0.5, 0.9)
    lr_q: float = 1e-3
    betas_q: tuple = (0.9, 0.999)
    fraction: float = 1.0
    seed: int = 0

    def __post_init__(self):
        for name in ("g_widths", "d_widths", "q_widths", "betas_gd", "betas_q"):
            setattr(self, name, tuple(getattr(self, name)))
        if self.regime not in REGIMES:
            raise ConfigurationError(f"regime must be one of {REGIMES}, got {self.regime!r}")
        if self.operator not in OPERATORS:
            raise ConfigurationError(f"operator must be one of {OPERATORS}, got {self.operator!r}")
        if self.epochs < 1 or self.batch_size < 1 or self.critic_steps < 1:
            raise ConfigurationError("epochs, batch_size and critic_steps must be >= 1")
        if self.gp_weight < 0:
            raise ConfigurationError("gp_weight must be >= 0")
        if not 0.0 <= self.fraction <= 1.0:
            raise ConfigurationError(f"fraction must lie in (0, 1], got {self.fraction}")

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigurationError(f"unknown TrainConfig keys {sorted(unknown)}")
        return cls(**d)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class TrainResult:
    state: ThreePlayerState
    plan: SamplingPlan
    history: list = field(default_factory=list)
    regime: str = "DO"

    @property
    def final(self) -> EvalReport:
        return self.history[-1]

    @property
    def best(self) -> EvalReport:
        return max(self.history, key=lambda r: (r.acsa, -r.epoch))


def _finite(loss, epoch, player):
    v = float(loss.data)
    if not math.isfinite(v):
        raise NumericError(f"non-finite {player} loss {v} at epoch {epoch}")
    return v


@contextmanager
def _guard(epoch, player):
    """Re-raise numeric failures from deep inside a step with epoch and player."""
    try:
        yield
    except NumericError as e:
        if f"at epoch {epoch}" in str(e):
            raise
        raise NumericError(f"{player} update at epoch {epoch}: {e}") from e


class Trainer:
    """Owns the players, optimizers and RNG streams of one training run."""

    def __init__(self, train: Dataset, config: TrainConfig):
        self.train_set = train
        self.config = config
        sizes = train.class_sizes
        if np.any(sizes == 0):
            raise ConfigurationError(f"training split lacks class(es) {np.flatnonzero(sizes == 0).tolist()}")
        self.plan = make_sampling_plan(sizes, config.fraction)
        regime = config.regime
        if regime != "BASELINE_Q" and not self.plan.active:
            log.warning("%s plan generates nothing (sizes %s, fraction %s); training plain Q",
                        regime, sizes.tolist(), config.fraction)
            regime = "BASELINE_Q"
        self.regime = regime
        adversarial = regime != "BASELINE_Q"
        blocks = [train.class_block(k) for k in range(train.n_classes)]
        model_seed, batch_seed, latent_seed, gp_seed = np.random.SeedSequence(config.seed).spawn(4)
        self.state = build_players(
            blocks, train.n_classes, train.d, latent_dim=config.latent_dim,
            g_widths=config.g_widths, d_widths=config.d_widths, q_widths=config.q_widths,
            slope=config.slope, operator=config.operator, seed=model_seed,
            with_adversaries=adversarial)
        self.state.opt_q = Adam(config.lr_q, config.betas_q)
        if adversarial:
            self.state.opt_g = Adam(config.lr_g, config.betas_gd)
            self.state.opt_d = Adam(config.lr_d, config.betas_gd)
        self.batch_rng = np.random.default_rng(batch_seed)
        self.latent_rng = np.random.default_rng(latent_seed)
        self.gp_rng = np.random.default_rng(gp_seed)
        self.generated_per_epoch = list(self.plan.counts) if adversarial else [0] * train.n_classes

    def _latent(self, n):
        return self.latent_rng.standard_normal((n, self.config.latent_dim))

    def _fake(self, classes):
        # outside any tape: detached samples
        x, labels = self.state.generator.sample(classes, self._latent(len(classes)))
        return x.data, labels

    def critic_step(self, xr, yr, epoch):
        s = self.state
        with _guard(epoch, "critic"):
            xf, _ = self._fake(yr)
            # pair each real row with a fake of the same class
            xr_sorted = xr[np.argsort(yr, kind="stable")]
            with Tape() as tape:
                loss = loss_critic(s, xr_sorted, xf, self.config.gp_weight, rng=self.gp_rng)
                _finite(loss, epoch, "critic")
                grads = tape.gradient(loss, s.critic.params)
            s.opt_d.step(s.critic.params, grads)

    def generator_step(self, n, epoch):
        s = self.state
        with _guard(epoch, "generator"):
            classes = self.latent_rng.integers(0, self.train_set.n_classes, size=n)
            with Tape() as tape:
                loss = loss_generator(s, self._latent(n), classes, self.regime)
                _finite(loss, epoch, "generator")
                grads = tape.gradient(loss, s.generator.params)
            s.opt_g.step(s.generator.params, grads)

    def classifier_step(self, xr, yr, gen_classes, epoch):
        s = self.state
        with _guard(epoch, "classifier"):
            xg = yg = None
            if gen_classes is not None and len(gen_classes):
                xg, yg = self._fake(gen_classes)
            with Tape() as tape:
                loss = loss_classifier(s, xr, yr, xg, yg, self.regime)
                _finite(loss, epoch, "classifier")
                grads = tape.gradient(loss, s.classifier.params)
            s.opt_q.step(s.classifier.params, grads)

    def run_epoch(self, epoch: int) -> None:
        X, y = self.train_set.X, self.train_set.y
        n = self.train_set.n
        n_batches = max(1, math.ceil(n / self.config.batch_size))
        batches = np.array_split(self.batch_rng.permutation(n), n_batches)
        adversarial = self.regime != "BASELINE_Q"
        chunks = [None] * n_batches
        if adversarial:
            labels = np.repeat(np.arange(len(self.plan.counts)), self.plan.counts)
            chunks = np.array_split(self.batch_rng.permutation(labels), n_batches)
        for idx, gen in zip(batches, chunks):
            xr, yr = X[idx], y[idx]
            if adversarial:
                for _ in range(self.config.critic_steps):
                    self.critic_step(xr, yr, epoch)
                self.generator_step(len(idx), epoch)
            self.classifier_step(xr, yr, gen, epoch)
        self.state.epoch = epoch

    def evaluate(self, val: Dataset, epoch: int) -> EvalReport:
        pred, _ = predict(self.state.classifier, val.X)
        return EvalReport.from_predictions(val.y, pred, val.n_classes, epoch=epoch)


def train(train_set: Dataset, val_set: Dataset, config: TrainConfig,
          on_epoch: Optional[Callable[[EvalReport], None]] = None) -> TrainResult:
    """Train for ``config.epochs`` epochs, scoring Q on ``val_set`` after each."""
    if val_set.n_classes != train_set.n_classes or val_set.d != train_set.d:
        raise ConfigurationError("train and validation sets disagree on classes or features")
    trainer = Trainer(train_set, config)
    result = TrainResult(trainer.state, trainer.plan, regime=trainer.regime)
    for epoch in range(1, config.epochs + 1):
        trainer.run_epoch(epoch)
        report = trainer.evaluate(val_set, epoch)
        result.history.append(report)
        if on_epoch is not None:
            on_epoch(report)
        log.debug("epoch %d ACSA %.2f GM %.2f", epoch, report.acsa, report.gm)
    return result


def baseline_loss(state: ThreePlayerState, x_real, y_real):
    """Plain cross-entropy of Q on a real batch (reference for degeneracy checks)."""
    return classifier_terms(state.q_probs(x_real), y_real, None, None, "BASELINE_Q")
