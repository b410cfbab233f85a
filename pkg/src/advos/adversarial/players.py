"""The three players and their losses under the AO and DO regimes.

Operator ``wgan-gp`` treats the critic output as an unbounded score and
s(x) = x. Operator ``vanilla`` squashes the critic output through a sigmoid
and s(x) = log x.

Class terms, per regime:

    ======  =============================  ==================================
    regime  generator, on G(z|i)           classifier, on detached G(z|j)
    ======  =============================  ==================================
    AO      -log(1 - Q_i)  (fool Q)        -log Q_j  (learn generated class)
    DO      -log Q_i       (favor Q)       -log(1 - Q_j)  (reject generated)
    ======  =============================  ==================================

Both regimes add plain cross-entropy on the real batch to the classifier loss.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ConfigurationError
from ..nn import autodiff as ad
from ..nn.autodiff import Tensor
from ..nn.losses import PROB_FLOOR, cce_loss, ce_loss
from ..nn.mlp import Mlp, MlpSpec
from ..nn.optim import Adam
from ..nn.penalty import gradient_penalty
from .generator import GeneratorMixture

REGIMES = ("AO", "DO", "BASELINE_Q")
OPERATORS = ("wgan-gp", "vanilla")


@dataclass
class ThreePlayerState:
    generator: Optional[GeneratorMixture]
    critic: Optional[Mlp]
    classifier: Mlp
    opt_g: Optional[Adam] = None
    opt_d: Optional[Adam] = None
    opt_q: Optional[Adam] = None
    operator: str = "wgan-gp"
    epoch: int = 0

    def d_out(self, x) -> Tensor:
        """D(x) as used inside the losses: raw score or sigmoid probability."""
        s = self.critic(x)
        return ad.sigmoid(s) if self.operator == "vanilla" else s

    def q_probs(self, x) -> Tensor:
        return self.classifier(x)


def build_players(blocks, n_classes: int, d: int, *, latent_dim=32, g_widths=(128, 64),
                  d_widths=(128, 64), q_widths=(256, 128, 64), slope=0.2, operator="wgan-gp",
                  seed=0, with_adversaries=True) -> ThreePlayerState:
    if operator not in OPERATORS:
        raise ConfigurationError(f"unknown operator {operator!r}")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    q_seed, d_seed, g_seed = ss.spawn(3)
    q_spec = MlpSpec.stack([d, *q_widths, n_classes], "relu", "softmax", slope)
    classifier = Mlp.create(q_spec, np.random.default_rng(q_seed))
    if not with_adversaries:
        return ThreePlayerState(None, None, classifier, operator=operator)
    d_spec = MlpSpec.stack([d, *d_widths, 1], "leaky_relu", "identity", slope)
    critic = Mlp.create(d_spec, np.random.default_rng(d_seed))
    generator = GeneratorMixture(blocks, latent_dim, g_widths, slope, np.random.default_rng(g_seed))
    return ThreePlayerState(generator, critic, classifier, operator=operator)


def _s_of_one_minus(d_fake: Tensor, operator: str) -> Tensor:
    if operator == "vanilla":
        return ad.log(ad.sub(1.0, d_fake), PROB_FLOOR)
    return ad.sub(1.0, d_fake)


def generator_terms(d_fake: Tensor, q_fake: Tensor, classes, regime: str, operator: str) -> Tensor:
    adv = ad.mean(_s_of_one_minus(d_fake, operator))
    if regime == "AO":
        cls = cce_loss(q_fake, classes)
    elif regime == "DO":
        cls = ce_loss(q_fake, classes)
    else:
        raise ConfigurationError(f"generator loss undefined for regime {regime!r}")
    return ad.add(adv, cls)


def classifier_terms(q_real: Tensor, y_real, q_gen: Optional[Tensor], y_gen, regime: str) -> Tensor:
    loss = ce_loss(q_real, y_real)
    if q_gen is None or q_gen.shape[0] == 0 or regime == "BASELINE_Q":
        return loss
    if regime == "AO":
        return ad.add(loss, ce_loss(q_gen, y_gen))
    if regime == "DO":
        return ad.add(loss, cce_loss(q_gen, y_gen))
    raise ConfigurationError(f"unknown regime {regime!r}")


def loss_generator(state: ThreePlayerState, z, classes, regime: str) -> Tensor:
    x_fake, labels = state.generator.sample(classes, z)
    return generator_terms(state.d_out(x_fake), state.q_probs(x_fake), labels, regime, state.operator)


def loss_g_ao(state, z, classes) -> Tensor:
    return loss_generator(state, z, classes, "AO")


def loss_g_do(state, z, classes) -> Tensor:
    return loss_generator(state, z, classes, "DO")


def loss_classifier(state: ThreePlayerState, x_real, y_real, x_gen, y_gen, regime: str) -> Tensor:
    q_gen = None
    if x_gen is not None and len(y_gen):
        q_gen = state.q_probs(Tensor(ad.values(x_gen)))
    return classifier_terms(state.q_probs(x_real), y_real, q_gen, y_gen, regime)


def loss_q_ao(state, x_real, y_real, x_gen, y_gen) -> Tensor:
    return loss_classifier(state, x_real, y_real, x_gen, y_gen, "AO")


def loss_q_do(state, x_real, y_real, x_gen, y_gen) -> Tensor:
    return loss_classifier(state, x_real, y_real, x_gen, y_gen, "DO")


def loss_critic(state: ThreePlayerState, x_real, x_fake, gp_weight: float,
                rng: Optional[np.random.Generator] = None, eps=None) -> Tensor:
    """Critic loss to minimize.

    wgan-gp: mean D(fake) - mean D(real) + gradient penalty.
    vanilla: -mean log D(real) - mean log(1 - D(fake)).
    """
    xr = ad.values(x_real)
    xf = ad.values(x_fake)
    if len(xr) == 0 or len(xf) == 0:
        raise ConfigurationError("critic needs non-empty real and fake batches")
    if state.operator == "vanilla":
        real = ad.mean(ad.log(state.d_out(xr), PROB_FLOOR))
        fake = ad.mean(ad.log(ad.sub(1.0, state.d_out(xf)), PROB_FLOOR))
        return ad.neg(ad.add(real, fake))
    wass = ad.sub(ad.mean(state.critic(xf)), ad.mean(state.critic(xr)))
    if gp_weight == 0:
        return wass
    gp = gradient_penalty(state.critic, xr, xf, gp_weight, rng=rng, eps=eps)
    return ad.add(wass, gp)


def predict(classifier: Mlp, X):
    """(labels, probabilities); ties resolve to the lower class id."""
    probs = classifier(ad.values(X)).data
    return np.argmax(probs, axis=1), probs
