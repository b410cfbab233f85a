from .checkpoint import load_checkpoint, save_checkpoint
from .generator import GeneratorMixture
from .plan import SamplingPlan, make_sampling_plan
from .players import (ThreePlayerState, build_players, loss_classifier, loss_critic,
                      loss_g_ao, loss_g_do, loss_generator, loss_q_ao, loss_q_do, predict)
from .training import TrainConfig, Trainer, TrainResult, baseline_loss, train

__all__ = [
    "GeneratorMixture", "SamplingPlan", "make_sampling_plan", "ThreePlayerState",
    "build_players", "loss_classifier", "loss_critic", "loss_g_ao", "loss_g_do",
    "loss_generator", "loss_q_ao", "loss_q_do", "predict", "TrainConfig", "Trainer",
    "TrainResult", "baseline_loss", "train", "save_checkpoint", "load_checkpoint",
]
