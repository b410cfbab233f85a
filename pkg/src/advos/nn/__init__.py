from .autodiff import Tape, Tensor, current_tape
from .losses import PROB_FLOOR, cce_loss, ce_loss
from .mlp import Mlp, MlpSpec, forward_mlp, init_mlp
from .optim import Adam
from .penalty import gradient_penalty, input_gradient

__all__ = [
    "Tape", "Tensor", "current_tape", "PROB_FLOOR", "ce_loss", "cce_loss",
    "Mlp", "MlpSpec", "forward_mlp", "init_mlp", "Adam", "gradient_penalty",
    "input_gradient",
]
