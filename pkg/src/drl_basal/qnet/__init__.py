from .adam import AdamState, adam_step
from .checkpoint import load_weights, save_weights, weights_from_arrays, weights_to_arrays
from .network import (
    QNetConfig,
    QNetWeights,
    backprop,
    backward,
    check_observations,
    copy_weights,
    forward,
    forward_cached,
    freeze_mask,
    init_weights,
    loss_and_grad,
)

__all__ = [
    "AdamState", "QNetConfig", "QNetWeights", "adam_step", "backprop", "backward",
    "check_observations", "copy_weights", "forward", "forward_cached", "freeze_mask",
    "init_weights", "load_weights", "loss_and_grad", "save_weights", "weights_from_arrays",
    "weights_to_arrays",
]
