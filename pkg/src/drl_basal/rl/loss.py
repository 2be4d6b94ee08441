"""Combined double-DQN loss: one-step term, optional n-step term, L2 penalty."""
from __future__ import annotations

import numpy as np

from ..qnet import QNetWeights, loss_and_grad
from .targets import bootstrap


def batch_targets(batch: dict, theta1: QNetWeights, theta2: QNetWeights, gamma: float):
    """One-step targets and, when the batch carries n-step fields, n-step targets.

    n-step fields: ``nstep_return``, ``nstep_obs`` and ``nstep_discount``
    (``gamma**m``, or 0 when the window ended on a terminal step).
    """
    boot = bootstrap(theta1, theta2, batch["next_obs"])
    y1 = batch["reward"] + gamma * np.where(batch["done"], 0.0, boot)
    yn = None
    if "nstep_return" in batch:
        boot_n = bootstrap(theta1, theta2, batch["nstep_obs"])
        yn = batch["nstep_return"] + batch["nstep_discount"] * boot_n
    return y1, yn


def combined_loss_and_grad(batch: dict, theta1: QNetWeights, theta2: QNetWeights,
                           lambda1: float = 0.1, lambda2: float = 1e-5, gamma: float = 0.9):
    """Returns ``(loss, td_errors, grads)``; td_errors are the one-step errors."""
    y1, yn = batch_targets(batch, theta1, theta2, gamma)
    w = batch.get("is_weights")
    loss, grads, q_sel = loss_and_grad(theta1, batch["obs"], batch["action"], y1, w, lambda2,
                                       yn if lambda1 else None, lambda1)
    return loss, y1 - q_sel, grads


def combined_loss(batch: dict, theta1: QNetWeights, theta2: QNetWeights,
                  lambda1: float = 0.1, lambda2: float = 1e-5, gamma: float = 0.9):
    loss, delta, _ = combined_loss_and_grad(batch, theta1, theta2, lambda1, lambda2, gamma)
    return loss, delta
