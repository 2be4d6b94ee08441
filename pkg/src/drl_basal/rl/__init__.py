from .loss import batch_targets, combined_loss, combined_loss_and_grad
from .policy import LinearSchedule, epsilon_greedy
from .replay import GENERALIZED_POOL, POLICY_GENERATED, ReplayMemory, SumTree, Transition
from .targets import (
    bootstrap,
    double_q_targets,
    double_q_values,
    td_target_1step,
    td_target_nstep,
)

__all__ = [
    "GENERALIZED_POOL", "LinearSchedule", "POLICY_GENERATED", "ReplayMemory", "SumTree",
    "Transition", "batch_targets", "bootstrap", "combined_loss", "combined_loss_and_grad",
    "double_q_targets", "double_q_values", "epsilon_greedy", "td_target_1step",
    "td_target_nstep",
]
