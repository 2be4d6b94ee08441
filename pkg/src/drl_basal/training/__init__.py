from .checkpoint import PolicyCheckpoint
from .config import TrainConfig, derive_seed
from .rollout import LGS, evaluate_subject, evaluation_scenario, rollout
from .trainer import (
    GENERALIZED,
    PERSONALIZED,
    PROGRESS_COLUMNS,
    Trainer,
    default_qnet_config,
    start_generalized,
    start_personalized,
    train_generalized,
    train_personalized,
    training_scenario,
)

__all__ = [
    "GENERALIZED", "LGS", "PERSONALIZED", "PROGRESS_COLUMNS", "PolicyCheckpoint", "TrainConfig",
    "Trainer", "default_qnet_config", "derive_seed", "evaluate_subject", "evaluation_scenario",
    "rollout", "start_generalized", "start_personalized", "train_generalized",
    "train_personalized", "training_scenario",
]
