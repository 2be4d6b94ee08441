"""Estimator-style wrappers around training and the LGS baseline.

``fit`` trains the generalized policy on a cohort-average subject,
``personalize`` fine-tunes it on one subject, and ``predict`` maps
observation windows of shape ``(n, 12, 4)`` (or a single ``(12, 4)``
window) to action indices.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .qnet import forward
from .reward import DEFAULT_SCHEME
from .sim import PatientParams, average_subject
from .sim.observation import WINDOW
from .therapy import LGS_THRESHOLD, ActionSpace, SafetyConstraints
from .training import (
    PolicyCheckpoint,
    TrainConfig,
    default_qnet_config,
    train_generalized,
    train_personalized,
)


def check_windows(X, window: int = WINDOW, channels: int = 4) -> np.ndarray:
    """Validate observation windows and return them as ``(n, window, channels)``."""
    X = check_array(X, ensure_2d=False, allow_nd=True, dtype=np.float64)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3 or X.shape[1:] != (window, channels):
        raise ValueError(f"expected windows of shape (n, {window}, {channels}), got {X.shape}")
    return X


def _subject(X) -> PatientParams:
    if X is None:
        return average_subject("adult")
    if isinstance(X, str):
        return average_subject(X)
    if isinstance(X, PatientParams):
        return X
    raise TypeError("fit expects a cohort name or PatientParams")


class DQNController(BaseEstimator):
    """Double-DQN basal (and optionally glucagon) controller."""

    def __init__(self, mode="SH", reward_scheme=DEFAULT_SCHEME, generalized_days=200,
                 personalized_days=30, freeze_lower_layers=0, cell_type="vanilla_rnn",
                 constraints=True, seed=0):
        self.mode = mode
        self.reward_scheme = reward_scheme
        self.generalized_days = generalized_days
        self.personalized_days = personalized_days
        self.freeze_lower_layers = freeze_lower_layers
        self.cell_type = cell_type
        self.constraints = constraints
        self.seed = seed

    def _train_config(self) -> TrainConfig:
        return TrainConfig(generalized_days=self.generalized_days,
                           personalized_days=self.personalized_days,
                           freeze_lower_layers=self.freeze_lower_layers, seed=self.seed)

    def fit(self, X=None, y=None):
        """Generalized training on ``X`` (cohort name or average-subject params)."""
        cfg = self._train_config()
        qcfg = default_qnet_config(self.mode, cfg, cell_type=self.cell_type)
        self.checkpoint_ = train_generalized(_subject(X), self.mode, cfg, qcfg, self.reward_scheme)
        self.generalized_ = self.checkpoint_
        self.n_actions_ = ActionSpace(self.mode).n_actions
        return self

    def personalize(self, subject: PatientParams):
        """Fine-tune the generalized policy on ``subject``."""
        check_is_fitted(self, "generalized_")
        cons = SafetyConstraints() if self.constraints else None
        self.checkpoint_ = train_personalized(self.generalized_, subject, self._train_config(), cons)
        return self

    @classmethod
    def from_checkpoint(cls, checkpoint: PolicyCheckpoint) -> "DQNController":
        cfg = checkpoint.config
        est = cls(mode=checkpoint.mode, reward_scheme=checkpoint.reward_scheme,
                  generalized_days=cfg.generalized_days, personalized_days=cfg.personalized_days,
                  freeze_lower_layers=cfg.freeze_lower_layers,
                  cell_type=checkpoint.theta1.config.cell_type, seed=cfg.seed)
        est.checkpoint_ = checkpoint
        est.generalized_ = checkpoint
        est.n_actions_ = checkpoint.theta1.config.output_dim
        return est

    def decision_function(self, X) -> np.ndarray:
        """Q-values, shape ``(n, n_actions)``."""
        check_is_fitted(self, "checkpoint_")
        cfg = self.checkpoint_.theta1.config
        return forward(self.checkpoint_.theta1, check_windows(X, cfg.window, cfg.input_channels))

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.decision_function(X), axis=1)


class LGSController(BaseEstimator):
    """Low-glucose suspension: action 0 (suspend) below ``threshold``, else action 2 (1x basal)."""

    def __init__(self, threshold=LGS_THRESHOLD):
        self.threshold = threshold

    def fit(self, X=None, y=None):
        self.fitted_ = True
        return self

    def predict(self, X) -> np.ndarray:
        X = check_windows(X)
        return np.where(X[:, -1, 0] < self.threshold, 0, 2)
