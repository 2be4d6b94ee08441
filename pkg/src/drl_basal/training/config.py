"""Training hyperparameters and seed derivation."""
from __future__ import annotations

import math
import zlib
from dataclasses import asdict, dataclass, fields

import numpy as np


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 0.9
    explore_steps: int = 2000  # random actions before the first gradient step
    sync_generalized: int = 1000
    sync_personalized: int = 100
    batch_size: int = 32
    lr: float = 1e-5
    window: int = 12
    buffer_size: int = 5000
    alpha: float = 0.3
    beta_start: float = 0.4
    beta_end: float = 1.0
    lambda1: float = 0.1
    lambda2: float = 1e-5
    nstep: int = 12
    eps_start: float = 0.5
    eps_end: float = 0.01
    eps_personalized: float = 0.01
    priority_eps: float = 1e-3
    generalized_days: int = 200
    personalized_days: int = 30
    test_days: int = 90
    freeze_lower_layers: int = 0
    log_every: int = 288
    seed: int = 0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValueError(f"{f.name} must be a finite number")
            if f.name in ("freeze_lower_layers", "seed", "explore_steps", "lambda1", "lambda2"):
                if v < 0:
                    raise ValueError(f"{f.name} must be non-negative")
            elif v <= 0:
                raise ValueError(f"{f.name} must be positive")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        for name in ("eps_start", "eps_end", "eps_personalized"):
            if getattr(self, name) > 1:
                raise ValueError(f"{name} must not exceed 1")
        if self.batch_size > self.buffer_size:
            raise ValueError("batch_size cannot exceed buffer_size")

    @property
    def generalized_steps(self) -> int:
        return self.generalized_days * 288

    @property
    def personalized_steps(self) -> int:
        return self.personalized_days * 288

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown training option(s): {sorted(unknown)}")
        return cls(**d)


def derive_seed(base: int, *keys) -> int:
    """Stable 63-bit seed from ``base`` and string/int keys."""
    words = [int(base)]
    for k in keys:
        words.append(zlib.crc32(k.encode()) if isinstance(k, str) else int(k))
    return int(np.random.SeedSequence(words).generate_state(1, np.uint64)[0] >> np.uint64(1))
