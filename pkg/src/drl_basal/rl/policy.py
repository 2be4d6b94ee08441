"""Action selection and linear schedules."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def epsilon_greedy(q_values, epsilon: float, rng: np.random.Generator) -> int:
    """Uniform random action with probability ``epsilon``, else the lowest-index argmax."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    q = np.asarray(q_values)
    if epsilon > 0 and rng.random() < epsilon:
        return int(rng.integers(q.size))
    return int(np.argmax(q))


@dataclass(frozen=True)
class LinearSchedule:
    start: float
    end: float
    steps: int

    def __call__(self, t: int) -> float:
        if self.steps <= 0:
            return self.end
        frac = min(max(t / self.steps, 0.0), 1.0)
        return self.start + (self.end - self.start) * frac
