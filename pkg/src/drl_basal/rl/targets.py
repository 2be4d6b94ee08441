"""Double-DQN temporal-difference targets."""
from __future__ import annotations

import numpy as np

from ..exceptions import NonContiguousWindow
from ..qnet import QNetWeights, forward


def double_q_values(q1_next: np.ndarray, q2_next: np.ndarray) -> np.ndarray:
    """``Q2(o', argmax_a Q1(o', a))`` row-wise; ties go to the lowest index."""
    q1_next = np.atleast_2d(q1_next)
    q2_next = np.atleast_2d(q2_next)
    a = np.argmax(q1_next, axis=1)
    return q2_next[np.arange(a.size), a]


def double_q_targets(rewards, dones, q1_next, q2_next, gamma: float) -> np.ndarray:
    """Vectorised one-step targets from precomputed next-state Q rows.

    Shared by the network trainer and by table approximators so both use
    the same update rule.
    """
    r = np.asarray(rewards, dtype=np.float64)
    boot = double_q_values(q1_next, q2_next)
    return r + gamma * np.where(np.asarray(dones, dtype=bool), 0.0, boot)


def bootstrap(theta1: QNetWeights, theta2: QNetWeights, obs: np.ndarray) -> np.ndarray:
    """Action picked by ``theta1``, valued by ``theta2``, for a batch of windows."""
    return double_q_values(forward(theta1, obs), forward(theta2, obs))


def td_target_1step(r: float, o_next, done: bool, theta1: QNetWeights, theta2: QNetWeights,
                    gamma: float = 0.9) -> float:
    if done:
        return float(r)
    return float(r + gamma * bootstrap(theta1, theta2, np.asarray(o_next)[None])[0])


def td_target_nstep(window, theta1: QNetWeights, theta2: QNetWeights, gamma: float = 0.9) -> float:
    """n-step target over a list of consecutive transitions.

    Each transition's ``o_next`` must equal the following one's ``o``. A
    terminal transition must be the last one; it drops the bootstrap term.
    """
    if not window:
        raise NonContiguousWindow("empty window")
    for k, (a, b) in enumerate(zip(window, window[1:])):
        if a.done:
            raise NonContiguousWindow(f"terminal transition at position {k} is not last")
        if not np.array_equal(a.o_next, b.o):
            raise NonContiguousWindow(f"transitions {k} and {k + 1} are not consecutive")
    ret = sum(gamma**k * t.r for k, t in enumerate(window))
    last = window[-1]
    if last.done:
        return float(ret)
    m = len(window)
    return float(ret + gamma**m * bootstrap(theta1, theta2, np.asarray(last.o_next)[None])[0])
