"""Piecewise glucose rewards and episode termination."""
from __future__ import annotations

from enum import IntEnum


class RewardScheme(IntEnum):
    S1 = 1
    S2 = 2
    S3 = 3
    S4 = 4


DEFAULT_SCHEME = RewardScheme.S4
TERMINAL_LOW = 30.0
TERMINAL_HIGH = 300.0

# (severe, hypo 30-70, hyper 180-300) per scheme; plateaus are shared
_SEVERE = {1: -10.0, 2: -1.0, 3: -1.0, 4: -1.0}


def _hypo(g: float, scheme: int) -> float:
    if scheme == 1:
        return -1.0
    if scheme == 2:
        return -0.5
    if scheme == 3:
        return -0.5 + (g - 70.0) / 80.0
    return -0.6 + (g - 70.0) / 100.0


def _hyper(g: float, scheme: int) -> float:
    if scheme == 1:
        return -1.0
    if scheme == 2:
        return -0.5
    if scheme == 3:
        return -0.5 - (g - 180.0) / 240.0
    return -0.4 - (g - 180.0) / 200.0


def compute_reward(g_next: float, scheme: int | RewardScheme = DEFAULT_SCHEME) -> float:
    """Reward for landing at glucose ``g_next`` (mg/dL).

    Bands: [90, 140] -> 1; [70, 90) and (140, 180] -> 0.1; (180, 300] and
    [30, 70) follow the scheme's hyper/hypo branch; anything else is severe.
    """
    scheme = int(scheme)
    if scheme not in _SEVERE:
        raise ValueError(f"unknown reward scheme {scheme}")
    if g_next <= 0:
        raise ValueError("glucose must be positive")
    if 90.0 <= g_next <= 140.0:
        return 1.0
    if 70.0 <= g_next < 90.0 or 140.0 < g_next <= 180.0:
        return 0.1
    if 180.0 < g_next <= 300.0:
        return _hyper(g_next, scheme)
    if 30.0 <= g_next < 70.0:
        return _hypo(g_next, scheme)
    return _SEVERE[scheme]


def is_terminal(g_next: float) -> bool:
    return g_next < TERMINAL_LOW or g_next > TERMINAL_HIGH
