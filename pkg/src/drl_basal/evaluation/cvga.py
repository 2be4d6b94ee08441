"""Control variability grid analysis.

Each day becomes one point: x is the day's minimum glucose clamped to
[50, 110] (plotted on a reversed axis), y is the day's maximum clamped to
[110, 400]. Zones::

                    min > 90    70 <= min <= 90   min < 70
    max <= 180      A           Lower B           Lower C
    180 < max <= 300 Upper B    B                 Lower D
    max > 300       Upper C     Upper D           E
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..exceptions import TraceTooShort

X_RANGE = (50.0, 110.0)
Y_RANGE = (110.0, 400.0)
ZONE_LETTERS = ("A", "B", "C", "D", "E")
ZONE_TABLE = (
    ("A", "Lower B", "Lower C"),
    ("Upper B", "B", "Lower D"),
    ("Upper C", "Upper D", "E"),
)


class CVGAPoint(NamedTuple):
    day: int
    x: float  # clamped daily minimum
    y: float  # clamped daily maximum
    label: str  # e.g. "Upper B"
    zone: str  # letter A-E


def zone_label(x: float, y: float) -> str:
    col = 0 if x > 90 else (1 if x >= 70 else 2)
    row = 0 if y <= 180 else (1 if y <= 300 else 2)
    return ZONE_TABLE[row][col]


def cvga_point(day: int, day_min: float, day_max: float) -> CVGAPoint:
    x = float(np.clip(day_min, *X_RANGE))
    y = float(np.clip(day_max, *Y_RANGE))
    label = zone_label(x, y)
    return CVGAPoint(day, x, y, label, label[-1])


def cvga_points(trace, column: str = "glucose") -> list:
    """One point per complete day of ``trace``."""
    days = trace.daily(column)
    if days.shape[0] == 0:
        raise TraceTooShort("CVGA needs at least one full day")
    return [cvga_point(i, d.min(), d.max()) for i, d in enumerate(days)]
