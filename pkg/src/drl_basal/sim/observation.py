"""Sliding observation windows over per-step records.

Channels, in order: CGM glucose (mg/dL), announced meal carbohydrates (g),
insulin delivered in the step (bolus + basal, U), glucagon delivered (mg).
Windows hold physical units; the Q-network applies its own channel scaling.
"""
from __future__ import annotations

from collections import deque
from typing import NamedTuple

import numpy as np

from ..exceptions import InsufficientHistory

WINDOW = 12
N_CHANNELS = 4
CHANNELS = ("glucose", "meal", "insulin", "glucagon")


class StepRecord(NamedTuple):
    cgm: float
    carbs: float
    insulin: float
    glucagon: float


class ObservationHistory:
    """Ring buffer of the most recent step records."""

    def __init__(self, window: int = WINDOW):
        self.window = window
        self._records = deque(maxlen=window)

    def __len__(self):
        return len(self._records)

    def append(self, record: StepRecord):
        self._records.append(StepRecord(*map(float, record)))

    def pad(self, record: StepRecord):
        """Fill the whole buffer with copies of ``record``."""
        self._records.clear()
        for _ in range(self.window):
            self.append(record)

    def records(self) -> list:
        return list(self._records)

    @property
    def latest(self) -> StepRecord:
        return self._records[-1]


def make_observation(history, window: int = WINDOW) -> np.ndarray:
    """Return the latest ``window`` records as a ``(window, 4)`` float array."""
    records = history.records() if isinstance(history, ObservationHistory) else list(history)
    if len(records) < window:
        raise InsufficientHistory(f"need {window} records, have {len(records)}")
    return np.array(records[-window:], dtype=np.float64)
