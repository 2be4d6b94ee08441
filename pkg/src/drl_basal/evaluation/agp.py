"""Ambulatory glucose profile: per-slot statistics across days."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import TraceTooShort

SLOTS = 288


@dataclass
class AGP:
    mean: np.ndarray
    sd: np.ndarray  # sample SD across days (ddof=1)
    p2_5: np.ndarray
    p97_5: np.ndarray
    n_days: int

    def rows(self):
        for k in range(SLOTS):
            yield (5 * (k + 1), self.mean[k], self.sd[k], self.p2_5[k], self.p97_5[k])


def agp(trace, column: str = "cgm", min_days: int = 7) -> AGP:
    days = trace.daily(column)
    if days.shape[0] < max(min_days, 2):
        raise TraceTooShort(f"AGP needs at least {max(min_days, 2)} full days, got {days.shape[0]}")
    lo, hi = np.percentile(days, [2.5, 97.5], axis=0)
    return AGP(days.mean(axis=0), days.std(axis=0, ddof=1), lo, hi, days.shape[0])
