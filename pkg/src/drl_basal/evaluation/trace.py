"""Per-step simulation traces and their CSV form."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..exceptions import EmptyTrace
from ..sim.hovorka import STEP_MINUTES

TRACE_SCHEMA_VERSION = 1
COLUMNS = ("t_min", "cgm", "glucose", "basal_Uph", "bolus_U", "glucagon_mg", "carbs_g",
           "reward", "action")
_INT_COLUMNS = ("t_min", "action")


@dataclass
class Trace:
    """Closed-loop record; ``t_min`` is the end time of each 5-minute step."""

    subject_id: str
    controller: str
    data: dict = field(default_factory=dict)

    def __post_init__(self):
        missing = set(COLUMNS) - set(self.data)
        if missing:
            raise ValueError(f"trace is missing columns {sorted(missing)}")
        self.data = {c: np.asarray(self.data[c], dtype=np.int64 if c in _INT_COLUMNS else float)
                     for c in COLUMNS}
        n = {v.shape for v in self.data.values()}
        if len(n) != 1 or len(next(iter(n))) != 1:
            raise ValueError("trace columns must be 1-D and equally long")
        t = self.data["t_min"]
        if t.size > 1 and np.any(np.diff(t) != STEP_MINUTES):
            raise ValueError("trace samples must be spaced 5 minutes apart")
        for c in ("basal_Uph", "bolus_U", "glucagon_mg", "carbs_g"):
            if np.any(self.data[c] < 0):
                raise ValueError(f"negative entries in {c}")

    def __len__(self):
        return int(self.data["t_min"].size)

    def __getitem__(self, column) -> np.ndarray:
        return self.data[column]

    @property
    def glucose(self) -> np.ndarray:
        return self.data["glucose"]

    @classmethod
    def from_rows(cls, subject_id: str, controller: str, rows: list) -> "Trace":
        if not rows:
            raise EmptyTrace("no steps recorded")
        return cls(subject_id, controller, {c: [r[c] for r in rows] for c in COLUMNS})

    def daily(self, column: str = "glucose") -> np.ndarray:
        """Values reshaped to ``(days, 288)``, dropping a trailing partial day.

        Days are counted from the first sample, which is assumed to fall in
        the first slot after midnight.
        """
        v = self.data[column]
        days = v.size // 288
        return v[:days * 288].reshape(days, 288)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("subject_id", "controller") + COLUMNS)
            cols = [self.data[c].tolist() for c in COLUMNS]
            for row in zip(*cols):
                w.writerow((self.subject_id, self.controller) + tuple(repr(v) for v in row))

    @classmethod
    def from_csv(cls, path) -> "Trace":
        with open(Path(path), newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise EmptyTrace(f"{path} has no rows")
        subject, controller = rows[0]["subject_id"], rows[0]["controller"]
        data = {c: [(int if c in _INT_COLUMNS else float)(r[c]) for r in rows] for c in COLUMNS}
        return cls(subject, controller, data)
