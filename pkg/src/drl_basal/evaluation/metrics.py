"""Glycemic outcome metrics and per-controller reports."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import EmptyTrace, TraceTooShort
from .cvga import ZONE_LETTERS, cvga_points
from .trace import Trace

REPORT_SCHEMA_VERSION = 1
TARGET_RANGE = (70.0, 180.0)
METRIC_NAMES = ("tir_pct", "hypo_pct", "hyper_pct", "mean_bg", "risk_index", "lbgi", "hbgi")
REPORT_COLUMNS = ("subject_id", "controller", "n_samples") + METRIC_NAMES + tuple(
    f"cvga_{z}" for z in ZONE_LETTERS)


def risk_transform(g) -> np.ndarray:
    """Kovatchev symmetrisation ``f(G) = 1.509 ((ln G)^1.084 - 5.381)``, G in mg/dL."""
    g = np.asarray(g, dtype=np.float64)
    if np.any(g <= 0):
        raise ValueError("glucose must be positive")
    return 1.509 * (np.log(g) ** 1.084 - 5.381)


def risk_indices(g):
    """``(lbgi, hbgi)``: means over all samples of ``10 f^2`` on the low / high side."""
    f = risk_transform(g)
    r = 10.0 * f * f
    return float(np.mean(np.where(f < 0, r, 0.0))), float(np.mean(np.where(f > 0, r, 0.0)))


@dataclass
class GlycemicReport:
    subject_id: str
    controller: str
    n_samples: int
    tir_pct: float
    hypo_pct: float
    hyper_pct: float
    mean_bg: float
    risk_index: float
    lbgi: float
    hbgi: float
    cvga_zones: dict = field(default_factory=dict)  # letter -> number of days, all letters

    def row(self) -> dict:
        out = {"subject_id": self.subject_id, "controller": self.controller,
               "n_samples": self.n_samples}
        out.update({m: getattr(self, m) for m in METRIC_NAMES})
        out.update({f"cvga_{z}": self.cvga_zones.get(z, 0) for z in ZONE_LETTERS})
        return out

    @classmethod
    def from_row(cls, row: dict) -> "GlycemicReport":
        return cls(row["subject_id"], row["controller"], int(row["n_samples"]),
                   *(float(row[m]) for m in METRIC_NAMES),
                   cvga_zones={z: int(row[f"cvga_{z}"]) for z in ZONE_LETTERS})


def glycemic_summary(g) -> dict:
    g = np.asarray(g, dtype=np.float64)
    if g.size == 0:
        raise EmptyTrace("no glucose samples")
    n = g.size
    low = int(np.count_nonzero(g < TARGET_RANGE[0]))
    high = int(np.count_nonzero(g > TARGET_RANGE[1]))
    lbgi, hbgi = risk_indices(g)
    return {
        "tir_pct": 100.0 * (n - low - high) / n,
        "hypo_pct": 100.0 * low / n,
        "hyper_pct": 100.0 * high / n,
        "mean_bg": float(np.mean(g)),
        "risk_index": lbgi + hbgi,
        "lbgi": lbgi,
        "hbgi": hbgi,
    }


def metrics(trace: Trace, column: str = "glucose") -> GlycemicReport:
    """Outcome report for ``trace``; scored on plasma glucose by default."""
    if len(trace) == 0:
        raise EmptyTrace("trace has no samples")
    s = glycemic_summary(trace[column])
    zones = dict.fromkeys(ZONE_LETTERS, 0)
    try:
        for p in cvga_points(trace, column):
            zones[p.zone] += 1
    except TraceTooShort:
        pass
    return GlycemicReport(trace.subject_id, trace.controller, len(trace), cvga_zones=zones, **s)


def write_reports(path, reports) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, REPORT_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in reports:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.row().items()})


def read_reports(path) -> list:
    with open(path, newline="") as fh:
        return [GlycemicReport.from_row(r) for r in csv.DictReader(fh)]
