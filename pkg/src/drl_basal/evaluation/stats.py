"""Paired comparison of controllers with the Wilcoxon signed-rank test."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata, wilcoxon

from ..exceptions import UnpairedInput
from .metrics import METRIC_NAMES

EXACT_MAX_N = 20
COMPARISON_COLUMNS = ("metric", "controller_a", "controller_b", "n", "median_a", "median_b",
                      "statistic", "p_value", "significant_05", "significant_01")


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # W+ - W-; the sign follows the direction of a - b
    p_value: float
    n: int  # pairs left after dropping zero differences
    exact: bool


def _exact_two_sided(ranks: np.ndarray, w_plus: float) -> float:
    """Exact null distribution of W+ by dynamic programming over sign flips.

    Midranks are multiples of 0.5, so doubled ranks are integers.
    """
    r2 = np.rint(2 * ranks).astype(np.int64)
    dist = np.zeros(int(r2.sum()) + 1)
    dist[0] = 1.0
    for r in r2:
        shifted = np.zeros_like(dist)
        shifted[r:] = dist[:dist.size - r]
        dist = dist + shifted
    dist /= dist.sum()
    k = int(round(2 * w_plus))
    lower = dist[:k + 1].sum()
    upper = dist[k:].sum()
    return float(min(1.0, 2.0 * min(lower, upper)))


def wilcoxon_signed_rank(a, b) -> WilcoxonResult:
    """Two-sided test of ``a - b``; exact for up to 20 non-zero differences."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise UnpairedInput("paired samples must be 1-D and equally long")
    d = a - b
    d = d[d != 0]
    n = d.size
    if n == 0:
        return WilcoxonResult(0.0, 1.0, 0, True)
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    if n <= EXACT_MAX_N:
        p = _exact_two_sided(ranks, w_plus)
        exact = True
    else:
        p = float(wilcoxon(d, zero_method="wilcox", correction=False, method="approx").pvalue)
        exact = False
    return WilcoxonResult(w_plus - w_minus, p, n, exact)


def compare(reports_a, reports_b, metrics=METRIC_NAMES, min_pairs: int = 3) -> list:
    """Per-metric paired test between two controllers, pairing reports by subject."""
    by_a = {r.subject_id: r for r in reports_a}
    by_b = {r.subject_id: r for r in reports_b}
    if len(by_a) != len(reports_a) or len(by_b) != len(reports_b):
        raise UnpairedInput("duplicate subject in a report set")
    if set(by_a) != set(by_b):
        raise UnpairedInput(f"subjects differ: {sorted(set(by_a) ^ set(by_b))}")
    if len(by_a) < min_pairs:
        raise UnpairedInput(f"need at least {min_pairs} paired subjects, got {len(by_a)}")
    subjects = sorted(by_a)
    tag_a = reports_a[0].controller
    tag_b = reports_b[0].controller
    rows = []
    for m in metrics:
        xa = np.array([getattr(by_a[s], m) for s in subjects])
        xb = np.array([getattr(by_b[s], m) for s in subjects])
        res = wilcoxon_signed_rank(xa, xb)
        rows.append({
            "metric": m, "controller_a": tag_a, "controller_b": tag_b, "n": len(subjects),
            "median_a": float(np.median(xa)), "median_b": float(np.median(xb)),
            "statistic": res.statistic, "p_value": res.p_value,
            "significant_05": res.p_value <= 0.05, "significant_01": res.p_value <= 0.01,
        })
    return rows


def write_comparison(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, COMPARISON_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
