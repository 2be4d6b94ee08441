import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drl_basal.evaluation import (
    Trace,
    agp,
    agp_svg,
    compare,
    curve_svg,
    cvga_points,
    cvga_svg,
    metrics,
    read_reports,
    risk_transform,
    wilcoxon_signed_rank,
    write_reports,
)
from drl_basal.evaluation.cvga import cvga_point
from drl_basal.evaluation.metrics import glycemic_summary
from drl_basal.exceptions import EmptyTrace, TraceTooShort, UnpairedInput


def make_trace(glucose, sid="s", controller="c", cgm=None):
    g = np.asarray(glucose, dtype=float)
    n = g.size
    z = np.zeros(n)
    return Trace(sid, controller, {
        "t_min": 5 * np.arange(1, n + 1), "cgm": g if cgm is None else cgm, "glucose": g,
        "basal_Uph": z, "bolus_U": z, "glucagon_mg": z, "carbs_g": z, "reward": z,
        "action": np.zeros(n, int)})


def kovatchev(g):
    f = 1.509 * (np.log(g) ** 1.084 - 5.381)
    return 10 * f * f if f < 0 else 0.0, 10 * f * f if f > 0 else 0.0


def test_four_sample_metrics():
    r = metrics(make_trace([60.0, 100.0, 180.0, 250.0]))
    assert (r.tir_pct, r.hypo_pct, r.hyper_pct) == (50.0, 25.0, 25.0)
    assert r.mean_bg == 147.5
    parts = [kovatchev(g) for g in (60.0, 100.0, 180.0, 250.0)]
    lbgi = sum(p[0] for p in parts) / 4
    hbgi = sum(p[1] for p in parts) / 4
    assert r.lbgi == pytest.approx(lbgi, abs=1e-12)
    assert r.hbgi == pytest.approx(hbgi, abs=1e-12)
    assert r.risk_index == pytest.approx(lbgi + hbgi, abs=1e-12)
    assert r.cvga_zones == dict.fromkeys("ABCDE", 0)


def test_boundaries_are_in_range():
    r = metrics(make_trace([70.0, 180.0, 69.999, 180.001]))
    assert (r.tir_pct, r.hypo_pct, r.hyper_pct) == (50.0, 25.0, 25.0)


def test_risk_transform_zero_near_112():
    # the symmetrised scale crosses zero at about 112.5 mg/dL
    assert risk_transform(112.5) == pytest.approx(0.0, abs=2e-3)
    with pytest.raises(ValueError):
        risk_transform(0.0)


@given(st.lists(st.floats(20, 600), min_size=1, max_size=50))
@settings(max_examples=1000, deadline=None)
def test_percentages_sum_to_100(g):
    s = glycemic_summary(g)
    assert s["tir_pct"] + s["hypo_pct"] + s["hyper_pct"] == pytest.approx(100.0, abs=1e-9)


def test_empty_trace():
    with pytest.raises(EmptyTrace):
        Trace.from_rows("s", "c", [])
    with pytest.raises(EmptyTrace):
        glycemic_summary([])


def test_two_day_cvga():
    day1 = np.full(288, 120.0)
    day1[10], day1[200] = 95.0, 170.0  # A
    day2 = np.full(288, 150.0)
    day2[5], day2[100] = 40.0, 420.0  # E, clamped to (50, 400)
    pts = cvga_points(make_trace(np.concatenate([day1, day2, [100.0] * 10])))
    assert [(p.x, p.y, p.label, p.zone) for p in pts] == [
        (95.0, 170.0, "A", "A"), (50.0, 400.0, "E", "E")]
    assert metrics(make_trace(np.concatenate([day1, day2]))).cvga_zones == {"A": 1, "B": 0, "C": 0, "D": 0, "E": 1}


@pytest.mark.parametrize("lo,hi,label", [
    (91, 180, "A"), (90, 180, "Lower B"), (69, 180, "Lower C"), (100, 181, "Upper B"),
    (80, 250, "B"), (60, 300, "Lower D"), (100, 301, "Upper C"), (75, 350, "Upper D"),
    (60, 350, "E"), (150, 120, "A")])
def test_cvga_zone_table(lo, hi, label):
    assert cvga_point(0, lo, hi).label == label


def test_cvga_needs_a_day():
    with pytest.raises(TraceTooShort):
        cvga_points(make_trace([100.0] * 287))


def test_two_day_agp():
    d1 = np.linspace(80, 200, 288)
    d2 = d1 + 20.0
    p = agp(make_trace(np.concatenate([d1, d2]), cgm=np.concatenate([d1, d2])), min_days=2)
    np.testing.assert_allclose(p.mean, d1 + 10.0)
    np.testing.assert_allclose(p.sd, np.sqrt(200.0))
    np.testing.assert_allclose(p.p2_5, d1 + 0.5)
    np.testing.assert_allclose(p.p97_5, d1 + 19.5)
    assert p.n_days == 2


def test_agp_uses_cgm_and_needs_days():
    g = np.full(288 * 3, 100.0)
    p = agp(make_trace(g, cgm=g + 7.0), min_days=3)
    np.testing.assert_allclose(p.mean, 107.0)
    with pytest.raises(TraceTooShort):
        agp(make_trace(g), min_days=7)


def test_trace_csv_round_trip(tmp_path):
    t = make_trace(np.random.default_rng(0).uniform(40, 300, 300))
    t.to_csv(tmp_path / "t.csv")
    back = Trace.from_csv(tmp_path / "t.csv")
    for c, v in t.data.items():
        np.testing.assert_array_equal(back[c], v)


def test_trace_validation():
    t = make_trace([100.0, 110.0])
    bad = dict(t.data, t_min=np.array([5, 15]))
    with pytest.raises(ValueError):
        Trace("s", "c", bad)
    with pytest.raises(ValueError):
        Trace("s", "c", dict(t.data, bolus_U=np.array([0.0, -1.0])))


def test_report_csv_round_trip(tmp_path):
    reps = [metrics(make_trace(np.linspace(50, 250, 600), sid=f"s{i}")) for i in range(3)]
    write_reports(tmp_path / "r.csv", reps)
    assert read_reports(tmp_path / "r.csv") == reps


def brute_force_p(d):
    d = np.asarray(d, float)
    from scipy.stats import rankdata
    ranks = rankdata(np.abs(d))
    obs = abs(ranks[d > 0].sum() - ranks[d < 0].sum())
    n = d.size
    hits = 0
    for mask in range(2 ** n):
        signs = np.array([1 if mask >> k & 1 else -1 for k in range(n)])
        hits += abs(np.sum(signs * ranks)) >= obs - 1e-9
    return hits / 2 ** n


@pytest.mark.parametrize("seed", range(6))
def test_exact_wilcoxon_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 11))
    a = np.round(rng.normal(0, 2, n))  # rounding creates ties
    b = np.round(rng.normal(0.5, 2, n))
    res = wilcoxon_signed_rank(a, b)
    d = (a - b)[a != b]
    assert res.exact
    assert res.p_value == pytest.approx(brute_force_p(d), abs=1e-12)


def test_wilcoxon_examples():
    res = wilcoxon_signed_rank(np.arange(1, 11) + 0.5, np.zeros(10))
    assert res.p_value == pytest.approx(2 / 1024, abs=1e-15)
    assert res.statistic == 55.0
    flipped = wilcoxon_signed_rank(np.zeros(10), np.arange(1, 11) + 0.5)
    assert flipped.statistic == -55.0 and flipped.p_value == res.p_value
    same = wilcoxon_signed_rank([1.0, 2.0], [1.0, 2.0])
    assert same.p_value == 1.0 and same.n == 0


def test_large_sample_uses_normal_approximation():
    rng = np.random.default_rng(0)
    res = wilcoxon_signed_rank(rng.normal(0.3, 1, 40), rng.normal(0, 1, 40))
    assert not res.exact and 0 < res.p_value < 1


def test_compare_pairs_by_subject():
    rng = np.random.default_rng(1)
    a = [metrics(make_trace(rng.uniform(60, 250, 300), sid=f"s{i}", controller="DRL-SH"))
         for i in range(4)]
    b = [metrics(make_trace(rng.uniform(60, 250, 300), sid=f"s{i}", controller="LGS"))
         for i in range(4)]
    rows = compare(a, b[::-1])
    tir = next(r for r in rows if r["metric"] == "tir_pct")
    assert tir["controller_a"] == "DRL-SH" and tir["n"] == 4
    assert tir["median_a"] == float(np.median([r.tir_pct for r in a]))
    with pytest.raises(UnpairedInput):
        compare(a[:3], b[1:])
    with pytest.raises(UnpairedInput):
        compare(a[:2], b[:2])
    with pytest.raises(UnpairedInput):
        compare(a + a[:1], b + b[:1])


def test_svg_outputs_are_valid_xml():
    g = np.tile(np.linspace(80, 220, 288), 3)
    t = make_trace(g, cgm=g)
    docs = [
        agp_svg({"LGS": agp(t, min_days=3), "DRL-SH": agp(t, min_days=3)}),
        cvga_svg({"LGS": cvga_points(t)}),
        curve_svg({"tir": ([1, 2, 3], [50.0, float("nan"), 60.0])}, "progress", "TIR"),
        curve_svg({"flat": ([1], [1.0])}, "one point", "y"),
    ]
    for doc in docs:
        root = ET.fromstring(doc)
        assert root.tag.endswith("svg")
