import numpy as np
import pytest

from drl_basal.sim import PatientState, Scenario, make_cohort, make_subject, steady_state, step, subject_by_id
from drl_basal.sim.cohort import BR_RANGE, _glucose_response


@pytest.fixture(scope="module")
def adults():
    return make_cohort("adult", 10)


def test_cohort_layout(adults):
    assert len(adults) == 11
    assert adults[0].subject_id == "adult_avg"
    assert [p.subject_id for p in adults[1:]] == [f"adult_{i:02d}" for i in range(1, 11)]


def test_subjects_are_distinct_and_deterministic(adults):
    assert len({p.basal_rate for p in adults}) == 11
    assert make_subject("adult", 3) == adults[3]
    assert subject_by_id("adult_03") == adults[3]
    assert make_subject("adult", 3, seed=1) != adults[3]


def test_basal_holds_setpoint_within_five(adults):
    """Simulate 24 h at basal = BR without meals: the calibrated fixed point holds."""
    for p in adults:
        assert BR_RANGE[0] <= p.basal_rate <= BR_RANGE[1]
        state = PatientState(0, steady_state(p.ode, p.body_weight, p.basal_rate))
        sc = Scenario.quiet(1)
        for _ in range(288):
            state, _ = step(state, p, sc, p.basal_rate, 0.0, 0.0)
        assert abs(state.glucose(p) - p.fasting_setpoint) < 5.0


def test_isf_is_nadir_drop_after_one_unit(adults):
    p = adults[2]
    g = _glucose_response(p, 0.0, 1.0, 8)
    assert p.isf == pytest.approx(p.fasting_setpoint - g.min(), rel=1e-9)
    assert p.isf > 0


def test_icr_balances_excursion_area(adults):
    p = adults[4]
    g = _glucose_response(p, 60.0, 60.0 / p.icr, 16)
    # net excursion area is near zero relative to its magnitude
    assert abs(np.sum(g - 120.0)) < 0.01 * np.sum(np.abs(g - 120.0))


def test_adolescents_are_lighter_and_less_sensitive():
    teens = make_cohort("adolescent", 5, include_average=False)
    assert len(teens) == 5
    assert np.mean([p.body_weight for p in teens]) < 70
    assert all(p.cohort == "adolescent" for p in teens)


def test_unknown_cohort():
    with pytest.raises(ValueError):
        make_subject("child", 1)
