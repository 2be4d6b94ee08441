"""Virtual subject cohorts.

Each subject's compartmental constants are a log-normal perturbation of the
published means. Therapy settings are then derived from the subject's own
model: the basal rate holds the fasting setpoint, the insulin sensitivity
factor is the nadir drop after a 1 U bolus, and the insulin-to-carb ratio
balances the net glucose excursion area of a bolused 60 g meal.
"""
from __future__ import annotations

import math
from dataclasses import fields, replace
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .hovorka import (
    HovorkaConstants,
    PatientParams,
    PatientState,
    STEP_MINUTES,
    basal_for_setpoint,
    steady_state,
    step,
)
from .scenario import MealEvent, Scenario

PARAM_CV = 0.20
PERTURBED = ("egp0", "f01", "k12", "sit", "sid", "sie", "ke", "tmax_i", "tmax_g",
             "glucagon_potency", "k_glucagon")
BODY_WEIGHT = {"adult": 70.0, "adolescent": 50.0}
SENSITIVITY_SCALE = {"adult": 1.0, "adolescent": 0.7}
BODY_WEIGHT_CV = 0.15
BR_RANGE = (0.1, 5.0)  # U/h; subjects outside are redrawn


def _single_event(carbs: float, hours: int) -> Scenario:
    days = max(1, math.ceil(hours / 24))
    meals = (MealEvent(0, carbs, carbs),) if carbs > 0 else ()
    return Scenario.quiet(days, meals)


def _glucose_response(params: PatientParams, carbs: float, bolus: float, hours: int) -> np.ndarray:
    sc = _single_event(carbs, hours)
    state = PatientState(0, steady_state(params.ode, params.body_weight, params.basal_rate))
    out = np.empty(hours * 60 // STEP_MINUTES)
    for k in range(out.size):
        state, _ = step(state, params, sc, params.basal_rate, bolus if k == 0 else 0.0, 0.0)
        out[k] = state.glucose(params)
    return out


def calibrate_therapy(ode: HovorkaConstants, body_weight: float, subject_id: str,
                      cohort: str, setpoint: float = 120.0) -> PatientParams:
    """Build PatientParams with basal rate, ISF and ICR derived from ``ode``."""
    br = basal_for_setpoint(ode, body_weight, setpoint)
    draft = PatientParams(subject_id, cohort, body_weight, br, 10.0, 50.0, ode, setpoint)
    isf = setpoint - _glucose_response(draft, 0.0, 1.0, 8).min()

    def excursion_area(icr):
        g = _glucose_response(draft, 60.0, 60.0 / icr, 16)
        return float(np.sum(g - setpoint))

    icr = brentq(excursion_area, 1.0, 500.0, xtol=1e-3)
    return replace(draft, icr=float(icr), isf=float(isf))


def _perturb(rng: np.random.Generator, cohort: str) -> tuple:
    sigma = math.sqrt(math.log(1.0 + PARAM_CV**2))
    base = HovorkaConstants()
    values = base.to_dict()
    for name in PERTURBED:
        values[name] *= math.exp(rng.normal(-0.5 * sigma**2, sigma))
    for name in ("sit", "sid", "sie"):
        values[name] *= SENSITIVITY_SCALE[cohort]
    s_bw = math.sqrt(math.log(1.0 + BODY_WEIGHT_CV**2))
    bw = BODY_WEIGHT[cohort] * math.exp(rng.normal(-0.5 * s_bw**2, s_bw))
    return HovorkaConstants(**values), bw


def average_subject(cohort: str) -> PatientParams:
    return _average_subject(cohort)


@lru_cache(maxsize=None)
def _average_subject(cohort: str) -> PatientParams:
    base = HovorkaConstants()
    ode = replace(base, **{n: getattr(base, n) * SENSITIVITY_SCALE[cohort]
                           for n in ("sit", "sid", "sie")})
    return calibrate_therapy(ode, BODY_WEIGHT[cohort], f"{cohort}_avg", cohort)


def make_subject(cohort: str, index: int, seed: int = 0) -> PatientParams:
    return _make_subject(cohort, index, seed)


@lru_cache(maxsize=None)
def _make_subject(cohort: str, index: int, seed: int) -> PatientParams:
    if cohort not in BODY_WEIGHT:
        raise ValueError(f"unknown cohort {cohort!r}")
    ss = np.random.SeedSequence([seed, 0 if cohort == "adult" else 1, index])
    rng = np.random.default_rng(ss)
    while True:
        ode, bw = _perturb(rng, cohort)
        try:
            br = basal_for_setpoint(ode, bw)
        except ValueError:
            continue
        if BR_RANGE[0] <= br <= BR_RANGE[1]:
            break
    return calibrate_therapy(ode, bw, f"{cohort}_{index:02d}", cohort)


def make_cohort(cohort: str, n: int = 10, seed: int = 0, include_average: bool = True) -> list:
    """``[average subject] + n perturbed subjects`` for ``cohort``."""
    out = [average_subject(cohort)] if include_average else []
    out.extend(make_subject(cohort, i, seed) for i in range(1, n + 1))
    return out


def subject_by_id(subject_id: str, seed: int = 0) -> PatientParams:
    cohort, _, tag = subject_id.rpartition("_")
    if tag == "avg":
        return average_subject(cohort)
    return make_subject(cohort, int(tag), seed)


def ode_field_names() -> tuple:
    return tuple(f.name for f in fields(HovorkaConstants))
