"""Hovorka glucose-insulin model extended with a plasma glucagon compartment.

Compartment layout (index: name, unit)::

    0  Q1   accessible (plasma) glucose mass        mmol
    1  Q2   non-accessible glucose mass             mmol
    2  S1   subcutaneous insulin, first depot       mU
    3  S2   subcutaneous insulin, second depot      mU
    4  I    plasma insulin concentration            mU/L
    5  x1   insulin action on glucose transport     1/min
    6  x2   insulin action on glucose disposal      1/min
    7  x3   insulin action on endogenous production -
    8  D1   gut carbohydrate, first compartment     mmol
    9  D2   gut carbohydrate, second compartment    mmol
    10 Gn   plasma glucagon                         ug/kg

Glucagon raises endogenous glucose production linearly:
``EGP = EGP0 * BW * max(0, 1 - x3 + glucagon_potency * Gn)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import TYPE_CHECKING

from scipy.optimize import brentq

from ..exceptions import NumericalBlowup

if TYPE_CHECKING:
    from .scenario import Scenario

MGDL_PER_MMOL = 18.0
STEP_MINUTES = 5
STEPS_PER_DAY = 288
MINUTES_PER_DAY = 1440
CARB_MMOL_PER_G = 1000.0 / 180.16

N_COMPARTMENTS = 11
COMPARTMENT_NAMES = ("Q1", "Q2", "S1", "S2", "I", "x1", "x2", "x3", "D1", "D2", "Gn")


@dataclass(frozen=True)
class HovorkaConstants:
    """Compartmental-model constants for one subject (per-kg where noted)."""

    egp0: float = 0.0161  # mmol/kg/min
    f01: float = 0.0097  # mmol/kg/min
    k12: float = 0.066  # 1/min
    ka1: float = 0.006
    ka2: float = 0.06
    ka3: float = 0.03
    sit: float = 51.2e-4  # 1/min per mU/L
    sid: float = 8.2e-4
    sie: float = 520e-4  # per mU/L
    ke: float = 0.138  # 1/min
    vi: float = 0.12  # L/kg
    vg: float = 0.16  # L/kg
    tmax_i: float = 55.0  # min
    tmax_g: float = 40.0  # min
    ag: float = 0.8
    glucagon_potency: float = 2.0  # per ug/kg of plasma glucagon
    k_glucagon: float = 0.05  # 1/min

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{f.name} must be a positive finite number, got {v!r}")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class PatientParams:
    subject_id: str
    cohort: str
    body_weight: float
    basal_rate: float  # U/h
    icr: float  # g/U
    isf: float  # mg/dL per U
    ode: HovorkaConstants = field(default_factory=HovorkaConstants)
    fasting_setpoint: float = 120.0

    def __post_init__(self):
        if self.cohort not in ("adult", "adolescent"):
            raise ValueError(f"unknown cohort {self.cohort!r}")
        for name in ("body_weight", "basal_rate", "icr", "isf", "fasting_setpoint"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive, got {v!r}")

    def to_dict(self) -> dict:
        return {
            "subject_id": self.subject_id,
            "cohort": self.cohort,
            "body_weight": self.body_weight,
            "basal_rate": self.basal_rate,
            "icr": self.icr,
            "isf": self.isf,
            "fasting_setpoint": self.fasting_setpoint,
            "ode": self.ode.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PatientParams":
        d = dict(d)
        d["ode"] = HovorkaConstants(**d["ode"])
        return cls(**d)


@dataclass(frozen=True)
class PatientState:
    t: int
    compartments: tuple
    glucagon_delivered_today: float = 0.0

    def glucose(self, params: PatientParams) -> float:
        """Plasma glucose in mg/dL."""
        return plasma_glucose(self.compartments, params)


def plasma_glucose(x, params: PatientParams) -> float:
    return x[0] / (params.ode.vg * params.body_weight) * MGDL_PER_MMOL


def rhs(x, p: HovorkaConstants, bw: float, u: float, d: float, gn_in: float,
        si_mod: float = 1.0, abs_mod: float = 1.0, bio_mod: float = 1.0) -> list:
    """Time derivative of the compartment vector.

    u: insulin infusion, mU/min. d: carbohydrate ingestion, mmol/min.
    gn_in: glucagon infusion, ug/kg/min. The ``*_mod`` factors scale insulin
    sensitivity, gut absorption speed and carbohydrate bioavailability.
    """
    q1, q2, s1, s2, ins, x1, x2, x3, d1, d2, gn = x
    vg = p.vg * bw
    g = q1 / vg
    f01c = p.f01 * bw if g >= 4.5 else p.f01 * bw * g / 4.5
    fr = 0.003 * (g - 9.0) * vg if g >= 9.0 else 0.0
    tmax_g = p.tmax_g / abs_mod
    ug = d2 / tmax_g
    egp = p.egp0 * bw * max(0.0, 1.0 - x3 + p.glucagon_potency * gn)
    return [
        -f01c - fr - x1 * q1 + p.k12 * q2 + ug + egp,
        x1 * q1 - (p.k12 + x2) * q2,
        u - s1 / p.tmax_i,
        (s1 - s2) / p.tmax_i,
        s2 / (p.tmax_i * p.vi * bw) - p.ke * ins,
        p.ka1 * (si_mod * p.sit * ins - x1),
        p.ka2 * (si_mod * p.sid * ins - x2),
        p.ka3 * (si_mod * p.sie * ins - x3),
        p.ag * bio_mod * d - d1 / tmax_g,
        (d1 - d2) / tmax_g,
        gn_in - p.k_glucagon * gn,
    ]


def rk4_integrate(x, p, bw, duration, substep, u, d, gn_in, mods=(1.0, 1.0, 1.0)):
    """Fixed-step RK4 with inputs held constant; clamps compartments at zero."""
    n = int(round(duration / substep))
    if n < 1 or abs(n * substep - duration) > 1e-9:
        raise ValueError("duration must be an integer multiple of substep")
    h = duration / n
    x = list(x)
    si, ab, bio = mods
    rng = range(N_COMPARTMENTS)
    for _ in range(n):
        k1 = rhs(x, p, bw, u, d, gn_in, si, ab, bio)
        k2 = rhs([x[i] + 0.5 * h * k1[i] for i in rng], p, bw, u, d, gn_in, si, ab, bio)
        k3 = rhs([x[i] + 0.5 * h * k2[i] for i in rng], p, bw, u, d, gn_in, si, ab, bio)
        k4 = rhs([x[i] + h * k3[i] for i in rng], p, bw, u, d, gn_in, si, ab, bio)
        x = [x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in rng]
        # written so NaN is kept (max(0.0, nan) would silently return 0.0)
        x = [0.0 if v < 0.0 else v for v in x]
    if not all(math.isfinite(v) for v in x):
        raise NumericalBlowup(f"non-finite compartment after integration: {x}")
    return x


def step(state: PatientState, params: PatientParams, scenario: "Scenario",
         basal: float, bolus: float, glucagon: float, substep: float = 1.0):
    """Advance ``state`` by one 5-minute step.

    basal in U/h, bolus in U, glucagon in mg; bolus and glucagon are delivered
    uniformly over the step. Returns ``(new_state, cgm_reading)``.
    """
    if basal < 0 or bolus < 0 or glucagon < 0:
        raise ValueError("doses must be non-negative")
    if state.t % STEP_MINUTES:
        raise ValueError(f"state time {state.t} is not on the 5-minute grid")
    k = state.t // STEP_MINUTES
    bw = params.body_weight
    u = basal * 1000.0 / 60.0 + bolus * 1000.0 / STEP_MINUTES
    d = scenario.carb_rate(k) * CARB_MMOL_PER_G
    gn_in = glucagon * 1000.0 / bw / STEP_MINUTES
    x = rk4_integrate(state.compartments, params.ode, bw, STEP_MINUTES, substep,
                      u, d, gn_in, scenario.modulation(k))
    today = state.glucagon_delivered_today
    if state.t % MINUTES_PER_DAY == 0:
        today = 0.0
    new = PatientState(state.t + STEP_MINUTES, tuple(x), today + glucagon)
    cgm = plasma_glucose(x, params) + scenario.cgm_noise(k)
    return new, cgm


def _steady_insulin(p: HovorkaConstants, bw: float, basal_uph: float) -> float:
    u = basal_uph * 1000.0 / 60.0
    return u / (p.ke * p.vi * bw)


def _q1_balance(g_mmol: float, ins: float, p: HovorkaConstants, bw: float) -> float:
    """dQ1/dt at the insulin-steady state for plasma glucose ``g_mmol``."""
    x1, x2, x3 = p.sit * ins, p.sid * ins, p.sie * ins
    vg = p.vg * bw
    q1 = g_mmol * vg
    q2 = x1 * q1 / (p.k12 + x2)
    f01c = p.f01 * bw if g_mmol >= 4.5 else p.f01 * bw * g_mmol / 4.5
    fr = 0.003 * (g_mmol - 9.0) * vg if g_mmol >= 9.0 else 0.0
    egp = p.egp0 * bw * max(0.0, 1.0 - x3)
    return -f01c - fr - x1 * q1 + p.k12 * q2 + egp


def steady_state(p: HovorkaConstants, bw: float, basal_uph: float) -> tuple:
    """Fixed point of the model under constant basal insulin, no meal/glucagon."""
    ins = _steady_insulin(p, bw, basal_uph)
    g = brentq(_q1_balance, 1e-6, 200.0, args=(ins, p, bw), xtol=1e-14, rtol=1e-15)
    u = basal_uph * 1000.0 / 60.0
    s = u * p.tmax_i
    x1, x2, x3 = p.sit * ins, p.sid * ins, p.sie * ins
    q1 = g * p.vg * bw
    q2 = x1 * q1 / (p.k12 + x2)
    return (q1, q2, s, s, ins, x1, x2, x3, 0.0, 0.0, 0.0)


def basal_for_setpoint(p: HovorkaConstants, bw: float, setpoint: float = 120.0) -> float:
    """Basal rate (U/h) whose fixed point holds plasma glucose at ``setpoint``.

    Raises ValueError when the subject needs no insulin to stay at or below
    the setpoint.
    """
    g = setpoint / MGDL_PER_MMOL
    if _q1_balance(g, 0.0, p, bw) <= 0:
        raise ValueError("subject does not require basal insulin at this setpoint")
    hi = 1.0
    while _q1_balance(g, hi, p, bw) > 0:
        hi *= 2.0
        if hi > 1e6:
            raise ValueError("no basal insulin level reaches the setpoint")
    ins = brentq(lambda i: _q1_balance(g, i, p, bw), 0.0, hi, xtol=1e-14, rtol=1e-15)
    return ins * p.ke * p.vi * bw * 60.0 / 1000.0


def with_basal(params: PatientParams, basal_rate: float) -> PatientParams:
    return replace(params, basal_rate=basal_rate)
