"""Seeded meal and variability scenarios.

A scenario fixes everything random about a simulated period: meal times and
sizes, carbohydrate misestimation, the daily modulation of insulin
sensitivity / meal absorption / bioavailability, and the CGM noise sequence.
Every controller evaluated on the same scenario sees identical conditions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hovorka import MINUTES_PER_DAY, STEP_MINUTES, STEPS_PER_DAY, PatientParams

NOMINAL_MEALS = ((7 * 60, 70.0), (10 * 60, 30.0), (14 * 60, 110.0), (21 * 60, 90.0))
MEAL_TIME_SD = 60.0
MEAL_SIZE_CV = 0.10
MEAL_DURATION = 15
MISESTIMATION = (-0.30, 0.10)
SI_AMPLITUDE = {"adult": 0.30, "adolescent": 0.20}
ABSORPTION_AMPLITUDE = 0.30
BIOAVAILABILITY_AMPLITUDE = 0.10
CGM_NOISE_SD = 2.0
CGM_NOISE_AR = 0.7


@dataclass(frozen=True)
class MealEvent:
    time: int  # minutes since scenario start, on the 5-min grid
    true_carbs: float
    announced_carbs: float
    duration: int = MEAL_DURATION

    def __post_init__(self):
        if self.true_carbs <= 0 or self.announced_carbs <= 0:
            raise ValueError("meal carbohydrates must be positive")
        if self.time % STEP_MINUTES or self.duration % STEP_MINUTES:
            raise ValueError("meal time and duration must lie on the 5-minute grid")


@dataclass
class Scenario:
    seed: int
    days: int
    meals: tuple
    si_phase: np.ndarray  # one phase per day, radians
    absorption_phase: np.ndarray
    bio_phase: np.ndarray
    si_amplitude: float = 0.30
    absorption_amplitude: float = ABSORPTION_AMPLITUDE
    bio_amplitude: float = BIOAVAILABILITY_AMPLITUDE
    cgm_noise_seed: int = 0
    cgm_noise_sd: float = CGM_NOISE_SD
    cgm_noise_ar: float = CGM_NOISE_AR
    _carb_rate: dict = field(default_factory=dict, repr=False, compare=False)
    _announced: dict = field(default_factory=dict, repr=False, compare=False)
    _noise: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.meals = tuple(sorted(self.meals, key=lambda m: m.time))
        self.si_phase = np.asarray(self.si_phase, dtype=float)
        self.absorption_phase = np.asarray(self.absorption_phase, dtype=float)
        self.bio_phase = np.asarray(self.bio_phase, dtype=float)
        for arr in (self.si_phase, self.absorption_phase, self.bio_phase):
            if arr.shape != (self.days,):
                raise ValueError("variability phases must have one entry per day")
        rate, ann = {}, {}
        for m in self.meals:
            k0 = m.time // STEP_MINUTES
            ann[k0] = ann.get(k0, 0.0) + m.announced_carbs
            per_min = m.true_carbs / m.duration
            for k in range(k0, k0 + m.duration // STEP_MINUTES):
                rate[k] = rate.get(k, 0.0) + per_min
        self._carb_rate = rate
        self._announced = ann

    @property
    def n_steps(self) -> int:
        return self.days * STEPS_PER_DAY

    def _check(self, k: int):
        if not 0 <= k < self.n_steps:
            raise IndexError(f"step {k} outside scenario of {self.days} day(s)")

    def carb_rate(self, k: int) -> float:
        """True carbohydrate ingestion rate (g/min) during step ``k``."""
        return self._carb_rate.get(k, 0.0)

    def carbs_in_step(self, k: int) -> float:
        return self._carb_rate.get(k, 0.0) * STEP_MINUTES

    def announced_carbs(self, k: int) -> float:
        """Carbohydrates announced at the start of step ``k`` (0 if no meal starts)."""
        return self._announced.get(k, 0.0)

    def modulation(self, k: int) -> tuple:
        """(insulin sensitivity, absorption speed, bioavailability) factors for step ``k``.

        Held constant over the step and evaluated at its midpoint.
        """
        self._check(k)
        t = k * STEP_MINUTES + 0.5 * STEP_MINUTES
        day = int(t // MINUTES_PER_DAY)
        w = 2.0 * math.pi * (t % MINUTES_PER_DAY) / MINUTES_PER_DAY
        return (
            1.0 + self.si_amplitude * math.sin(w + self.si_phase[day]),
            1.0 + self.absorption_amplitude * math.sin(w + self.absorption_phase[day]),
            1.0 + self.bio_amplitude * math.sin(w + self.bio_phase[day]),
        )

    def cgm_noise(self, k: int) -> float:
        self._check(k)
        if self.cgm_noise_sd == 0:
            return 0.0
        if self._noise is None:
            self._noise = ar1_noise(self.n_steps, self.cgm_noise_seed,
                                    self.cgm_noise_sd, self.cgm_noise_ar)
        return float(self._noise[k])

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "days": self.days,
            "meals": [
                {"time": m.time, "true_carbs": m.true_carbs,
                 "announced_carbs": m.announced_carbs, "duration": m.duration}
                for m in self.meals
            ],
            "si_phase": self.si_phase.tolist(),
            "absorption_phase": self.absorption_phase.tolist(),
            "bio_phase": self.bio_phase.tolist(),
            "si_amplitude": self.si_amplitude,
            "absorption_amplitude": self.absorption_amplitude,
            "bio_amplitude": self.bio_amplitude,
            "cgm_noise_seed": self.cgm_noise_seed,
            "cgm_noise_sd": self.cgm_noise_sd,
            "cgm_noise_ar": self.cgm_noise_ar,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        d = dict(d)
        d["meals"] = tuple(MealEvent(**m) for m in d["meals"])
        return cls(**d)

    @classmethod
    def quiet(cls, days: int, meals: tuple = ()) -> "Scenario":
        """No variability and no sensor noise; no meals unless given."""
        z = np.zeros(days)
        return cls(seed=0, days=days, meals=tuple(meals), si_phase=z, absorption_phase=z, bio_phase=z,
                   si_amplitude=0.0, absorption_amplitude=0.0, bio_amplitude=0.0,
                   cgm_noise_sd=0.0)


def ar1_noise(n: int, seed: int, sd: float, ar: float) -> np.ndarray:
    """Stationary Gaussian AR(1) sequence with marginal SD ``sd``."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(n)
    out = np.empty(n)
    innov = sd * math.sqrt(1.0 - ar * ar)
    e = sd * z[0]
    out[0] = e
    for i in range(1, n):
        e = ar * e + innov * z[i]
        out[i] = e
    return out


def generate_scenario(params: PatientParams, days: int, seed: int, *,
                      meals: bool = True, variability: bool = True,
                      noise: bool = True) -> Scenario:
    """Draw a scenario of ``days`` days for ``params``' cohort from ``seed``."""
    if days < 1:
        raise ValueError("days must be >= 1")
    rng = np.random.default_rng(seed)
    events = []
    si_phase = np.empty(days)
    abs_phase = np.empty(days)
    bio_phase = np.empty(days)
    last_start = MINUTES_PER_DAY - MEAL_DURATION
    for day in range(days):
        offsets = rng.normal(0.0, MEAL_TIME_SD, size=len(NOMINAL_MEALS))
        sizes = np.clip(rng.normal(1.0, MEAL_SIZE_CV, size=len(NOMINAL_MEALS)),
                        1.0 - 3 * MEAL_SIZE_CV, 1.0 + 3 * MEAL_SIZE_CV)
        errors = rng.uniform(*MISESTIMATION, size=len(NOMINAL_MEALS))
        for (t0, carbs), off, size, err in zip(NOMINAL_MEALS, offsets, sizes, errors):
            t = int(round((t0 + off) / STEP_MINUTES)) * STEP_MINUTES
            t = min(max(t, 0), last_start)
            true = float(carbs * size)
            announced = min(max(true * (1.0 + err), 0.7 * true), 1.1 * true)
            events.append(MealEvent(day * MINUTES_PER_DAY + t, true, float(announced)))
        si_phase[day], abs_phase[day], bio_phase[day] = rng.uniform(0.0, 2 * math.pi, size=3)
    noise_seed = int(rng.integers(0, 2**63 - 1))
    return Scenario(
        seed=seed,
        days=days,
        meals=tuple(events) if meals else (),
        si_phase=si_phase,
        absorption_phase=abs_phase,
        bio_phase=bio_phase,
        si_amplitude=SI_AMPLITUDE[params.cohort] if variability else 0.0,
        absorption_amplitude=ABSORPTION_AMPLITUDE if variability else 0.0,
        bio_amplitude=BIOAVAILABILITY_AMPLITUDE if variability else 0.0,
        cgm_noise_seed=noise_seed,
        cgm_noise_sd=CGM_NOISE_SD if noise else 0.0,
    )
