"""Therapy layer: bolus calculator, discrete actions, safety gate, LGS baseline.

Action indices (shared by traces and the CLI)::

    0  suspend basal            3  1.5 x basal rate
    1  0.5 x basal rate         4  2.0 x basal rate
    2  1.0 x basal rate         5  glucagon mini-bolus (dual hormone only)
"""
from __future__ import annotations

import operator
from dataclasses import dataclass

from .exceptions import InvalidAction
from .sim.hovorka import PatientParams

SINGLE_HORMONE = "single_hormone"
DUAL_HORMONE = "dual_hormone"
MODE_ALIASES = {"SH": SINGLE_HORMONE, "DH": DUAL_HORMONE,
                SINGLE_HORMONE: SINGLE_HORMONE, DUAL_HORMONE: DUAL_HORMONE}

CORRECTION_TARGET = 120.0
IOB_DURATION = 240.0  # min
LGS_THRESHOLD = 80.0


@dataclass(frozen=True)
class ActionSpace:
    mode: str = SINGLE_HORMONE
    basal_multipliers: tuple = (0.0, 0.5, 1.0, 1.5, 2.0)
    glucagon_dose_per_kg: float = 0.3  # ug/kg
    glucagon_daily_cap: float = 1.0  # mg

    def __post_init__(self):
        object.__setattr__(self, "mode", MODE_ALIASES.get(self.mode, self.mode))
        if self.mode not in (SINGLE_HORMONE, DUAL_HORMONE):
            raise ValueError(f"unknown mode {self.mode!r}")
        m = self.basal_multipliers
        if m[0] != 0 or any(b <= a for a, b in zip(m, m[1:])):
            raise ValueError("basal multipliers must start at 0 and strictly increase")

    @property
    def n_actions(self) -> int:
        return len(self.basal_multipliers) + (self.mode == DUAL_HORMONE)

    @property
    def glucagon_index(self):
        return len(self.basal_multipliers) if self.mode == DUAL_HORMONE else None

    @property
    def short_mode(self) -> str:
        return "SH" if self.mode == SINGLE_HORMONE else "DH"

    def glucagon_dose(self, params: PatientParams) -> float:
        """Fixed glucagon dose in mg."""
        return self.glucagon_dose_per_kg * params.body_weight / 1000.0


@dataclass(frozen=True)
class SafetyConstraints:
    insulin_suspend_below: float = 80.0
    glucagon_suspend_above: float = 160.0

    def __post_init__(self):
        if not self.insulin_suspend_below < self.glucagon_suspend_above:
            raise ValueError("insulin_suspend_below must be below glucagon_suspend_above")


def insulin_on_board(boluses, t_now: float, duration: float = IOB_DURATION) -> float:
    """Undecayed insulin from ``boluses`` [(time_min, units), ...] with linear decay."""
    iob = 0.0
    for t, units in boluses:
        age = t_now - t
        if 0 <= age < duration:
            iob += units * (1.0 - age / duration)
    return iob


def bolus_dose(announced_carbs: float, cgm: float, params: PatientParams, iob: float = 0.0,
               target: float = CORRECTION_TARGET) -> float:
    """Standard bolus calculator: meal insulin + correction - insulin on board, floored at 0."""
    if announced_carbs < 0 or iob < 0 or cgm <= 0:
        raise ValueError("invalid bolus calculator input")
    return max(0.0, announced_carbs / params.icr + (cgm - target) / params.isf - iob)


def apply_action(action_index: int, space: ActionSpace, params: PatientParams, cgm: float,
                 constraints: SafetyConstraints | None = None, glucagon_today: float = 0.0):
    """Map an action index to ``(basal U/h, glucagon mg)``.

    The glucagon action suspends basal for the step. With ``constraints`` the
    gate zeroes basal below ``insulin_suspend_below`` and glucagon above
    ``glucagon_suspend_above``. The daily glucagon cap is always enforced.
    """
    try:
        a = operator.index(action_index)
    except TypeError:
        raise InvalidAction(f"action index must be an integer, got {action_index!r}") from None
    if not 0 <= a < space.n_actions:
        raise InvalidAction(f"action {a} outside 0..{space.n_actions - 1}")
    if a == space.glucagon_index:
        basal, glucagon = 0.0, space.glucagon_dose(params)
    else:
        basal, glucagon = space.basal_multipliers[a] * params.basal_rate, 0.0
    if constraints is not None:
        if cgm < constraints.insulin_suspend_below:
            basal = 0.0
        if cgm > constraints.glucagon_suspend_above:
            glucagon = 0.0
    if glucagon > 0 and glucagon_today + glucagon > space.glucagon_daily_cap:
        glucagon = 0.0
    return basal, glucagon


def executed_action(basal: float, glucagon: float, space: ActionSpace, params: PatientParams) -> int:
    """Action index equivalent to the delivered ``(basal, glucagon)`` pair."""
    if glucagon > 0:
        return space.glucagon_index
    ratio = basal / params.basal_rate
    return min(range(len(space.basal_multipliers)),
               key=lambda i: abs(space.basal_multipliers[i] - ratio))


def lgs_controller(cgm: float, params: PatientParams, threshold: float = LGS_THRESHOLD) -> float:
    """Low-glucose suspension: basal off strictly below ``threshold``, else the nominal rate."""
    if cgm <= 0:
        raise ValueError("cgm must be positive")
    return 0.0 if cgm < threshold else params.basal_rate
