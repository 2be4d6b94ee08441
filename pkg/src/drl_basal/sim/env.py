"""Closed-loop environment: one virtual subject driven through one scenario."""
from __future__ import annotations

import numpy as np

from ..reward import DEFAULT_SCHEME, compute_reward, is_terminal
from ..therapy import (
    ActionSpace,
    SafetyConstraints,
    apply_action,
    bolus_dose,
    executed_action,
    insulin_on_board,
)
from .hovorka import (
    MINUTES_PER_DAY,
    STEP_MINUTES,
    PatientParams,
    PatientState,
    plasma_glucose,
    steady_state,
    step,
)
from .observation import WINDOW, ObservationHistory, StepRecord, make_observation
from .scenario import Scenario


class GlucoseEnv:
    """Step/reset environment with 5-minute steps.

    Meal boluses are computed by the bolus calculator from announced carbs;
    the agent only chooses the basal/glucagon action. ``reset`` restores the
    fasting steady state at the current clock time, so the scenario keeps
    running across episode restarts.
    """

    def __init__(self, params: PatientParams, scenario: Scenario, space: ActionSpace | None = None,
                 reward_scheme: int = DEFAULT_SCHEME, constraints: SafetyConstraints | None = None,
                 window: int = WINDOW, substep: float = 1.0):
        self.params = params
        self.scenario = scenario
        self.space = space or ActionSpace()
        self.reward_scheme = reward_scheme
        self.constraints = constraints
        self.window = window
        self.substep = substep
        self.history = ObservationHistory(window)
        self.state = None
        self.boluses = []
        self.episode = 0
        self._t = 0

    @property
    def t(self) -> int:
        return self._t

    @property
    def exhausted(self) -> bool:
        return self._t >= self.scenario.n_steps * STEP_MINUTES

    def reset(self) -> np.ndarray:
        if self.state is not None:
            self.episode += 1
        x0 = steady_state(self.params.ode, self.params.body_weight, self.params.basal_rate)
        self.state = PatientState(self._t, x0, 0.0)
        self.boluses = []
        g0 = plasma_glucose(x0, self.params)
        self.history.pad(StepRecord(g0, 0.0, self.params.basal_rate * STEP_MINUTES / 60.0, 0.0))
        return self.observation()

    def observation(self) -> np.ndarray:
        return make_observation(self.history, self.window)

    @property
    def cgm(self) -> float:
        return self.history.latest.cgm

    def step(self, action: int):
        """Apply an action index; returns ``(obs, reward, done, info)``."""
        today = self._glucagon_today()
        basal, glucagon = apply_action(action, self.space, self.params, self.cgm,
                                       self.constraints, today)
        return self._advance(basal, glucagon, int(action))

    def step_doses(self, basal: float, glucagon: float = 0.0):
        """Deliver explicit doses (baseline controllers); cap still applies."""
        if glucagon > 0 and self._glucagon_today() + glucagon > self.space.glucagon_daily_cap:
            glucagon = 0.0
        a = executed_action(basal, glucagon, self.space, self.params)
        return self._advance(basal, glucagon, a)

    def _glucagon_today(self) -> float:
        return 0.0 if self._t % MINUTES_PER_DAY == 0 else self.state.glucagon_delivered_today

    def _advance(self, basal, glucagon, proposed):
        if self.state is None:
            raise RuntimeError("call reset() before step()")
        k = self._t // STEP_MINUTES
        announced = self.scenario.announced_carbs(k)
        bolus = 0.0
        if announced > 0:
            self.boluses = [(t, u) for t, u in self.boluses if self._t - t < 240]
            iob = insulin_on_board(self.boluses, self._t)
            bolus = bolus_dose(announced, self.cgm, self.params, iob)
            if bolus > 0:
                self.boluses.append((self._t, bolus))
        self.state, cgm = step(self.state, self.params, self.scenario, basal, bolus, glucagon,
                               self.substep)
        cgm = max(cgm, 1.0)
        self._t = self.state.t
        self.history.append(StepRecord(cgm, announced, bolus + basal * STEP_MINUTES / 60.0,
                                       glucagon))
        reward = compute_reward(cgm, self.reward_scheme)
        done = is_terminal(cgm)
        info = {
            "t_min": self._t,
            "cgm": cgm,
            "plasma_glucose": self.state.glucose(self.params),
            "basal_Uph": basal,
            "bolus_U": bolus,
            "glucagon_mg": glucagon,
            "carbs_g": self.scenario.carbs_in_step(k),
            "action": executed_action(basal, glucagon, self.space, self.params),
            "proposed_action": proposed,
            "reward": reward,
            "episode": self.episode,
        }
        return self.observation(), reward, done, info

    def get_state(self) -> dict:
        """JSON-serializable snapshot; ``set_state`` restores it exactly."""
        return {
            "t": self._t,
            "episode": self.episode,
            "compartments": list(self.state.compartments),
            "glucagon_today": self.state.glucagon_delivered_today,
            "state_t": self.state.t,
            "history": [list(r) for r in self.history.records()],
            "boluses": [list(b) for b in self.boluses],
        }

    def set_state(self, snap: dict):
        self._t = int(snap["t"])
        self.episode = int(snap["episode"])
        self.state = PatientState(int(snap["state_t"]), tuple(snap["compartments"]),
                                  float(snap["glucagon_today"]))
        self.history = ObservationHistory(self.window)
        for r in snap["history"]:
            self.history.append(StepRecord(*r))
        self.boluses = [tuple(b) for b in snap["boluses"]]
