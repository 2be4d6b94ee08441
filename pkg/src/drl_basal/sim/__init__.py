from .cohort import average_subject, make_cohort, make_subject, subject_by_id
from .env import GlucoseEnv
from .hovorka import (
    HovorkaConstants,
    PatientParams,
    PatientState,
    STEPS_PER_DAY,
    basal_for_setpoint,
    steady_state,
    step,
)
from .observation import ObservationHistory, StepRecord, make_observation
from .scenario import MealEvent, Scenario, generate_scenario

__all__ = [
    "GlucoseEnv", "HovorkaConstants", "MealEvent", "ObservationHistory", "PatientParams",
    "PatientState", "STEPS_PER_DAY", "Scenario", "StepRecord", "average_subject",
    "basal_for_setpoint", "generate_scenario", "make_cohort", "make_observation",
    "make_subject", "steady_state", "step", "subject_by_id",
]
