"""Closed-loop test rollouts for learned policies and the LGS baseline."""
from __future__ import annotations

import numpy as np

from ..evaluation.trace import Trace
from ..qnet import QNetWeights, forward
from ..reward import DEFAULT_SCHEME
from ..sim import GlucoseEnv, PatientParams, Scenario, generate_scenario
from ..therapy import ActionSpace, SafetyConstraints, lgs_controller
from .config import TrainConfig, derive_seed

LGS = "LGS"


def evaluation_scenario(params: PatientParams, days: int, seed: int) -> Scenario:
    """Scenario shared by every controller evaluated on ``params``."""
    return generate_scenario(params, days, derive_seed(seed, "test", params.subject_id))


def rollout(controller, params: PatientParams, scenario: Scenario,
            constraints: SafetyConstraints | None = SafetyConstraints(),
            reward_scheme: int = DEFAULT_SCHEME, tag: str | None = None) -> Trace:
    """Run ``controller`` over the whole scenario without episode restarts.

    ``controller`` is either ``"LGS"`` or ``(weights, mode)``; a learned
    policy acts greedily and is gated by ``constraints``.
    """
    if isinstance(controller, str):
        if controller != LGS:
            raise ValueError(f"unknown baseline {controller!r}")
        space, weights, cons = ActionSpace("SH"), None, None
        tag = tag or LGS
    else:
        weights, mode = controller
        if not isinstance(weights, QNetWeights):
            raise TypeError("controller must be 'LGS' or (QNetWeights, mode)")
        space, cons = ActionSpace(mode), constraints
        tag = tag or f"DRL-{space.short_mode}"
    env = GlucoseEnv(params, scenario, space, reward_scheme, cons)
    obs = env.reset()
    rows = []
    for _ in range(scenario.n_steps):
        if weights is None:
            obs, r, _, info = env.step_doses(lgs_controller(env.cgm, params), 0.0)
        else:
            obs, r, _, info = env.step(int(np.argmax(forward(weights, obs))))
        rows.append({"t_min": info["t_min"], "cgm": info["cgm"],
                     "glucose": info["plasma_glucose"], "basal_Uph": info["basal_Uph"],
                     "bolus_U": info["bolus_U"], "glucagon_mg": info["glucagon_mg"],
                     "carbs_g": info["carbs_g"], "reward": r, "action": info["action"]})
    return Trace.from_rows(params.subject_id, tag, rows)


def evaluate_subject(params: PatientParams, policies: dict, config: TrainConfig,
                     include_lgs: bool = True, constraints=SafetyConstraints(),
                     reward_scheme: int = DEFAULT_SCHEME) -> list:
    """Traces for LGS and each ``{tag: (weights, mode)}`` on one shared test scenario."""
    scenario = evaluation_scenario(params, config.test_days, config.seed)
    traces = [rollout(LGS, params, scenario, reward_scheme=reward_scheme)] if include_lgs else []
    for tag, policy in policies.items():
        traces.append(rollout(policy, params, scenario, constraints, reward_scheme, tag))
    return traces
