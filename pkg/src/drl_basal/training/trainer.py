"""Generalized and personalized double-DQN training loops.

Generalized training runs on the cohort-average subject: random actions
fill the memory for ``explore_steps`` steps, then every step takes an
epsilon-greedy action, stores the transition and takes one Adam step on a
uniform minibatch. Personalized training starts from a generalized
checkpoint, merges its memory, samples by priority with importance weights,
adds the n-step term and the L2 penalty, and gates every action through the
safety constraints.

A ``Trainer`` can be saved at any step and resumed; the resumed run repeats
the uninterrupted one exactly.
"""
from __future__ import annotations

import csv
import math

import numpy as np

from .. import archive
from ..exceptions import CheckpointError
from ..qnet import (
    AdamState,
    QNetConfig,
    adam_step,
    forward,
    freeze_mask,
    init_weights,
    weights_from_arrays,
    weights_to_arrays,
)
from ..reward import DEFAULT_SCHEME
from ..rl import LinearSchedule, ReplayMemory, combined_loss_and_grad, epsilon_greedy
from ..sim import GlucoseEnv, PatientParams, Scenario, generate_scenario
from ..therapy import ActionSpace, SafetyConstraints
from .checkpoint import PolicyCheckpoint
from .config import TrainConfig, derive_seed

GENERALIZED = "generalized"
PERSONALIZED = "personalized"
TRAINER_KIND = "trainer_state"
PROGRESS_COLUMNS = ("step", "episode_reward", "running_tir", "loss", "epsilon", "beta")


def default_qnet_config(mode: str, config: TrainConfig, **overrides) -> QNetConfig:
    space = ActionSpace(mode)
    return QNetConfig(window=config.window, output_dim=space.n_actions, **overrides)


def training_scenario(params: PatientParams, config: TrainConfig, phase: str) -> Scenario:
    days = config.generalized_days if phase == GENERALIZED else config.personalized_days
    return generate_scenario(params, days, derive_seed(config.seed, phase, params.subject_id))


class Trainer:
    def __init__(self, phase: str, params: PatientParams, mode: str, config: TrainConfig,
                 theta1, theta2, memory: ReplayMemory, reward_scheme: int = DEFAULT_SCHEME,
                 constraints: SafetyConstraints | None = None, scenario: Scenario | None = None):
        if phase not in (GENERALIZED, PERSONALIZED):
            raise ValueError(f"unknown phase {phase!r}")
        self.phase = phase
        self.params = params
        self.space = ActionSpace(mode)
        self.config = config
        if theta1.config.output_dim != self.space.n_actions:
            raise ValueError("network output size does not match the action space")
        self.theta1 = theta1
        self.theta2 = theta2
        self.memory = memory
        self.reward_scheme = reward_scheme
        self.constraints = constraints
        scenario = scenario or training_scenario(params, config, phase)
        self.env = GlucoseEnv(params, scenario, self.space, reward_scheme, constraints,
                              config.window)
        self.adam = AdamState.for_weights(theta1, lr=config.lr)
        self.rng = np.random.default_rng(derive_seed(config.seed, phase, params.subject_id, "agent"))
        self.mask = (freeze_mask(theta1.config, config.freeze_lower_layers)
                     if phase == PERSONALIZED and config.freeze_lower_layers else None)
        self.step_count = 0
        # keep personalized episodes distinct from merged ones for n-step windows
        self.episode_offset = int(memory.episode[:memory.size].max()) + 1 if memory.size else 0
        self.obs = self.env.reset()
        self.progress = []
        self._acc = [0.0, 0, 0.0, 0]  # reward sum, in-range count, loss sum, gradient steps

    # schedules -----------------------------------------------------------
    @property
    def total_steps(self) -> int:
        return self.env.scenario.n_steps

    @property
    def mode(self) -> str:
        return self.space.short_mode

    @property
    def done(self) -> bool:
        return self.step_count >= self.total_steps

    def epsilon(self, t: int) -> float:
        if self.phase == PERSONALIZED:
            return self.config.eps_personalized
        if t <= self.config.explore_steps:
            return 1.0
        return LinearSchedule(self.config.eps_start, self.config.eps_end, self.total_steps // 2)(t)

    def beta(self, t: int) -> float:
        if self.phase == GENERALIZED:
            return 0.0
        return LinearSchedule(self.config.beta_start, self.config.beta_end, self.total_steps)(t)

    @property
    def sync_period(self) -> int:
        return self.config.sync_generalized if self.phase == GENERALIZED else self.config.sync_personalized

    # loop ----------------------------------------------------------------
    def step(self) -> dict:
        """One environment step plus (when due) one gradient step."""
        if self.done:
            raise RuntimeError("training budget exhausted")
        cfg = self.config
        t = self.step_count + 1
        eps = self.epsilon(t)
        if eps >= 1.0:
            a = int(self.rng.integers(self.space.n_actions))
        else:
            a = epsilon_greedy(forward(self.theta1, self.obs), eps, self.rng)
        obs2, r, terminal, info = self.env.step(a)
        # store the action actually delivered after gating and the glucagon cap
        self.memory.push(self.obs, info["action"], r, obs2, terminal,
                         self.episode_offset + self.env.episode)
        loss = math.nan
        learning = self.phase == PERSONALIZED or t > cfg.explore_steps
        if learning and len(self.memory) >= cfg.batch_size:
            loss = self._learn(t)
        if t % self.sync_period == 0:
            self.theta2 = self.theta1.copy()
        self.obs = self.env.reset() if terminal else obs2
        self.step_count = t
        self._record(t, r, info["plasma_glucose"], loss, eps)
        return info

    def _learn(self, t: int) -> float:
        cfg = self.config
        if self.phase == GENERALIZED:
            batch, idx, w = self.memory.sample(cfg.batch_size, 0.0, self.rng, uniform=True)
            lambda1 = lambda2 = 0.0
        else:
            batch, idx, w = self.memory.sample(cfg.batch_size, self.beta(t), self.rng)
            ret, boot_obs, boot_disc = self.memory.nstep(idx, cfg.nstep, cfg.gamma)
            batch.update(nstep_return=ret, nstep_obs=boot_obs, nstep_discount=boot_disc)
            lambda1, lambda2 = cfg.lambda1, cfg.lambda2
        batch["is_weights"] = w
        loss, delta, grads = combined_loss_and_grad(batch, self.theta1, self.theta2,
                                                    lambda1, lambda2, cfg.gamma)
        adam_step(self.theta1, grads, self.adam, self.mask)
        self.memory.update_priorities(idx, delta)
        return loss

    def _record(self, t, reward, glucose, loss, eps):
        acc = self._acc
        acc[0] += reward
        acc[1] += 70.0 <= glucose <= 180.0
        if not math.isnan(loss):
            acc[2] += loss
            acc[3] += 1
        n = self.config.log_every
        if t % n == 0 or t == self.total_steps:
            span = (t - 1) % n + 1
            self.progress.append((t, acc[0], 100.0 * acc[1] / span,
                                  acc[2] / acc[3] if acc[3] else math.nan, eps, self.beta(t)))
            self._acc = [0.0, 0, 0.0, 0]

    def run(self, max_steps: int | None = None):
        """Advance until the budget is exhausted or ``max_steps`` more steps."""
        stop = self.total_steps if max_steps is None else min(self.total_steps,
                                                              self.step_count + max_steps)
        while self.step_count < stop:
            self.step()
        return self

    # outputs -------------------------------------------------------------
    def policy_checkpoint(self) -> PolicyCheckpoint:
        return PolicyCheckpoint(self.theta1.copy(), self.theta2.copy(),
                                ReplayMemory.from_state(self.memory.state_meta(),
                                                        self.memory.state_arrays()),
                                self.config, self.step_count, self.mode, self.params.cohort,
                                self.params.subject_id, self.phase, self.reward_scheme)

    def write_progress(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(PROGRESS_COLUMNS)
            for row in self.progress:
                w.writerow([row[0]] + ["" if math.isnan(v) else repr(float(v)) for v in row[1:]])

    # resume --------------------------------------------------------------
    def state_dict(self):
        meta = {
            "kind": TRAINER_KIND,
            "phase": self.phase,
            "mode": self.mode,
            "params": self.params.to_dict(),
            "config": self.config.to_dict(),
            "qnet": self.theta1.config.to_dict(),
            "reward_scheme": self.reward_scheme,
            "constraints": None if self.constraints is None else {
                "insulin_suspend_below": self.constraints.insulin_suspend_below,
                "glucagon_suspend_above": self.constraints.glucagon_suspend_above},
            "scenario": self.env.scenario.to_dict(),
            "env": self.env.get_state(),
            "step_count": self.step_count,
            "episode_offset": self.episode_offset,
            "rng": self.rng.bit_generator.state,
            "adam": {"t": self.adam.t, "lr": self.adam.lr, "beta1": self.adam.beta1,
                     "beta2": self.adam.beta2, "eps": self.adam.eps},
            "memory": self.memory.state_meta(),
            "progress": [list(r) for r in self.progress],
            "acc": list(self._acc),
        }
        arrays = weights_to_arrays(self.theta1, "theta1.")
        arrays.update(weights_to_arrays(self.theta2, "theta2."))
        arrays.update({"adam.m." + k: v for k, v in self.adam.m.items()})
        arrays.update({"adam.v." + k: v for k, v in self.adam.v.items()})
        arrays.update({"memory." + k: v for k, v in self.memory.state_arrays().items()})
        return meta, arrays

    def save(self, path) -> None:
        archive.save(path, *self.state_dict())

    @classmethod
    def load(cls, path) -> "Trainer":
        meta, arrays = archive.load(path)
        if meta.get("kind") != TRAINER_KIND:
            raise CheckpointError(f"expected a {TRAINER_KIND} file, got {meta.get('kind')!r}")
        return cls.from_state(meta, arrays)

    @classmethod
    def from_state(cls, meta: dict, arrays: dict) -> "Trainer":
        qcfg = QNetConfig.from_dict(meta["qnet"])
        mem = ReplayMemory.from_state(meta["memory"], {k[7:]: v for k, v in arrays.items()
                                                       if k.startswith("memory.")})
        cons = meta["constraints"]
        self = cls(meta["phase"], PatientParams.from_dict(meta["params"]), meta["mode"],
                   TrainConfig.from_dict(meta["config"]),
                   weights_from_arrays(qcfg, arrays, "theta1."),
                   weights_from_arrays(qcfg, arrays, "theta2."), mem, meta["reward_scheme"],
                   None if cons is None else SafetyConstraints(**cons),
                   Scenario.from_dict(meta["scenario"]))
        self.env.set_state(meta["env"])
        self.obs = self.env.observation()
        self.step_count = meta["step_count"]
        self.episode_offset = meta["episode_offset"]
        self.rng.bit_generator.state = meta["rng"]
        a = meta["adam"]
        self.adam = AdamState({k[7:]: v for k, v in arrays.items() if k.startswith("adam.m.")},
                              {k[7:]: v for k, v in arrays.items() if k.startswith("adam.v.")},
                              a["t"], a["lr"], a["beta1"], a["beta2"], a["eps"])
        self.progress = [tuple(r) for r in meta["progress"]]
        self._acc = list(meta["acc"])
        return self


def start_generalized(params: PatientParams, mode: str, config: TrainConfig | None = None,
                      qnet_config: QNetConfig | None = None,
                      reward_scheme: int = DEFAULT_SCHEME) -> Trainer:
    config = config or TrainConfig()
    qcfg = qnet_config or default_qnet_config(mode, config)
    theta1 = init_weights(qcfg, derive_seed(config.seed, "network", mode))
    memory = ReplayMemory(config.buffer_size, config.window, qcfg.input_channels, config.alpha,
                          config.priority_eps)
    return Trainer(GENERALIZED, params, mode, config, theta1, theta1.copy(), memory,
                   reward_scheme, constraints=None)


def start_personalized(checkpoint: PolicyCheckpoint, params: PatientParams,
                       config: TrainConfig | None = None,
                       constraints: SafetyConstraints | None = SafetyConstraints()) -> Trainer:
    if checkpoint.cohort != params.cohort:
        raise ValueError(f"checkpoint cohort {checkpoint.cohort!r} does not match "
                         f"subject cohort {params.cohort!r}")
    config = config or checkpoint.config
    memory = ReplayMemory.merged_from(checkpoint.memory, config.buffer_size)
    return Trainer(PERSONALIZED, params, checkpoint.mode, config, checkpoint.theta1.copy(),
                   checkpoint.theta2.copy(), memory, checkpoint.reward_scheme, constraints)


def train_generalized(params: PatientParams, mode: str, config: TrainConfig | None = None,
                      qnet_config: QNetConfig | None = None,
                      reward_scheme: int = DEFAULT_SCHEME) -> PolicyCheckpoint:
    return start_generalized(params, mode, config, qnet_config, reward_scheme).run().policy_checkpoint()


def train_personalized(checkpoint: PolicyCheckpoint, params: PatientParams,
                       config: TrainConfig | None = None,
                       constraints: SafetyConstraints | None = SafetyConstraints()) -> PolicyCheckpoint:
    return start_personalized(checkpoint, params, config, constraints).run().policy_checkpoint()
