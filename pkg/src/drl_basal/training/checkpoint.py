"""Policy checkpoints: both Q-networks, the replay memory and run metadata."""
from __future__ import annotations

from dataclasses import dataclass

from .. import archive
from ..exceptions import CheckpointError
from ..qnet import QNetConfig, QNetWeights, weights_from_arrays, weights_to_arrays
from ..rl import ReplayMemory
from .config import TrainConfig

POLICY_KIND = "policy_checkpoint"


@dataclass
class PolicyCheckpoint:
    theta1: QNetWeights
    theta2: QNetWeights
    memory: ReplayMemory
    config: TrainConfig
    step: int
    mode: str  # "SH" or "DH"
    cohort: str
    subject_id: str
    phase: str  # "generalized" or "personalized"
    reward_scheme: int = 4

    def __post_init__(self):
        if self.theta1.config != self.theta2.config:
            raise CheckpointError("theta1 and theta2 must share one network config")

    def meta(self) -> dict:
        return {
            "qnet": self.theta1.config.to_dict(),
            "config": self.config.to_dict(),
            "step": self.step,
            "mode": self.mode,
            "cohort": self.cohort,
            "subject_id": self.subject_id,
            "phase": self.phase,
            "reward_scheme": self.reward_scheme,
            "memory": self.memory.state_meta(),
        }

    def arrays(self) -> dict:
        out = weights_to_arrays(self.theta1, "theta1.")
        out.update(weights_to_arrays(self.theta2, "theta2."))
        out.update({"memory." + k: v for k, v in self.memory.state_arrays().items()})
        return out

    def save(self, path) -> None:
        archive.save(path, {"kind": POLICY_KIND, **self.meta()}, self.arrays())

    def dumps(self) -> bytes:
        return archive.dumps({"kind": POLICY_KIND, **self.meta()}, self.arrays())

    @classmethod
    def from_parts(cls, meta: dict, arrays: dict) -> "PolicyCheckpoint":
        qcfg = QNetConfig.from_dict(meta["qnet"])
        mem_arrays = {k[len("memory."):]: v for k, v in arrays.items() if k.startswith("memory.")}
        return cls(
            theta1=weights_from_arrays(qcfg, arrays, "theta1."),
            theta2=weights_from_arrays(qcfg, arrays, "theta2."),
            memory=ReplayMemory.from_state(meta["memory"], mem_arrays),
            config=TrainConfig.from_dict(meta["config"]),
            step=meta["step"],
            mode=meta["mode"],
            cohort=meta["cohort"],
            subject_id=meta["subject_id"],
            phase=meta["phase"],
            reward_scheme=meta["reward_scheme"],
        )

    @classmethod
    def load(cls, path) -> "PolicyCheckpoint":
        meta, arrays = archive.load(path)
        if meta.get("kind") != POLICY_KIND:
            raise CheckpointError(f"expected a {POLICY_KIND} file, got {meta.get('kind')!r}")
        return cls.from_parts(meta, arrays)
