"""Weight checkpoints with the network config embedded."""
from __future__ import annotations

from .. import archive
from ..exceptions import CheckpointError
from .network import QNetConfig, QNetWeights

KIND = "qnet_weights"


def weights_to_arrays(weights: QNetWeights, prefix: str = "") -> dict:
    return {prefix + k: v for k, v in weights.items()}


def weights_from_arrays(config: QNetConfig, arrays: dict, prefix: str = "") -> QNetWeights:
    names = config.param_shapes()
    try:
        return QNetWeights(config, {k: arrays[prefix + k] for k in names})
    except KeyError as e:
        raise CheckpointError(f"missing array {e}") from None


def save_weights(path, weights: QNetWeights) -> None:
    archive.save(path, {"kind": KIND, "config": weights.config.to_dict()},
                 weights_to_arrays(weights))


def load_weights(path) -> QNetWeights:
    meta, arrays = archive.load(path)
    if meta.get("kind") != KIND:
        raise CheckpointError(f"expected a {KIND} file, got {meta.get('kind')!r}")
    return weights_from_arrays(QNetConfig.from_dict(meta["config"]), arrays)
