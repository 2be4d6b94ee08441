import numpy as np

from drl_basal.qnet import QNetConfig, QNetWeights

PROBE = QNetConfig(layers=((1, 2),), cell_type="feedforward", output_dim=3, window=12)


def constant_net(q_values, config=PROBE) -> QNetWeights:
    """Network whose output is ``q_values`` for every input."""
    params = {k: np.zeros(s) for k, s in config.param_shapes().items()}
    params["head.b"] = np.asarray(q_values, dtype=np.float64)
    return QNetWeights(config, params)
