"""Adam optimizer over QNetWeights parameter dicts."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import QNetWeights


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0
    lr: float = 1e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_weights(cls, weights: QNetWeights, lr: float = 1e-5, **kw) -> "AdamState":
        return cls({k: np.zeros_like(v) for k, v in weights.items()},
                   {k: np.zeros_like(v) for k, v in weights.items()}, lr=lr, **kw)

    def copy(self) -> "AdamState":
        return AdamState({k: a.copy() for k, a in self.m.items()},
                         {k: a.copy() for k, a in self.v.items()},
                         self.t, self.lr, self.beta1, self.beta2, self.eps)


def adam_step(weights: QNetWeights, grads: dict, state: AdamState, mask: dict | None = None) -> QNetWeights:
    """One bias-corrected Adam update, in place. Masked-out entries are left untouched."""
    if set(grads) != set(weights.params):
        raise ValueError("gradient names do not match weights")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for name, w in weights.items():
        g = grads[name]
        if g.shape != w.shape:
            raise ValueError(f"gradient shape mismatch for {name}")
        m, v = state.m[name], state.v[name]
        if mask is not None and not mask[name].all():
            keep = mask[name]
            if not keep.any():
                continue
            m[keep] = b1 * m[keep] + (1 - b1) * g[keep]
            v[keep] = b2 * v[keep] + (1 - b2) * g[keep] ** 2
            w[keep] -= state.lr * (m[keep] / c1) / (np.sqrt(v[keep] / c2) + state.eps)
            continue
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        w -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return weights
