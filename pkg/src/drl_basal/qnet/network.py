"""Dilated recurrent Q-network in plain numpy.

Layer ``l`` with dilation ``d`` updates its cell from its own state ``d``
steps back::

    c_t = tanh(x_t @ W_in + c_{t-d} @ W_rec + b),   c_{t-d} = 0 for t < d

Layers are stacked (outputs of one layer are the inputs of the next) and the
final layer's state at the last time step is mapped to Q-values by a single
fully-connected layer. Because chains ``t = r, r+d, r+2d, ...`` are
independent, each layer is evaluated block-wise: ``d`` consecutive time
steps are advanced together.

``lstm`` swaps the cell for a dilated LSTM; ``feedforward`` ignores
dilations and runs tanh layers over the flattened window.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import NonFiniteGradient, ShapeMismatch

CELL_TYPES = ("vanilla_rnn", "lstm", "feedforward")
DEFAULT_SCALES = (400.0, 100.0, 10.0, 1.0)


@dataclass(frozen=True)
class QNetConfig:
    input_channels: int = 4
    window: int = 12
    layers: tuple = ((1, 32), (2, 64), (4, 128))
    cell_type: str = "vanilla_rnn"
    output_dim: int = 5
    input_scale: tuple = DEFAULT_SCALES

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(tuple(map(int, l)) for l in self.layers))
        object.__setattr__(self, "input_scale", tuple(map(float, self.input_scale)))
        if self.cell_type not in CELL_TYPES:
            raise ValueError(f"cell_type must be one of {CELL_TYPES}")
        if not self.layers:
            raise ValueError("at least one layer is required")
        dil = [d for d, _ in self.layers]
        if any(d < 1 or d & (d - 1) for d in dil) or any(b <= a for a, b in zip(dil, dil[1:])):
            raise ValueError("dilations must be strictly increasing powers of 2")
        if len(self.input_scale) != self.input_channels:
            raise ValueError("one input scale per channel is required")
        if self.output_dim < 1 or self.window < 1:
            raise ValueError("output_dim and window must be positive")

    def to_dict(self) -> dict:
        return {
            "input_channels": self.input_channels,
            "window": self.window,
            "layers": [list(l) for l in self.layers],
            "cell_type": self.cell_type,
            "output_dim": self.output_dim,
            "input_scale": list(self.input_scale),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QNetConfig":
        return cls(**d)

    def param_shapes(self) -> dict:
        shapes = {}
        n_in = self.input_channels * (self.window if self.cell_type == "feedforward" else 1)
        gate = 4 if self.cell_type == "lstm" else 1
        for i, (_, h) in enumerate(self.layers):
            shapes[f"l{i}.W_in"] = (n_in, gate * h)
            if self.cell_type != "feedforward":
                shapes[f"l{i}.W_rec"] = (h, gate * h)
            shapes[f"l{i}.b"] = (gate * h,)
            n_in = h
        shapes["head.W"] = (n_in, self.output_dim)
        shapes["head.b"] = (self.output_dim,)
        return shapes


@dataclass
class QNetWeights:
    config: QNetConfig
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        shapes = self.config.param_shapes()
        if set(shapes) != set(self.params):
            raise ShapeMismatch(f"parameter names {sorted(self.params)} do not match config")
        for name, shape in shapes.items():
            if self.params[name].shape != shape:
                raise ShapeMismatch(f"{name}: expected {shape}, got {self.params[name].shape}")
        self.params = {k: np.ascontiguousarray(self.params[k], dtype=np.float64) for k in shapes}

    def __getitem__(self, name):
        return self.params[name]

    def items(self):
        return self.params.items()

    def copy(self) -> "QNetWeights":
        return QNetWeights(self.config, {k: v.copy() for k, v in self.params.items()})

    def sq_norm(self) -> float:
        return float(sum(np.dot(v.ravel(), v.ravel()) for v in self.params.values()))

    def equals(self, other: "QNetWeights") -> bool:
        return self.config == other.config and all(
            np.array_equal(v, other.params[k]) for k, v in self.params.items())


def init_weights(config: QNetConfig, seed: int) -> QNetWeights:
    """Seeded uniform(+-1/sqrt(fan_in)); a bias shares the fan-in of its input matrix."""
    rng = np.random.default_rng(seed)
    shapes = config.param_shapes()
    params = {}
    for name, shape in shapes.items():
        matrix = name[:-1] + ("W" if name == "head.b" else "W_in") if name.endswith(".b") else name
        bound = 1.0 / math.sqrt(shapes[matrix][0])
        params[name] = rng.uniform(-bound, bound, size=shape)
    return QNetWeights(config, params)


def zeros_like(weights: QNetWeights) -> dict:
    return {k: np.zeros_like(v) for k, v in weights.items()}


def check_observations(obs, config: QNetConfig) -> np.ndarray:
    """Validate an observation window or batch; returns ``(n, window, channels)`` float64."""
    x = np.asarray(obs, dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    if x.ndim != 3 or x.shape[1:] != (config.window, config.input_channels):
        raise ShapeMismatch(
            f"expected observations of shape (n, {config.window}, {config.input_channels}), "
            f"got {np.shape(obs)}")
    if x.shape[0] == 0:
        raise ShapeMismatch("empty observation batch")
    if not np.all(np.isfinite(x)):
        raise ValueError("observations contain non-finite values")
    return x


def _blocks(window: int, d: int):
    return [(s, min(s + d, window)) for s in range(0, window, d)]


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _rnn_forward(x, w_in, w_rec, b, d):
    bsz, L, _ = x.shape
    hsz = w_rec.shape[0]
    a = x @ w_in + b
    h = np.empty((bsz, L, hsz))
    for s, e in _blocks(L, d):
        if s == 0:
            h[:, s:e] = np.tanh(a[:, s:e])
        else:
            h[:, s:e] = np.tanh(a[:, s:e] + h[:, s - d:e - d] @ w_rec)
    return h, None


def _rnn_backward(x, h, _aux, dh, w_in, w_rec, d):
    L = x.shape[1]
    dh = dh.copy()
    da = np.empty_like(dh)
    dw_rec = np.zeros_like(w_rec)
    for s, e in reversed(_blocks(L, d)):
        dpre = dh[:, s:e] * (1.0 - h[:, s:e] ** 2)
        da[:, s:e] = dpre
        if s > 0:
            hp = h[:, s - d:e - d]
            dh[:, s - d:e - d] += dpre @ w_rec.T
            dw_rec += hp.reshape(-1, hp.shape[-1]).T @ dpre.reshape(-1, dpre.shape[-1])
    n_in = x.shape[-1]
    dw_in = x.reshape(-1, n_in).T @ da.reshape(-1, da.shape[-1])
    db = da.sum(axis=(0, 1))
    dx = da @ w_in.T
    return dx, dw_in, dw_rec, db


def _lstm_forward(x, w_in, w_rec, b, d):
    bsz, L, _ = x.shape
    hsz = w_rec.shape[0]
    a = x @ w_in + b
    h = np.zeros((bsz, L, hsz))
    c = np.zeros((bsz, L, hsz))
    gates = np.empty((bsz, L, 4 * hsz))
    for s, e in _blocks(L, d):
        z = a[:, s:e] if s == 0 else a[:, s:e] + h[:, s - d:e - d] @ w_rec
        i = _sigmoid(z[..., :hsz])
        f = _sigmoid(z[..., hsz:2 * hsz])
        g = np.tanh(z[..., 2 * hsz:3 * hsz])
        o = _sigmoid(z[..., 3 * hsz:])
        c_prev = c[:, s - d:e - d] if s > 0 else 0.0
        c[:, s:e] = f * c_prev + i * g
        h[:, s:e] = o * np.tanh(c[:, s:e])
        gates[:, s:e] = np.concatenate([i, f, g, o], axis=-1)
    return h, (c, gates)


def _lstm_backward(x, h, aux, dh, w_in, w_rec, d):
    c, gates = aux
    L = x.shape[1]
    hsz = w_rec.shape[0]
    dh = dh.copy()
    dc = np.zeros_like(c)
    dz_all = np.empty_like(gates)
    dw_rec = np.zeros_like(w_rec)
    for s, e in reversed(_blocks(L, d)):
        i, f, g, o = (gates[:, s:e, k * hsz:(k + 1) * hsz] for k in range(4))
        tc = np.tanh(c[:, s:e])
        dhb = dh[:, s:e]
        do = dhb * tc
        dcb = dc[:, s:e] + dhb * o * (1.0 - tc**2)
        c_prev = c[:, s - d:e - d] if s > 0 else np.zeros_like(dcb)
        dz = np.concatenate([
            dcb * g * i * (1.0 - i),
            dcb * c_prev * f * (1.0 - f),
            dcb * i * (1.0 - g**2),
            do * o * (1.0 - o),
        ], axis=-1)
        dz_all[:, s:e] = dz
        if s > 0:
            dc[:, s - d:e - d] += dcb * f
            dh[:, s - d:e - d] += dz @ w_rec.T
            hp = h[:, s - d:e - d]
            dw_rec += hp.reshape(-1, hsz).T @ dz.reshape(-1, 4 * hsz)
    n_in = x.shape[-1]
    dw_in = x.reshape(-1, n_in).T @ dz_all.reshape(-1, 4 * hsz)
    db = dz_all.sum(axis=(0, 1))
    dx = dz_all @ w_in.T
    return dx, dw_in, dw_rec, db


_CELLS = {
    "vanilla_rnn": (_rnn_forward, _rnn_backward),
    "lstm": (_lstm_forward, _lstm_backward),
}


def forward_cached(weights: QNetWeights, obs: np.ndarray):
    """Batched forward pass keeping the activations needed by ``backprop``."""
    cfg = weights.config
    x = obs / np.asarray(cfg.input_scale)
    cache = {"inputs": [], "outputs": [], "aux": []}
    if cfg.cell_type == "feedforward":
        z = x.reshape(x.shape[0], -1)
        for i in range(len(cfg.layers)):
            cache["inputs"].append(z)
            z = np.tanh(z @ weights[f"l{i}.W_in"] + weights[f"l{i}.b"])
            cache["outputs"].append(z)
        last = z
    else:
        fwd, _ = _CELLS[cfg.cell_type]
        z = x
        for i, (d, _) in enumerate(cfg.layers):
            cache["inputs"].append(z)
            z, aux = fwd(z, weights[f"l{i}.W_in"], weights[f"l{i}.W_rec"], weights[f"l{i}.b"], d)
            cache["outputs"].append(z)
            cache["aux"].append(aux)
        last = z[:, -1]
    cache["last"] = last
    q = last @ weights["head.W"] + weights["head.b"]
    return q, cache


def forward(weights: QNetWeights, obs) -> np.ndarray:
    """Q-values for one window ``(L, C)`` -> ``(A,)`` or a batch ``(n, L, C)`` -> ``(n, A)``."""
    x = check_observations(obs, weights.config)
    q, _ = forward_cached(weights, x)
    return q[0] if np.ndim(obs) == 2 else q


def backprop(weights: QNetWeights, cache: dict, dq: np.ndarray) -> dict:
    """Parameter gradients given ``dq = dLoss/dQ`` of shape ``(n, A)``."""
    cfg = weights.config
    grads = {"head.W": cache["last"].T @ dq, "head.b": dq.sum(axis=0)}
    dlast = dq @ weights["head.W"].T
    n_layers = len(cfg.layers)
    if cfg.cell_type == "feedforward":
        dz = dlast
        for i in reversed(range(n_layers)):
            out = cache["outputs"][i]
            dpre = dz * (1.0 - out**2)
            grads[f"l{i}.W_in"] = cache["inputs"][i].T @ dpre
            grads[f"l{i}.b"] = dpre.sum(axis=0)
            dz = dpre @ weights[f"l{i}.W_in"].T
        return grads
    _, bwd = _CELLS[cfg.cell_type]
    out = cache["outputs"][-1]
    dh = np.zeros_like(out)
    dh[:, -1] = dlast
    for i in reversed(range(n_layers)):
        d = cfg.layers[i][0]
        dx, dw_in, dw_rec, db = bwd(cache["inputs"][i], cache["outputs"][i], cache["aux"][i], dh,
                                    weights[f"l{i}.W_in"], weights[f"l{i}.W_rec"], d)
        grads[f"l{i}.W_in"], grads[f"l{i}.W_rec"], grads[f"l{i}.b"] = dw_in, dw_rec, db
        dh = dx
    return grads


def loss_and_grad(weights: QNetWeights, obs_batch, actions, td_targets, is_weights=None,
                  l2: float = 0.0, extra_targets=None, extra_coef: float = 0.0):
    """Importance-weighted squared TD loss and its gradient.

    ``loss = sum_i w_i (y_i - Q(o_i, a_i))^2 / n + l2 * ||theta||^2``. When
    ``extra_targets`` is given, ``extra_coef * sum_i w_i (y'_i - Q)^2 / n`` is
    added (the n-step term). Returns ``(loss, grads, q_selected)``.
    """
    x = check_observations(obs_batch, weights.config)
    n = x.shape[0]
    actions = np.asarray(actions, dtype=np.int64)
    y = np.asarray(td_targets, dtype=np.float64)
    w = np.ones(n) if is_weights is None else np.asarray(is_weights, dtype=np.float64)
    if actions.shape != (n,) or y.shape != (n,) or w.shape != (n,):
        raise ShapeMismatch("actions, targets and weights must have one entry per sample")
    if np.any(w < 0):
        raise ValueError("importance weights must be non-negative")
    q, cache = forward_cached(weights, x)
    rows = np.arange(n)
    q_sel = q[rows, actions]
    resid = y - q_sel
    loss = float(np.sum(w * resid**2) / n)
    coef = resid.copy()
    if extra_targets is not None and extra_coef:
        resid_n = np.asarray(extra_targets, dtype=np.float64) - q_sel
        loss += extra_coef * float(np.sum(w * resid_n**2) / n)
        coef += extra_coef * resid_n
    dq = np.zeros_like(q)
    dq[rows, actions] = -2.0 * w * coef / n
    grads = backprop(weights, cache, dq)
    if l2:
        loss += l2 * weights.sq_norm()
        for k, v in weights.items():
            grads[k] += 2.0 * l2 * v
    for k, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient(f"non-finite gradient in {k}")
    return loss, grads, q_sel


def backward(weights: QNetWeights, obs_batch, action_indices, td_targets, is_weights=None,
             l2: float = 0.0) -> dict:
    return loss_and_grad(weights, obs_batch, action_indices, td_targets, is_weights, l2)[1]


def freeze_mask(config: QNetConfig, freeze_lower_layers: int = 0) -> dict:
    """True where a parameter is trainable; the first ``k`` layers are frozen."""
    if not 0 <= freeze_lower_layers <= len(config.layers):
        raise ValueError("freeze_lower_layers out of range")
    mask = {}
    for name, shape in config.param_shapes().items():
        layer = name.split(".")[0]
        frozen = layer.startswith("l") and int(layer[1:]) < freeze_lower_layers
        mask[name] = np.full(shape, not frozen)
    return mask


def copy_weights(src: QNetWeights) -> QNetWeights:
    return src.copy()
