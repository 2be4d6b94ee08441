import numpy as np
import pytest

from drl_basal import archive
from drl_basal.exceptions import CheckpointError, NonFiniteGradient, ShapeMismatch
from drl_basal.qnet import (
    AdamState,
    QNetConfig,
    adam_step,
    forward,
    freeze_mask,
    init_weights,
    load_weights,
    loss_and_grad,
    save_weights,
)

SMALL = dict(layers=((1, 5), (2, 4), (4, 3)), window=8)


def random_obs(rng, n, window=12):
    obs = np.empty((n, window, 4))
    obs[..., 0] = rng.uniform(40, 350, (n, window))
    obs[..., 1] = rng.choice([0, 0, 0, 50], (n, window))
    obs[..., 2] = rng.uniform(0, 3, (n, window))
    obs[..., 3] = rng.choice([0, 0.02], (n, window))
    return obs


def fd_check(weights, obs, actions, y, w, l2, coords, h=1e-5):
    _, grads, _ = loss_and_grad(weights, obs, actions, y, w, l2)
    worst = 0.0
    for name, idx in coords:
        p = weights.params[name]
        old = p[idx]
        p[idx] = old + h
        lp = loss_and_grad(weights, obs, actions, y, w, l2)[0]
        p[idx] = old - h
        lm = loss_and_grad(weights, obs, actions, y, w, l2)[0]
        p[idx] = old
        fd = (lp - lm) / (2 * h)
        an = grads[name][idx]
        worst = max(worst, abs(fd - an) / max(abs(fd), abs(an), 1e-7))
    return worst


@pytest.mark.parametrize("cell", ["vanilla_rnn", "lstm", "feedforward"])
def test_gradients_match_finite_differences_on_every_parameter(cell, rng):
    cfg = QNetConfig(cell_type=cell, **SMALL)
    wts = init_weights(cfg, 3)
    obs = random_obs(rng, 3, cfg.window)
    coords = [(k, i) for k, v in wts.items() for i in np.ndindex(v.shape)]
    err = fd_check(wts, obs, rng.integers(0, 5, 3), rng.normal(size=3), rng.uniform(0.2, 1, 3),
                   1e-3, coords)
    assert err < 1e-5


def test_forward_shapes(rng):
    cfg = QNetConfig(output_dim=6)
    w = init_weights(cfg, 0)
    assert forward(w, random_obs(rng, 1)[0]).shape == (6,)
    assert forward(w, random_obs(rng, 7)).shape == (7, 6)
    with pytest.raises(ShapeMismatch):
        forward(w, np.zeros((3, 10, 4)))


def test_dilation_reaches_only_its_chain():
    """With a single layer of dilation 4, the last output depends only on t = 11, 7, 3."""
    cfg = QNetConfig(layers=((4, 6),))
    w = init_weights(cfg, 1)
    base = np.full((1, 12, 4), 1.0)
    q0 = forward(w, base)
    for t in range(12):
        x = base.copy()
        x[0, t, 0] += 50.0
        changed = not np.allclose(forward(w, x), q0)
        assert changed == (t % 4 == 3)


def test_stacked_receptive_field_covers_window():
    w = init_weights(QNetConfig(), 2)
    base = np.full((1, 12, 4), 1.0)
    q0 = forward(w, base)
    for t in range(12):
        x = base.copy()
        x[0, t, 0] += 50.0
        assert not np.allclose(forward(w, x), q0)


def test_init_bounds_and_seeding():
    cfg = QNetConfig()
    a, b = init_weights(cfg, 5), init_weights(cfg, 5)
    assert a.equals(b) and not a.equals(init_weights(cfg, 6))
    for name, v in a.items():
        rows = cfg.param_shapes()[name.rsplit(".", 1)[0] + (".W" if name.startswith("head") else ".W_in")][0]
        assert np.abs(v).max() <= 1 / np.sqrt(rows)


def test_loss_definition(rng):
    w = init_weights(QNetConfig(), 0)
    obs = random_obs(rng, 4)
    a = np.array([0, 1, 2, 3])
    y = rng.normal(size=4)
    iw = np.array([1.0, 0.5, 0.25, 2.0])
    q = forward(w, obs)[np.arange(4), a]
    loss, _, q_sel = loss_and_grad(w, obs, a, y, iw, l2=1e-3)
    np.testing.assert_allclose(q_sel, q)
    assert loss == pytest.approx(np.sum(iw * (y - q) ** 2) / 4 + 1e-3 * w.sq_norm(), rel=1e-12)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_gradient_raises(rng):
    w = init_weights(QNetConfig(), 0)
    with pytest.raises(NonFiniteGradient):
        loss_and_grad(w, random_obs(rng, 2), [0, 1], [np.inf, 0.0])


def test_adam_matches_scalar_reference():
    """Element-wise Adam against a hand-written scalar loop."""
    cfg = QNetConfig(layers=((1, 2),), window=2, output_dim=2)
    w = init_weights(cfg, 0)
    start = {k: v.copy() for k, v in w.items()}
    state = AdamState.for_weights(w, lr=1e-2)
    rng = np.random.default_rng(0)
    grads_seq = [{k: rng.normal(size=v.shape) for k, v in w.items()} for _ in range(5)]
    for g in grads_seq:
        adam_step(w, g, state)
    for name in w.params:
        for idx in np.ndindex(start[name].shape):
            th, m, v = start[name][idx], 0.0, 0.0
            for t, g in enumerate(grads_seq, 1):
                gi = g[name][idx]
                m = 0.9 * m + 0.1 * gi
                v = 0.999 * v + 0.001 * gi * gi
                th -= 1e-2 * (m / (1 - 0.9**t)) / ((v / (1 - 0.999**t)) ** 0.5 + 1e-8)
            assert w.params[name][idx] == pytest.approx(th, rel=1e-12, abs=1e-15)


def test_freeze_mask_leaves_lower_layers_untouched(rng):
    cfg = QNetConfig()
    w = init_weights(cfg, 0)
    before = w.copy()
    mask = freeze_mask(cfg, 2)
    state = AdamState.for_weights(w, lr=1e-2)
    obs = random_obs(rng, 8)
    for _ in range(3):
        _, g, _ = loss_and_grad(w, obs, rng.integers(0, 5, 8), rng.normal(size=8))
        adam_step(w, g, state, mask)
    for name in w.params:
        same = np.array_equal(w[name], before[name])
        assert same == name.startswith(("l0.", "l1."))
    with pytest.raises(ValueError):
        freeze_mask(cfg, 4)


def test_checkpoint_round_trip_is_bit_exact(tmp_path):
    w = init_weights(QNetConfig(cell_type="lstm"), 9)
    p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_weights(p1, w)
    back = load_weights(p1)
    assert back.equals(w) and back.config == w.config
    save_weights(p2, back)
    assert p1.read_bytes() == p2.read_bytes()


def test_archive_rejects_corruption(tmp_path):
    blob = archive.dumps({"kind": "x"}, {"a": np.arange(3.0)})
    with pytest.raises(CheckpointError):
        archive.loads(b"NOTMAGIC" + blob[8:])
    with pytest.raises(CheckpointError):
        archive.loads(blob[:-4])
    meta, arrays = archive.loads(blob)
    assert meta == {"kind": "x"} and arrays["a"].tolist() == [0, 1, 2]
    p = tmp_path / "w.ckpt"
    archive.save(p, {"kind": "other"}, {})
    with pytest.raises(CheckpointError):
        load_weights(p)


def test_config_validation():
    with pytest.raises(ValueError):
        QNetConfig(layers=((1, 8), (3, 8)))
    with pytest.raises(ValueError):
        QNetConfig(cell_type="gru")
    assert QNetConfig.from_dict(QNetConfig().to_dict()) == QNetConfig()
