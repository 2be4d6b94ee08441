import csv

import numpy as np
import pytest

from drl_basal.qnet import QNetConfig
from drl_basal.rl import GENERALIZED_POOL, POLICY_GENERATED
from drl_basal.training import (
    PolicyCheckpoint,
    TrainConfig,
    Trainer,
    start_generalized,
    start_personalized,
    train_generalized,
)
from drl_basal.training.config import derive_seed


def small_net(mode="SH"):
    return QNetConfig(layers=((1, 6), (2, 6)), output_dim=5 if mode == "SH" else 6)


@pytest.fixture(scope="module")
def general_ckpt(adult):
    cfg = TrainConfig(generalized_days=1, personalized_days=1, test_days=1, explore_steps=100,
                      sync_generalized=50, sync_personalized=20, buffer_size=400, log_every=48)
    return train_generalized(adult, "DH", cfg, small_net("DH"))


def test_no_learning_during_exploration(adult, tiny_config):
    tr = start_generalized(adult, "SH", tiny_config, small_net())
    w0 = tr.theta1.copy()
    tr.run(tiny_config.explore_steps)
    assert tr.theta1.equals(w0)
    assert len(tr.memory) == tiny_config.explore_steps
    tr.step()
    assert not tr.theta1.equals(w0)


def test_target_network_syncs_on_period(adult, tiny_config):
    tr = start_generalized(adult, "SH", tiny_config, small_net())
    prev = tr.theta2.copy()
    for t in range(1, 251):
        tr.step()
        changed = not tr.theta2.equals(prev)
        assert changed == (t % 50 == 0 and t > tiny_config.explore_steps), t
        if t % 50 == 0:
            assert tr.theta2.equals(tr.theta1)
        prev = tr.theta2.copy()


def test_epsilon_schedule(adult, tiny_config):
    tr = start_generalized(adult, "SH", tiny_config, small_net())
    assert tr.epsilon(1) == tr.epsilon(100) == 1.0
    assert tr.epsilon(101) == pytest.approx(0.5 - 0.49 * 101 / 288)
    assert tr.epsilon(10_000) == pytest.approx(0.01)


def test_generalized_run_is_deterministic(adult, tiny_config):
    a = start_generalized(adult, "SH", tiny_config, small_net()).run(300)
    b = start_generalized(adult, "SH", tiny_config, small_net()).run(300)
    assert a.theta1.equals(b.theta1)
    assert a.policy_checkpoint().dumps() == b.policy_checkpoint().dumps()


def test_step_budget(adult, tiny_config):
    tr = start_generalized(adult, "SH", tiny_config, small_net()).run()
    assert tr.step_count == 2 * 288
    with pytest.raises(RuntimeError):
        tr.step()


def test_personalized_starts_from_generalized(general_ckpt, adult01):
    tr = start_personalized(general_ckpt, adult01)
    assert tr.theta1.equals(general_ckpt.theta1)
    assert len(tr.memory) == len(general_ckpt.memory)
    assert np.all(tr.memory.source[:tr.memory.size] == GENERALIZED_POOL)
    tr.step()
    assert tr.memory.source[len(general_ckpt.memory) % tr.memory.capacity] == POLICY_GENERATED
    assert tr.memory.episode[tr.memory.size - 1] > general_ckpt.memory.episode.max()


def test_personalized_gate_invariants(general_ckpt, adult01):
    tr = start_personalized(general_ckpt, adult01)
    glucagon_days = {}
    for _ in range(288):
        cgm = tr.env.cgm
        info = tr.step()
        if cgm < 80:
            assert info["basal_Uph"] == 0.0
        if cgm > 160:
            assert info["glucagon_mg"] == 0.0
        day = (info["t_min"] - 5) // 1440
        glucagon_days[day] = glucagon_days.get(day, 0.0) + info["glucagon_mg"]
    assert max(glucagon_days.values()) <= 1.0 + 1e-12


def test_cohort_mismatch_rejected(general_ckpt):
    from drl_basal.sim import make_subject
    with pytest.raises(ValueError):
        start_personalized(general_ckpt, make_subject("adolescent", 1))


def test_frozen_layers_do_not_move(general_ckpt, adult01):
    cfg = TrainConfig.from_dict({**general_ckpt.config.to_dict(), "freeze_lower_layers": 1})
    tr = start_personalized(general_ckpt, adult01, cfg).run(60)
    for k, v in general_ckpt.theta1.items():
        if k.startswith("l0."):
            np.testing.assert_array_equal(tr.theta1[k], v)
    assert not np.array_equal(tr.theta1["head.W"], general_ckpt.theta1["head.W"])


def test_resume_matches_uninterrupted(general_ckpt, adult01, tmp_path):
    full = start_personalized(general_ckpt, adult01)
    ref = [full.step() for _ in range(150)]
    part = start_personalized(general_ckpt, adult01)
    for _ in range(50):
        part.step()
    part.save(tmp_path / "t.state")
    resumed = Trainer.load(tmp_path / "t.state")
    for k in range(50, 150):
        info = resumed.step()
        assert info == ref[k]
    assert resumed.theta1.equals(full.theta1)
    np.testing.assert_array_equal(resumed.memory.priority, full.memory.priority)


def test_progress_csv(adult, tiny_config, tmp_path):
    tr = start_generalized(adult, "SH", tiny_config, small_net()).run(200)
    tr.write_progress(tmp_path / "p.csv")
    rows = list(csv.DictReader(open(tmp_path / "p.csv")))
    assert [int(r["step"]) for r in rows] == [48, 96, 144, 192]
    assert rows[0]["loss"] == "" and float(rows[-1]["loss"]) >= 0
    assert all(0 <= float(r["running_tir"]) <= 100 for r in rows)


def test_checkpoint_round_trip(general_ckpt, tmp_path):
    general_ckpt.save(tmp_path / "a.ckpt")
    back = PolicyCheckpoint.load(tmp_path / "a.ckpt")
    back.save(tmp_path / "b.ckpt")
    assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()


def test_derive_seed_is_stable():
    assert derive_seed(0, "a", 1) == derive_seed(0, "a", 1)
    assert derive_seed(0, "a", 1) != derive_seed(0, "a", 2)
    assert derive_seed(0, "a") != derive_seed(1, "a")


def test_config_rejects_unknown_keys():
    with pytest.raises(ValueError):
        TrainConfig.from_dict({"gamma": 0.9, "gama": 0.8})
    with pytest.raises(ValueError):
        TrainConfig(gamma=1.5)
