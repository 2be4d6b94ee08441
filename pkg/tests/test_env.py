import numpy as np
import pytest

from drl_basal.exceptions import InsufficientHistory
from drl_basal.sim import GlucoseEnv, ObservationHistory, StepRecord, generate_scenario, make_observation
from drl_basal.therapy import ActionSpace, SafetyConstraints


@pytest.fixture
def env(adult):
    return GlucoseEnv(adult, generate_scenario(adult, 2, seed=21), ActionSpace("DH"))


def test_reset_pads_window_with_steady_state(env, adult):
    obs = env.reset()
    assert obs.shape == (12, 4)
    assert np.allclose(obs[:, 0], adult.fasting_setpoint)
    assert np.allclose(obs[:, 2], adult.basal_rate * 5 / 60)
    assert np.all(obs[:, [1, 3]] == 0)


def test_step_contract(env, adult):
    obs = env.reset()
    obs2, r, done, info = env.step(2)
    assert obs2.shape == (12, 4)
    np.testing.assert_array_equal(obs2[:-1], obs[1:])
    assert obs2[-1, 0] == info["cgm"]
    assert info["t_min"] == 5 and env.t == 5
    assert info["basal_Uph"] == pytest.approx(adult.basal_rate)
    assert isinstance(done, bool) and -1 <= r <= 1


def test_meal_bolus_and_carb_channels(env, adult):
    env.reset()
    first = env.scenario.meals[0]
    infos = [env.step(2)[3] for _ in range(first.time // 5 + 1)]
    meal = infos[first.time // 5]
    assert meal["bolus_U"] > 0
    obs = env.observation()
    assert obs[-1, 1] == pytest.approx(first.announced_carbs)
    assert obs[-1, 2] == pytest.approx(meal["bolus_U"] + adult.basal_rate * 5 / 60)
    assert sum(i["bolus_U"] for i in infos[:-1]) == 0


def test_glucagon_channel_in_milligrams(env, adult):
    env.reset()
    _, _, _, info = env.step(5)
    assert env.observation()[-1, 3] == pytest.approx(0.3 * adult.body_weight / 1000)
    assert info["action"] == 5


def test_gate_reports_executed_action(adult):
    env = GlucoseEnv(adult, generate_scenario(adult, 1, seed=2), ActionSpace("DH"),
                     constraints=SafetyConstraints(glucagon_suspend_above=100.0,
                                                   insulin_suspend_below=90.0))
    env.reset()
    _, _, _, info = env.step(5)
    assert info["proposed_action"] == 5
    assert info["action"] == 0 and info["glucagon_mg"] == 0.0


def test_reset_keeps_clock_and_counts_episodes(env):
    env.reset()
    for _ in range(10):
        env.step(2)
    env.reset()
    assert env.t == 50 and env.episode == 1


def test_state_snapshot_restores_exactly(env):
    env.reset()
    for a in (2, 4, 0, 5, 1):
        env.step(a)
    snap = env.get_state()
    a = [env.step(k % 6) for k in range(30)]
    env.set_state(snap)
    b = [env.step(k % 6) for k in range(30)]
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x[0], y[0])
        assert x[1:] == y[1:]


def test_step_doses_enforces_cap(env, adult):
    env.reset()
    delivered = sum(env.step_doses(0.0, 0.4)[3]["glucagon_mg"] for _ in range(5))
    assert delivered == pytest.approx(0.8)


def test_observation_history():
    h = ObservationHistory(3)
    with pytest.raises(InsufficientHistory):
        make_observation(h, 3)
    for i in range(5):
        h.append(StepRecord(i, 0, 0, 0))
    assert make_observation(h, 3)[:, 0].tolist() == [2, 3, 4]
