import math

import numpy as np

from mtdswarm.adversary import AttackState
from mtdswarm.config import Rng, ScenarioConfig
from mtdswarm.env import PatrolEnv
from mtdswarm.metrics import (
    EpisodeMetrics, EpisodeTrace, PowerModel, episode_energy, mitigation_rate,
    power, recovery_times,
)
from mtdswarm.mtd import NO_OP

CFG = ScenarioConfig()
PM = PowerModel.from_config(CFG)


def make_trace(disconnected, speeds=None, final_positions=None, dt=1.0,
               costs=None, rewards=None):
    disconnected = np.asarray(disconnected, dtype=bool)
    t, n = disconnected.shape
    if speeds is None:
        speeds = np.full((t, n), 15.0)
    if final_positions is None:
        final_positions = np.tile(np.array(CFG.gcs_position), (n, 1))
    zeros = np.zeros((t, n))
    return EpisodeTrace(
        e=(~disconnected).astype(int), disconnected=disconnected,
        speeds=np.asarray(speeds, dtype=float),
        costs=zeros if costs is None else np.asarray(costs),
        rewards=zeros if rewards is None else np.asarray(rewards),
        deviations=zeros, channel=np.zeros(t, dtype=int),
        leader=np.ones(t, dtype=int), attack_effective=np.zeros(t, dtype=int),
        final_positions=np.asarray(final_positions, dtype=float), dt=dt)


def test_power_reference_values():
    assert abs(power(0.0, PM) - 139.17) < 0.01
    assert abs(power(15.0, PM) - 239.07) < 0.01
    assert abs(power(20.0, PM) - 375.97) < 0.01


def test_power_monotone_with_hover_minimum():
    values = [power(v, PM) for v in np.linspace(0, 25, 60)]
    assert all(b > a for a, b in zip(values, values[1:]))
    assert min(values) == power(0.0, PM)


def test_hover_energy_at_gcs():
    trace = make_trace(np.zeros((10, 1), dtype=bool),
                       speeds=np.zeros((10, 1)))
    # 10 s of hover, no return leg: 10 x power(0).
    assert abs(episode_energy(trace, PM, CFG) - 1391.7) < 0.2


def test_nominal_patrol_energy_closed_form():
    ring = np.array([[500 + 300 * math.cos(2 * math.pi * i / 5),
                      500 + 300 * math.sin(2 * math.pi * i / 5),
                      100.0] for i in range(5)])
    trace = make_trace(np.zeros((50, 5), dtype=bool), final_positions=ring)
    return_dist = math.sqrt(300 ** 2 + 100 ** 2)
    want = 5 * 50 * power(15.0, PM) + 5 * power(20.0, PM) * return_dist / 20.0
    assert math.isclose(episode_energy(trace, PM, CFG), want, rel_tol=1e-12)


def test_zero_length_trace_energy_is_return_legs_only():
    trace = make_trace(np.zeros((0, 3), dtype=bool),
                       speeds=np.zeros((0, 3)),
                       final_positions=np.tile(np.array(CFG.gcs_position), (3, 1)))
    assert episode_energy(trace, PM, CFG) == 0.0
    away = np.array(CFG.gcs_position) + np.array([20.0, 0.0, 0.0])
    trace = make_trace(np.zeros((0, 1), dtype=bool), speeds=np.zeros((0, 1)),
                       final_positions=away[None, :])
    assert math.isclose(episode_energy(trace, PM, CFG), power(20.0, PM))


def test_mitigation_rate_values():
    assert mitigation_rate(make_trace(np.zeros((50, 5), dtype=bool))) == 1.0
    one_down = np.zeros((50, 5), dtype=bool)
    one_down[:, 2] = True
    assert mitigation_rate(make_trace(one_down)) == 0.8


def test_recovery_time_intervals():
    assert recovery_times(make_trace(np.zeros((10, 2), dtype=bool))) == []
    down = np.zeros((10, 2), dtype=bool)
    down[3:6, 0] = True
    assert recovery_times(make_trace(down)) == [3.0]
    down[8:10, 1] = True
    times = recovery_times(make_trace(down))
    assert times == [3.0, 2.0]
    assert np.mean(times) == 2.5


def test_no_defense_fixed_node_mitigation_replay():
    # Replay oracle: push the windowed e-bit sequence through an independent
    # heartbeat simulation and compare with the environment's own accounting.
    channel = int(Rng(31).split("env").gen.integers(0, CFG.n_channels))
    attack = AttackState(kind="node", strategy="fixed", target=4, f_atk=channel)
    env = PatrolEnv(CFG, "fixed", "node")
    env.reset(31, attack=attack)
    done = False
    while not done:
        _, _, done, _ = env.step([NO_OP] * 5)
    trace = env.episode_trace()

    e_victim = [0 if (t % 20) < 15 else 1 for t in range(50)]
    window = []
    expect_disc = []
    for bit in e_victim:
        window.append(bit)
        expect_disc.append(np.mean(window[-3:]) < 0.5)
    assert trace.disconnected[:, 3].tolist() == expect_disc
    want = 1.0 - sum(expect_disc) / (50 * 5)
    assert math.isclose(mitigation_rate(trace), want)
    assert math.isclose(mitigation_rate(trace), 0.84)
    # Outage intervals implied by the same replay: 16, 15 and 9 steps.
    assert recovery_times(trace) == [16.0, 15.0, 9.0]


def test_noop_policy_costs_zero():
    env = PatrolEnv(CFG, "random", "node")
    env.reset(5)
    done = False
    while not done:
        _, _, done, _ = env.step([NO_OP] * 5)
    m = EpisodeMetrics.from_trace(env.episode_trace(), PM, CFG)
    assert m.cumulative_cost == 0.0


def test_all_vpat_energy_identity():
    env = PatrolEnv(CFG, None)
    env.reset(8)
    done = False
    while not done:
        _, _, done, _ = env.step([NO_OP] * 5)
    trace = env.episode_trace()
    assert np.all(trace.speeds == CFG.v_pat)
    gcs = np.array(CFG.gcs_position)
    legs = sum(power(CFG.v_max, PM) * np.linalg.norm(p - gcs) / CFG.v_max
               for p in trace.final_positions)
    want = 5 * 50 * power(CFG.v_pat, PM) * CFG.dt + legs
    assert math.isclose(episode_energy(trace, PM, CFG), want, rel_tol=1e-12)


def test_metrics_from_trace_aggregates():
    down = np.zeros((4, 2), dtype=bool)
    down[1, 0] = True
    rewards = np.ones((4, 2))
    trace = make_trace(down, rewards=rewards,
                       costs=np.ones((4, 2)))
    m = EpisodeMetrics.from_trace(trace, PM, CFG)
    assert m.mitigation_rate == 1.0 - 1 / 8
    assert m.recovery_times == [1.0]
    assert m.cumulative_cost == 8.0
    assert np.array_equal(m.agent_returns, [4.0, 4.0])
    assert m.mean_return == 4.0


def test_no_disruption_reports_nan_mean_recovery():
    m = EpisodeMetrics.from_trace(make_trace(np.zeros((5, 2), dtype=bool)),
                                  PM, CFG)
    assert m.recovery_times == []
    assert math.isnan(m.mean_recovery)
