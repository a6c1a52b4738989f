import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opptrans.bandit import IDLE, TX
from opptrans.blackspot import BlackSpotEllipse, BlackSpotMap
from opptrans.schemes import (SCHEME_NAMES, BsCbAgent, CatAgent,
                              DecisionContext, PeriodicAgent, QTable,
                              RlCatAgent, SchemeConfig, cat_probability,
                              efficiency_indicators, idle_reward, make_agent,
                              q_update, tx_reward)

CFG = SchemeConfig()


def _obs(now=0.0, delta_t=30.0, s_tilde=20.0, sinr=5.0,
         position=(0.0, 0.0), buffer_bytes=150000):
    return DecisionContext(now=now, delta_t=delta_t,
                           buffer_bytes=buffer_bytes, s_tilde=s_tilde,
                           sinr=sinr, position=position)


class TestCatProbability:
    def test_below_min_age_is_zero(self):
        assert cat_probability(30.0, 9.99, CFG) == 0.0

    def test_past_deadline_is_one(self):
        assert cat_probability(-50.0, 120.01, CFG) == 1.0

    def test_linear_interior(self):
        # sinr 10 in [-10, 30] -> (10+10)/40 = 0.5
        assert cat_probability(10.0, 60.0, CFG) == pytest.approx(0.5,
                                                                 abs=1e-12)

    def test_metric_clamped_to_bounds(self):
        assert cat_probability(-100.0, 60.0, CFG) == 0.0
        assert cat_probability(100.0, 60.0, CFG) == 1.0

    def test_exponent_sharpens(self):
        cfg = SchemeConfig(cat_exponent=2.0)
        assert cat_probability(10.0, 60.0, cfg) == pytest.approx(0.25,
                                                                 abs=1e-12)

    def test_prediction_bounds_override(self):
        # predicted-rate variant uses [0, s_max]
        p = cat_probability(20.0, 60.0, CFG, phi_min=0.0, phi_max=40.0)
        assert p == pytest.approx(0.5, abs=1e-12)

    def test_non_finite_metric(self):
        with pytest.raises(ValueError, match="non-finite"):
            cat_probability(float("nan"), 60.0, CFG)

    @given(phi=st.floats(-200, 200), dt=st.floats(0, 200))
    @settings(max_examples=100, deadline=None)
    def test_always_a_probability(self, phi, dt):
        p = cat_probability(phi, dt, CFG)
        assert 0.0 <= p <= 1.0


class TestRewards:
    def test_tx_reward_hand_example(self):
        cfg = SchemeConfig(w=0.9, s_star=15.0, s_max=40.0, delta_t_max=120.0)
        assert tx_reward(20.0, 60.0, cfg) == pytest.approx(0.1625, abs=1e-12)

    def test_tx_reward_at_target_and_zero_age(self):
        assert tx_reward(CFG.s_star, 0.0, CFG) == pytest.approx(0.0,
                                                                abs=1e-12)

    def test_idle_reward(self):
        assert idle_reward(119.9, CFG) == 0.0
        assert idle_reward(120.0, CFG) == -1.0
        assert idle_reward(500.0, CFG) == -1.0

    def test_q_update_closed_form(self):
        # n identical rewards r from q0: q_n = (1-a)^n q0 + (1-(1-a)^n) r
        q = 5.0
        for n in range(1, 30):
            q = q_update(q, 2.0, 0.1)
            expect = 0.9 ** n * 5.0 + (1 - 0.9 ** n) * 2.0
            assert q == pytest.approx(expect, abs=1e-12)

    def test_q_update_invalid_rate(self):
        with pytest.raises(ValueError):
            q_update(0.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            q_update(0.0, 1.0, 1.5)

    def test_efficiency_hand_example(self):
        cfg = SchemeConfig(s_star=15.0, delta_t_max=120.0)
        e_s, e_aoi = efficiency_indicators(10.0, 30.0, cfg)
        assert e_s == pytest.approx(2.0 / 3.0, abs=1e-9)
        assert e_aoi == pytest.approx(0.75, abs=1e-9)


class TestConfigValidation:
    def test_w_out_of_range(self):
        with pytest.raises(ValueError):
            SchemeConfig(w=1.5)

    def test_age_bounds_ordering(self):
        with pytest.raises(ValueError):
            SchemeConfig(delta_t_min=120.0, delta_t_max=120.0)

    def test_phi_bounds_ordering(self):
        with pytest.raises(ValueError):
            SchemeConfig(phi_min=30.0, phi_max=30.0)


class TestPeriodicAgent:
    def test_fires_every_interval(self):
        agent = PeriodicAgent(SchemeConfig(periodic_interval=10.0))
        agent.start_epoch(0.0)
        rng = np.random.default_rng(0)
        tx_times = []
        for t in range(100):
            obs = _obs(now=float(t), delta_t=float(t) - (tx_times[-1]
                       if tx_times else -1.0))
            if agent.decide(obs, rng) == TX:
                agent.learn(obs, TX, 10.0)
                tx_times.append(float(t))
            else:
                agent.learn(obs, IDLE, None)
        assert tx_times == [float(t) for t in range(9, 100, 10)]


class TestCatAgent:
    def test_sinr_variant_threshold_behavior(self):
        agent = CatAgent(CFG, use_prediction=False)
        rng = np.random.default_rng(1)
        n = 4000
        # sinr 10 -> p=0.5 at interior age
        hits = sum(agent.decide(_obs(sinr=10.0, delta_t=60.0), rng) == TX
                   for _ in range(n))
        assert abs(hits / n - 0.5) < 0.03

    def test_prediction_variant_uses_rate_bounds(self):
        agent = CatAgent(CFG, use_prediction=True)
        rng = np.random.default_rng(2)
        # predicted rate at s_max transmits with certainty in the age window
        assert all(agent.decide(_obs(s_tilde=40.0, sinr=-10.0,
                                     delta_t=60.0), rng) == TX
                   for _ in range(50))
        # predicted rate 0 never transmits before the deadline
        assert all(agent.decide(_obs(s_tilde=0.0, sinr=30.0,
                                     delta_t=60.0), rng) == IDLE
                   for _ in range(50))

    def test_young_buffer_never_transmits(self):
        agent = CatAgent(CFG)
        rng = np.random.default_rng(3)
        assert all(agent.decide(_obs(sinr=30.0, delta_t=5.0), rng) == IDLE
                   for _ in range(50))


class TestQTable:
    def test_bin_clamping(self):
        table = QTable(CFG)
        assert table.bin_index(-5.0, -1.0) == (0, 0)
        assert table.bin_index(1000.0, 1000.0) == (CFG.q_bins_rate - 1,
                                                   CFG.q_bins_age - 1)

    def test_tie_resolves_to_idle(self):
        assert QTable(CFG).best_action(20.0, 30.0) == IDLE

    def test_learn_touches_single_cell(self):
        table = QTable(CFG)
        table.learn(20.0, 30.0, TX, 1.0, 0.1)
        assert np.count_nonzero(table.q) == 1
        i, j = table.bin_index(20.0, 30.0)
        assert table.q[i, j, 1] == pytest.approx(0.1)


class TestRlCatAgent:
    def test_deadline_forces_tx(self):
        agent = RlCatAgent(CFG)
        rng = np.random.default_rng(4)
        assert agent.decide(_obs(delta_t=120.0), rng) == TX

    def test_greedy_after_training(self):
        agent = RlCatAgent(CFG, training=False)
        agent.qtable.q[:, :, 1] = 1.0      # TX dominant everywhere
        rng = np.random.default_rng(5)
        assert all(agent.decide(_obs(delta_t=30.0), rng) == TX
                   for _ in range(50))

    def test_learning_disabled_when_frozen(self):
        agent = RlCatAgent(CFG, training=False)
        agent.learn(_obs(), TX, 20.0)
        assert np.count_nonzero(agent.qtable.q) == 0

    def test_reward_routing(self):
        agent = RlCatAgent(CFG)
        obs = _obs(delta_t=60.0, s_tilde=20.0)
        agent.learn(obs, TX, 20.0)
        i, j = agent.qtable.bin_index(20.0, 60.0)
        assert agent.qtable.q[i, j, 1] == pytest.approx(
            0.1 * tx_reward(20.0, 60.0, CFG), abs=1e-12)


class TestBsCbAgent:
    def test_deadline_outranks_black_spot(self):
        spot = BlackSpotMap(ellipses=(BlackSpotEllipse(
            centroid=(0.0, 0.0), a=1e6, b=1e6, alpha=0.0),))
        agent = BsCbAgent(CFG, blackspot_map=spot)
        rng = np.random.default_rng(6)
        assert agent.decide(_obs(delta_t=120.0), rng) == TX

    def test_black_spot_suppresses_tx_and_update(self):
        spot = BlackSpotMap(ellipses=(BlackSpotEllipse(
            centroid=(0.0, 0.0), a=1e6, b=1e6, alpha=0.0),))
        agent = BsCbAgent(CFG, blackspot_map=spot)
        # force the bandit toward TX so the gate is what flips the decision
        agent.bandit.arms[TX].theta_hat = np.array([100.0, 100.0])
        rng = np.random.default_rng(7)
        obs = _obs(delta_t=60.0, s_tilde=30.0)
        assert agent.decide(obs, rng) == IDLE
        before = agent.bandit.arms[IDLE].A.copy()
        agent.learn(obs, IDLE, None)
        assert np.array_equal(agent.bandit.arms[IDLE].A, before)

    def test_context_normalization(self):
        agent = BsCbAgent(CFG)
        c = agent.context_tuple(_obs(s_tilde=CFG.s_star,
                                     delta_t=CFG.delta_t_max / 2))
        assert c == pytest.approx([0.0, 0.5], abs=1e-12)

    def test_learning_updates_chosen_arm(self):
        agent = BsCbAgent(CFG)
        obs = _obs(delta_t=60.0, s_tilde=20.0)
        agent.learn(obs, TX, 22.0)
        assert not np.array_equal(agent.bandit.arms[TX].A, np.eye(2))
        assert np.array_equal(agent.bandit.arms[IDLE].A, np.eye(2))

    def test_frozen_agent_never_updates(self):
        agent = BsCbAgent(CFG, training=False)
        agent.learn(_obs(), TX, 22.0)
        assert np.array_equal(agent.bandit.arms[TX].A, np.eye(2))

    def test_reward_is_linear_in_context(self):
        # the bandit can represent tx_reward exactly: theta = (w, 1-w)
        agent = BsCbAgent(CFG)
        theta = np.array([CFG.w, 1.0 - CFG.w])
        rng = np.random.default_rng(8)
        for _ in range(100):
            obs = _obs(delta_t=float(rng.uniform(0, 119)),
                       s_tilde=float(rng.uniform(0, 40)))
            c = agent.context_tuple(obs)
            assert theta @ c == pytest.approx(
                tx_reward(obs.s_tilde, obs.delta_t, CFG), abs=1e-12)


class TestFactory:
    def test_all_names(self):
        for name in SCHEME_NAMES:
            agent = make_agent(name, CFG)
            assert agent.name == name

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="unknown scheme"):
            make_agent("carrier-pigeon", CFG)
