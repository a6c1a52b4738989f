"""The five transmission schemes as interchangeable per-second agents.

Each agent observes the current context, holds its learning state, and
decides IDLE vs TX for the whole buffered payload.  The simulation engine
owns the buffer and the virtual channel; agents only decide and learn.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bandit as lin
from .bandit import IDLE, TX
from .blackspot import in_any_black_spot


@dataclass
class SchemeConfig:
    delta_t_max: float = 120.0          # s, AoI deadline
    w: float = 0.9                      # rate-vs-AoI trade-off factor
    omega_punishment: float = -1.0      # deadline violation reward
    delta: float = 0.1                  # bandit confidence parameter
    periodic_interval: float = 10.0     # s
    delta_t_min: float = 10.0           # s, probabilistic scheme lower bound
    cat_exponent: float = 1.0
    phi_min: float = -10.0              # SINR metric bounds (dB) for CAT
    phi_max: float = 30.0
    s_star: float = 15.0                # MBit/s, target data rate
    s_max: float = 40.0                 # MBit/s, empirical maximum
    q_learning_rate: float = 0.1
    q_epsilon: float = 0.1              # epsilon-greedy rate while training
    q_bins_rate: int = 20
    q_bins_age: int = 12

    def __post_init__(self):
        if not 0.0 <= self.w <= 1.0:
            raise ValueError("w must be in [0, 1]")
        if self.delta_t_min >= self.delta_t_max:
            raise ValueError("delta_t_min must be below delta_t_max")
        if self.phi_min >= self.phi_max:
            raise ValueError("phi_min must be below phi_max")


@dataclass(frozen=True)
class DecisionContext:
    """What an agent sees at one decision instant."""

    now: float
    delta_t: float          # age of the oldest buffered packet, s
    buffer_bytes: int
    s_tilde: float          # predicted data rate, MBit/s
    sinr: float             # dB
    position: tuple         # (x, y) meters


# -- formula primitives ------------------------------------------------------

def cat_probability(phi, delta_t, config, phi_min=None, phi_max=None):
    """Transmission probability of the probabilistic schemes."""
    if not math.isfinite(phi):
        raise ValueError("non-finite metric value")
    lo = config.phi_min if phi_min is None else phi_min
    hi = config.phi_max if phi_max is None else phi_max
    if delta_t < config.delta_t_min:
        return 0.0
    if delta_t > config.delta_t_max:
        return 1.0
    clamped = min(max(phi, lo), hi)
    return ((clamped - lo) / (hi - lo)) ** config.cat_exponent


def q_update(q, reward, alpha_lr):
    """Discount-free Q-value update: exponential smoothing of rewards."""
    if not 0.0 < alpha_lr <= 1.0:
        raise ValueError("learning rate must be in (0, 1]")
    return (1.0 - alpha_lr) * q + alpha_lr * reward


def tx_reward(s, delta_t, config):
    """Reward of an executed transmission at achieved/predicted rate s."""
    return (config.w * (s - config.s_star) / config.s_max
            + delta_t * (1.0 - config.w) / config.delta_t_max)


def idle_reward(delta_t, config):
    """Punishment when buffering past the AoI deadline, else neutral."""
    return config.omega_punishment if delta_t >= config.delta_t_max else 0.0


def efficiency_indicators(mean_rate, mean_aoi, config):
    """(rate efficiency, AoI efficiency) of a run."""
    if config.s_star <= 0:
        raise ValueError("s_star must be positive")
    return (mean_rate / config.s_star,
            1.0 - mean_aoi / config.delta_t_max)


# -- agents ------------------------------------------------------------------

class PeriodicAgent:
    """Fixed-interval transmission, regardless of channel conditions."""

    name = "periodic"

    def __init__(self, config):
        self.config = config
        self.last_tx = None

    def start_epoch(self, t0):
        # virtual transmission one interval step before the trace starts
        self.last_tx = t0 - 1.0

    def decide(self, obs, rng):
        if obs.now - self.last_tx >= self.config.periodic_interval:
            return TX
        if obs.delta_t >= self.config.delta_t_max:
            return TX
        return IDLE

    def learn(self, obs, executed, achieved_rate):
        if executed == TX:
            self.last_tx = obs.now


class CatAgent:
    """Probabilistic opportunistic transfer.

    With use_prediction=False the decision metric is the measured SINR;
    with use_prediction=True it is the predicted data rate (bounds
    [0, s_max]).
    """

    def __init__(self, config, use_prediction=False):
        self.config = config
        self.use_prediction = use_prediction
        self.name = "mlcat" if use_prediction else "cat"

    def start_epoch(self, t0):
        pass

    def decide(self, obs, rng):
        if self.use_prediction:
            p = cat_probability(obs.s_tilde, obs.delta_t, self.config,
                                phi_min=0.0, phi_max=self.config.s_max)
        else:
            p = cat_probability(obs.sinr, obs.delta_t, self.config)
        return TX if rng.random() < p else IDLE

    def learn(self, obs, executed, achieved_rate):
        pass


class QTable:
    """Tabular Q-values over binned (predicted rate, buffering time)."""

    def __init__(self, config):
        self.config = config
        self.q = np.zeros((config.q_bins_rate, config.q_bins_age, 2))

    def bin_index(self, s_tilde, delta_t):
        cfg = self.config
        i = min(int(s_tilde / cfg.s_max * cfg.q_bins_rate),
                cfg.q_bins_rate - 1)
        j = min(int(delta_t / cfg.delta_t_max * cfg.q_bins_age),
                cfg.q_bins_age - 1)
        return max(i, 0), max(j, 0)

    def best_action(self, s_tilde, delta_t):
        i, j = self.bin_index(s_tilde, delta_t)
        # tie resolves to IDLE (action index 0)
        return TX if self.q[i, j, 1] > self.q[i, j, 0] else IDLE

    def learn(self, s_tilde, delta_t, action, reward, alpha_lr):
        i, j = self.bin_index(s_tilde, delta_t)
        k = 1 if action == TX else 0
        self.q[i, j, k] = q_update(self.q[i, j, k], reward, alpha_lr)


class RlCatAgent:
    """Epsilon-greedy tabular Q-learning scheme with a hard AoI deadline."""

    name = "rlcat"

    def __init__(self, config, training=True):
        self.config = config
        self.training = training
        self.qtable = QTable(config)

    def start_epoch(self, t0):
        pass

    def decide(self, obs, rng):
        if obs.delta_t >= self.config.delta_t_max:
            return TX
        eps = self.config.q_epsilon if self.training else 0.0
        if eps > 0 and rng.random() < eps:
            return TX if rng.random() < 0.5 else IDLE
        return self.qtable.best_action(obs.s_tilde, obs.delta_t)

    def learn(self, obs, executed, achieved_rate):
        if not self.training:
            return
        if executed == TX:
            r = tx_reward(achieved_rate, obs.delta_t, self.config)
        else:
            r = idle_reward(obs.delta_t, self.config)
        self.qtable.learn(obs.s_tilde, obs.delta_t, executed, r,
                          self.config.q_learning_rate)


class BsCbAgent:
    """Black-spot-aware contextual bandit scheme.

    Deadline expiry forces an immediate transmission and outranks the
    black-spot gate.  A transmission selected by the bandit but suppressed
    inside a black spot produces no bandit update.
    """

    name = "bscb"

    def __init__(self, config, blackspot_map=None, training=True):
        self.config = config
        self.blackspot_map = blackspot_map
        self.training = training
        self.bandit = lin.BanditState(d=2, delta=config.delta)
        self._suppressed = False

    def start_epoch(self, t0):
        pass

    def context_tuple(self, obs):
        # Normalized so seconds cannot dominate MBit/s inside the UCB term.
        # The rate component is centered at the target rate: the transmission
        # reward is then exactly linear in the context with zero intercept,
        # which an intercept-free linear bandit can represent.
        return np.array([
            (obs.s_tilde - self.config.s_star) / self.config.s_max,
            obs.delta_t / self.config.delta_t_max])

    def decide(self, obs, rng):
        self._suppressed = False
        if obs.delta_t >= self.config.delta_t_max:
            return TX
        action = lin.select(self.bandit, self.context_tuple(obs))
        if action == TX and self.blackspot_map is not None and \
                in_any_black_spot(self.blackspot_map, obs.position):
            self._suppressed = True
            return IDLE
        return action

    def learn(self, obs, executed, achieved_rate):
        if not self.training or self._suppressed:
            return
        if executed == TX:
            r = tx_reward(achieved_rate, obs.delta_t, self.config)
        else:
            r = idle_reward(obs.delta_t, self.config)
        lin.update(self.bandit, executed, self.context_tuple(obs), r)


SCHEME_NAMES = ("periodic", "cat", "mlcat", "rlcat", "bscb")


def make_agent(name, config, blackspot_map=None, training=True):
    if name == "periodic":
        return PeriodicAgent(config)
    if name == "cat":
        return CatAgent(config, use_prediction=False)
    if name == "mlcat":
        return CatAgent(config, use_prediction=True)
    if name == "rlcat":
        return RlCatAgent(config, training=training)
    if name == "bscb":
        return BsCbAgent(config, blackspot_map=blackspot_map,
                         training=training)
    raise ValueError(
        f"unknown scheme {name!r}; valid schemes: {', '.join(SCHEME_NAMES)}")
