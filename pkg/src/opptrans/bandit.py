"""Disjoint-arm LinUCB contextual bandit over the IDLE/TX action pair.

Per arm: A accumulates outer products of observed contexts on top of an
identity initialization, b accumulates reward-weighted contexts, and the
ridge coefficients are theta = A^-1 b.  Arm selection maximizes
theta_a . c + alpha * sqrt(c . A_a^-1 c), with the exploration weight
alpha = 1 + sqrt(ln(2/delta) / 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

IDLE = "IDLE"
TX = "TX"
ACTIONS = (IDLE, TX)        # fixed order; ties resolve to IDLE


def exploration_weight(delta):
    return 1.0 + math.sqrt(math.log(2.0 / delta) / 2.0)


@dataclass
class ArmState:
    d: int = 2

    def __post_init__(self):
        self.A = np.eye(self.d)
        self.A_inv = np.eye(self.d)
        self.b = np.zeros(self.d)
        self.theta_hat = np.zeros(self.d)


@dataclass
class BanditState:
    d: int = 2
    delta: float = 0.1
    alpha_explore: float = field(init=False)
    arms: dict = field(init=False)

    def __post_init__(self):
        self.alpha_explore = exploration_weight(self.delta)
        self.arms = {a: ArmState(self.d) for a in ACTIONS}


def scores(state, c):
    """Per-arm (estimated_reward, ucb_width) for diagnostics."""
    c = np.asarray(c, dtype=float)
    out = {}
    for name in ACTIONS:
        arm = state.arms[name]
        est = float(arm.theta_hat @ c)
        width = state.alpha_explore * math.sqrt(max(c @ arm.A_inv @ c, 0.0))
        out[name] = (est, width)
    return out


def select(state, c):
    """Arm with the highest combined score; ties go to the first arm."""
    sc = scores(state, c)
    best, best_val = None, -math.inf
    for name in ACTIONS:
        val = sc[name][0] + sc[name][1]
        if val > best_val:
            best, best_val = name, val
    if not math.isfinite(best_val):
        raise ArithmeticError("non-finite bandit score (corrupted state)")
    return best


def update(state, action, c, reward):
    """Apply one observed (context, reward) pair to the chosen arm."""
    if action not in state.arms:
        raise ValueError(f"unknown arm {action!r}")
    if not math.isfinite(reward):
        raise ValueError("non-finite reward")
    c = np.asarray(c, dtype=float)
    arm = state.arms[action]
    arm.A = arm.A + np.outer(c, c)
    arm.A_inv = np.linalg.inv(arm.A)
    arm.b = arm.b + reward * c
    arm.theta_hat = arm.A_inv @ arm.b
    return state


def save_state(state, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("opptrans-bandit v1\n")
        fh.write(f"d {state.d}\n")
        fh.write(f"delta {state.delta!r}\n")
        for name in ACTIONS:
            arm = state.arms[name]
            fh.write(f"arm {name}\n")
            for row in arm.A:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")
            fh.write(" ".join(repr(float(v)) for v in arm.b) + "\n")


def load_state(path):
    with open(path, encoding="utf-8") as fh:
        if fh.readline().strip() != "opptrans-bandit v1":
            raise ValueError("unknown bandit file header")
        d = int(fh.readline().split()[1])
        delta = float(fh.readline().split()[1])
        state = BanditState(d=d, delta=delta)
        for _ in ACTIONS:
            name = fh.readline().split()[1]
            A = np.array([[float(v) for v in fh.readline().split()]
                          for _ in range(d)])
            b = np.array([float(v) for v in fh.readline().split()])
            arm = state.arms[name]
            arm.A = A
            arm.A_inv = np.linalg.inv(A)
            arm.b = b
            arm.theta_hat = arm.A_inv @ b
    return state
