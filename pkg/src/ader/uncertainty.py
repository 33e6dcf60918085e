"""Twin-critic ensemble statistics and the scheduled uncertainty multiplier.

With two critics, the population standard deviation is half their gap, so
``mean - std`` is exactly ``min`` and ``mean + std`` is exactly ``max``. The
scheduled target ``r + gamma * (mean - eta * std)`` therefore covers the
clipped double-Q target (eta = 1) and the ensemble-mean target (eta = 0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EnsembleStats:
    mu: float | np.ndarray
    sigma: float | np.ndarray


def ensemble_stats(q1, q2) -> EnsembleStats:
    """Mean and population std of the pair; scalars in, scalars out, arrays elementwise."""
    a = np.asarray(q1, dtype=np.float64)
    b = np.asarray(q2, dtype=np.float64)
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValueError(f"non-finite critic values ({q1}, {q2})")
    mu, sigma = 0.5 * (a + b), 0.5 * np.abs(a - b)
    if mu.ndim == 0:
        return EnsembleStats(float(mu), float(sigma))
    return EnsembleStats(mu, sigma)


def eta(t: int, alpha: float, kappa: float) -> float:
    """``alpha - kappa * sqrt(ln t / t)``; tends to ``alpha`` as t grows."""
    if t < 2:
        raise ValueError(f"epoch counter must be >= 2, got {t}")
    return alpha - kappa * math.sqrt(math.log(t) / t)


def scheduled_values(q1, q2, eta_val: float) -> np.ndarray:
    """Elementwise ``mu - eta * sigma`` over the twin critic values.

    Evaluated as ``min + (1 - eta) * sigma``. The two forms agree
    algebraically; this one is exact at eta = 1, so the clipped double-Q
    case reproduces ``min(q1, q2)`` bit for bit.
    """
    q1 = np.asarray(q1, dtype=np.float64)
    q2 = np.asarray(q2, dtype=np.float64)
    sigma = 0.5 * np.abs(q1 - q2)
    return np.minimum(q1, q2) + (1.0 - eta_val) * sigma


def scheduled_targets(r, done, gamma: float, q1_next, q2_next, eta_val: float) -> np.ndarray:
    """Vectorised bootstrap targets; terminal transitions keep only the reward."""
    r = np.asarray(r, dtype=np.float64)
    value = scheduled_values(q1_next, q2_next, eta_val)
    if not (np.isfinite(r).all() and np.isfinite(value).all() and math.isfinite(eta_val)):
        raise ValueError("non-finite input to target computation")
    return np.where(np.asarray(done, dtype=bool), r, r + gamma * value)


def scheduled_target(r: float, done: bool, gamma: float, q1_next: float, q2_next: float, eta_val: float) -> float:
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    return float(scheduled_targets(r, done, gamma, q1_next, q2_next, eta_val))


@dataclass
class ScheduleState:
    """Epoch counter and cached multiplier.

    ``t`` advances every ``K`` environment steps; ``eta_cached`` is only
    recomputed every ``M`` train steps, so targets see a constant multiplier
    between refreshes.
    """
    alpha: float
    kappa: float
    K: int = 10_000
    M: int = 100_000
    t: int = 2
    env_step_count: int = 0
    train_step_count: int = 0
    eta_cached: float = float("nan")

    def __post_init__(self):
        if self.K < 1 or self.M < 1:
            raise ValueError("K and M must be positive")
        if self.t < 2:
            raise ValueError("epoch counter starts at 2")
        if math.isnan(self.eta_cached):
            self.eta_cached = eta(self.t, self.alpha, self.kappa)

    def tick_env(self) -> None:
        self.env_step_count += 1
        if self.env_step_count % self.K == 0:
            self.t += 1

    def tick_train(self) -> None:
        self.train_step_count += 1
        if self.train_step_count % self.M == 0:
            self.eta_cached = eta(self.t, self.alpha, self.kappa)


def schedule_tick_env(state: ScheduleState) -> ScheduleState:
    state.tick_env()
    return state


def schedule_tick_train(state: ScheduleState) -> ScheduleState:
    state.tick_train()
    return state
