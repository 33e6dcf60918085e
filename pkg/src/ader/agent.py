"""Twin-critic deterministic actor-critic with a scheduled uncertainty target.

One agent class covers three algorithms through ``(alpha, kappa)``:
``(1, 0)`` is TD3, ``(0, 0)`` is DDPG over a two-critic ensemble mean, and
anything else is the scheduled variant whose penalty multiplier starts
negative (an exploration bonus) and rises toward ``alpha``.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .approximator import (
    IDENTITY, RELU, TANH, DivergenceError, MlpParams, adam_init, adam_step, backward,
    forward, forward_cached, init_mlp, save_params, soft_update,
)
from .replay import Batch, ReplayBuffer
from .uncertainty import ScheduleState, scheduled_values


@dataclass
class AgentConfig:
    obs_dim: int = 2
    action_dim: int = 1
    alpha: float = 2.0
    kappa: float = 5.0
    gamma: float = 0.99
    tau: float = 0.005
    actor_lr: float = 3e-4
    critic_lr: float = 3e-4
    batch_size: int = 256
    policy_freq: int = 2
    explore_noise_std: float = 0.1
    target_noise_std: float = 0.2
    noise_clip: float = 2.0
    K: int = 10_000
    M: int = 100_000
    hidden: tuple[int, ...] = (256, 256)

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        self.validate()

    def validate(self) -> None:
        problems = []
        if not 0.0 < self.gamma < 1.0:
            problems.append(f"gamma must lie in (0, 1), got {self.gamma}")
        if not 0.0 < self.tau <= 1.0:
            problems.append(f"tau must lie in (0, 1], got {self.tau}")
        if self.policy_freq < 1:
            problems.append("policy_freq must be >= 1")
        if self.batch_size < 1:
            problems.append("batch_size must be >= 1")
        if min(self.explore_noise_std, self.target_noise_std, self.noise_clip) < 0:
            problems.append("noise settings must be non-negative")
        if self.actor_lr < 0 or self.critic_lr < 0:
            problems.append("learning rates must be non-negative")
        if self.K < 1 or self.M < 1:
            problems.append("K and M must be >= 1")
        if self.obs_dim < 1 or self.action_dim < 1 or any(h < 1 for h in self.hidden):
            problems.append("network widths must be positive")
        if problems:
            raise ValueError("; ".join(problems))

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def critic_loss(critic: MlpParams, s, a, y) -> tuple[float, MlpParams]:
    """``0.5 * mean((Q(s, a) - y)^2)`` and its parameter gradient."""
    x = np.concatenate([s, a], axis=1)
    q, cache = forward_cached(critic, x)
    diff = q[:, 0] - y
    n = len(y)
    grads, _ = backward(critic, x, (diff / n)[:, None], cache)
    return 0.5 * float(np.mean(diff * diff)), grads


def actor_objective(actor: MlpParams, critic: MlpParams, s) -> tuple[float, MlpParams]:
    """``mean Q(s, pi(s))`` and its gradient with respect to the actor.

    The gradient enters the actor through the critic's action inputs;
    critic parameters are untouched.
    """
    a, a_cache = forward_cached(actor, s)
    x = np.concatenate([s, a], axis=1)
    q, q_cache = forward_cached(critic, x)
    n = s.shape[0]
    _, dx = backward(critic, x, np.full((n, 1), 1.0 / n), q_cache)
    grads, _ = backward(actor, s, dx[:, s.shape[1]:], a_cache)
    return float(np.mean(q)), grads


def _negate(g: MlpParams) -> MlpParams:
    return g.with_arrays([-a for a in g.arrays()])


class Agent:
    def __init__(self, config: AgentConfig, rng: np.random.Generator):
        self.config = c = config
        obs, act = c.obs_dim, c.action_dim
        n_hidden = len(c.hidden)
        self.actor = init_mlp([obs, *c.hidden, act], [RELU] * n_hidden + [TANH], rng)
        self.critic1 = init_mlp([obs + act, *c.hidden, 1], [RELU] * n_hidden + [IDENTITY], rng)
        self.critic2 = init_mlp([obs + act, *c.hidden, 1], [RELU] * n_hidden + [IDENTITY], rng)
        self.actor_target = self.actor.copy()
        self.critic1_target = self.critic1.copy()
        self.critic2_target = self.critic2.copy()
        self.actor_opt = adam_init(self.actor)
        self.critic1_opt = adam_init(self.critic1)
        self.critic2_opt = adam_init(self.critic2)
        self.schedule = ScheduleState(alpha=c.alpha, kappa=c.kappa, K=c.K, M=c.M)
        self.train_steps = 0
        self.last_critic_loss = (float("nan"), float("nan"))

    # -- acting -----------------------------------------------------------

    def act(self, obs) -> np.ndarray:
        """Noise-free policy action."""
        return forward(self.actor, obs)

    def select_action(self, obs, noise_std: float, rng: np.random.Generator) -> np.ndarray:
        a = forward(self.actor, obs)
        if noise_std > 0:
            a = a + rng.normal(0.0, noise_std, size=a.shape)
        return np.clip(a, -1.0, 1.0)

    # -- targets ----------------------------------------------------------

    def combine_target_values(self, q1, q2) -> np.ndarray:
        """Collapse the twin target-critic values into one bootstrap value."""
        return scheduled_values(q1, q2, self.schedule.eta_cached)

    def compute_batch_targets(self, batch: Batch, rng: np.random.Generator) -> np.ndarray:
        c = self.config
        a_next = forward(self.actor_target, batch.s_next)
        if c.target_noise_std > 0:
            noise = rng.normal(0.0, c.target_noise_std, size=a_next.shape)
            a_next = np.clip(a_next + np.clip(noise, -c.noise_clip, c.noise_clip), -1.0, 1.0)
        x_next = np.concatenate([batch.s_next, a_next], axis=1)
        q1 = forward(self.critic1_target, x_next)[:, 0]
        q2 = forward(self.critic2_target, x_next)[:, 0]
        value = self.combine_target_values(q1, q2)
        if not np.isfinite(value).all():
            raise DivergenceError("non-finite target critic values")
        return np.where(batch.done, batch.r, batch.r + c.gamma * value)

    # -- updates ----------------------------------------------------------

    def critic_update(self, buffer: ReplayBuffer, rng: np.random.Generator) -> None:
        """One Adam step per critic, each on its own freshly sampled batch."""
        c = self.config
        losses = []
        for name in ("critic1", "critic2"):
            batch = buffer.sample(c.batch_size, rng)
            y = self.compute_batch_targets(batch, rng)
            loss, grads = critic_loss(getattr(self, name), batch.s, batch.a, y)
            if not np.isfinite(loss):
                raise DivergenceError(f"{name} loss is not finite")
            params, opt = adam_step(getattr(self, name), grads, getattr(self, name + "_opt"), c.critic_lr)
            setattr(self, name, params)
            setattr(self, name + "_opt", opt)
            losses.append(loss)
        self.last_critic_loss = tuple(losses)

    def actor_update(self, buffer: ReplayBuffer, rng: np.random.Generator) -> None:
        batch = buffer.sample(self.config.batch_size, rng)
        _, grads = actor_objective(self.actor, self.critic1, batch.s)
        self.actor, self.actor_opt = adam_step(self.actor, _negate(grads), self.actor_opt, self.config.actor_lr)

    def sync_targets(self) -> None:
        tau = self.config.tau
        self.actor_target = soft_update(self.actor_target, self.actor, tau)
        self.critic1_target = soft_update(self.critic1_target, self.critic1, tau)
        self.critic2_target = soft_update(self.critic2_target, self.critic2, tau)

    def train_step(self, buffer: ReplayBuffer, rng: np.random.Generator) -> None:
        """Refresh-tick the schedule, update both critics, and every
        ``policy_freq`` steps update the actor and sync all target nets."""
        self.schedule.tick_train()
        self.critic_update(buffer, rng)
        self.train_steps += 1
        if self.train_steps % self.config.policy_freq == 0:
            self.actor_update(buffer, rng)
            self.sync_targets()

    # -- persistence ------------------------------------------------------

    def networks(self) -> dict[str, MlpParams]:
        return {
            "actor": self.actor, "actor_target": self.actor_target,
            "critic1": self.critic1, "critic1_target": self.critic1_target,
            "critic2": self.critic2, "critic2_target": self.critic2_target,
        }

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for name, params in self.networks().items():
            save_params(params, directory / f"{name}.bin")
