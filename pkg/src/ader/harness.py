"""Seeded training runs, evaluation and the variant ablation matrix.

A run owns one ``numpy.random.Generator`` seeded from ``RunConfig.seed``.
Network initialisation draws from it first (actor, critic 1, critic 2),
then each environment step draws, in order:

1. the behaviour action (uniform during warmup, otherwise Gaussian
   exploration noise),
2. storm override noise inside the environment step,
3. for each critic: its mini-batch indices, then target smoothing noise
   (skipped when ``target_noise_std`` is 0),
4. on delayed steps, the actor's mini-batch indices.

Evaluation episodes use a separate environment seeded from ``(seed, 1)``,
so evaluation frequency never perturbs the training stream.
"""
from __future__ import annotations

import csv
import io
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .agent import Agent, AgentConfig
from .approximator import DivergenceError
from .environments import GridLayout, GridWorld, make_env
from .replay import ReplayBuffer, Transition

log = logging.getLogger(__name__)

# (alpha, kappa, M override)
VARIANTS: dict[str, tuple[float, float, int | None]] = {
    "td3": (1.0, 0.0, None),
    "basic": (2.0, 5.0, None),
    "no-ri": (1.0, 5.0, None),
    "no-pu": (2.0, 5.0, 1),
    "ddpg": (0.0, 0.0, None),
}
ABLATION_ORDER = ("td3", "basic", "no-ri", "no-pu", "ddpg")


def apply_variant(agent_cfg: AgentConfig, variant: str) -> AgentConfig:
    """Bind the hyper-parameters a variant tag stands for. ``custom`` keeps them."""
    variant = variant.lower()
    if variant == "custom":
        return agent_cfg
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; choose from {sorted(VARIANTS) + ['custom']}")
    alpha, kappa, m = VARIANTS[variant]
    return replace(agent_cfg, alpha=alpha, kappa=kappa, M=m if m is not None else agent_cfg.M)


@dataclass
class RunConfig:
    agent: AgentConfig = field(default_factory=AgentConfig)
    env: str = "grid"
    map_file: str | None = None
    total_env_steps: int = 50_000
    eval_every: int = 5_000
    eval_episodes: int = 10
    seed: int = 0
    warmup: int = 1_000
    replay_capacity: int = 1_000_000
    state_stride: int = 10
    variant: str = "custom"
    out_dir: str | None = None

    def __post_init__(self):
        if self.total_env_steps < 0 or self.eval_every < 1 or self.eval_episodes < 1:
            raise ValueError("step counts must be non-negative and eval settings positive")
        if self.state_stride < 1 or self.warmup < 0:
            raise ValueError("state_stride must be >= 1 and warmup >= 0")

    def resolved_agent(self) -> AgentConfig:
        return apply_variant(self.agent, self.variant)

    def make_env(self, rng: np.random.Generator):
        layout = GridLayout.from_file(self.map_file) if self.map_file else None
        return make_env(self.env, rng=rng, layout=layout)

    def echo(self) -> str:
        """``key=value`` lines; the same format the CLI reads as a config file.

        ``out_dir`` is left out so a run's echo does not depend on where it was written.
        """
        lines = [f"{f.name}={getattr(self, f.name)}" for f in fields(self)
                 if f.name not in ("agent", "out_dir") and getattr(self, f.name) is not None]
        for key, value in self.resolved_agent().as_dict().items():
            if key == "hidden":
                value = ",".join(str(h) for h in value)
            lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"


@dataclass
class MetricsLog:
    width: int = 0
    height: int = 0
    rows: list[tuple[int, float, float]] = field(default_factory=list)
    visitation: np.ndarray | None = None
    visited_states: list[np.ndarray] = field(default_factory=list)
    grid_steps: int = 0
    diverged: str | None = None
    agent: Agent | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.visitation is None:
            self.visitation = np.zeros((self.height, self.width), dtype=np.int64)

    def record_visitation(self, cell) -> None:
        col, row = cell
        if not (0 <= col < self.width and 0 <= row < self.height):
            raise IndexError(f"cell {cell} outside {self.width}x{self.height} grid")
        self.visitation[row, col] += 1

    def visits(self, cell) -> int:
        return int(self.visitation[cell[1], cell[0]])

    @property
    def final_return(self) -> float:
        return self.rows[-1][1] if self.rows else float("nan")

    @property
    def final_failure_rate(self) -> float:
        return self.rows[-1][2] if self.rows else float("nan")

    def metrics_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["env_step", "mean_return", "failure_rate"])
        for step, ret, fail in self.rows:
            w.writerow([step, repr(float(ret)), repr(float(fail))])
        return buf.getvalue()

    def visitation_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row", "col", "count"])
        for row in range(self.height):
            for col in range(self.width):
                w.writerow([row, col, int(self.visitation[row, col])])
        return buf.getvalue()

    def write(self, out_dir, config_echo: str = "") -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.csv").write_text(self.metrics_csv())
        (out / "visitation.csv").write_text(self.visitation_csv())
        states = np.asarray(self.visited_states, dtype="<f8")
        (out / "states.f64").write_bytes(states.tobytes())
        (out / "config.txt").write_text(config_echo)


def record_visitation(log_: MetricsLog, cell) -> MetricsLog:
    log_.record_visitation(cell)
    return log_


def evaluate(policy, env, episodes: int = 10, rng: np.random.Generator | None = None) -> tuple[float, float]:
    """Mean undiscounted return and failure rate of a deterministic policy.

    ``policy`` is an :class:`Agent` or any callable mapping observation to
    action. An episode fails when it ends without reaching the goal.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    if rng is not None:
        env.rng = rng
    act: Callable = policy.act if isinstance(policy, Agent) else policy
    returns, failures = [], 0
    for _ in range(episodes):
        obs = env.reset()
        total, success = 0.0, False
        while True:
            res = env.step(act(obs))
            total += res.reward
            obs = res.obs
            if res.done or res.timeout:
                success = res.done
                break
        returns.append(total)
        failures += not success
    return float(np.mean(returns)), failures / episodes


def run_training(cfg: RunConfig, agent_hook: Callable[[Agent], Agent] | None = None) -> MetricsLog:
    """Run one seeded experiment and return its metrics.

    ``agent_hook`` may wrap or replace the freshly built agent; tests use it
    to swap in reference target rules on an identical random stream.
    """
    agent_cfg = cfg.resolved_agent()
    rng = np.random.default_rng(cfg.seed)
    env = cfg.make_env(rng)
    eval_env = cfg.make_env(np.random.default_rng([cfg.seed, 1]))
    if (env.obs_dim, env.action_dim) != (agent_cfg.obs_dim, agent_cfg.action_dim):
        agent_cfg = replace(agent_cfg, obs_dim=env.obs_dim, action_dim=env.action_dim)
    agent = Agent(agent_cfg, rng)
    if agent_hook is not None:
        agent = agent_hook(agent)
    buffer = ReplayBuffer(cfg.replay_capacity)
    is_grid = isinstance(env, GridWorld)
    metrics = MetricsLog(width=env.width if is_grid else 0, height=env.height if is_grid else 0, agent=agent)

    obs = env.reset()
    for step in range(cfg.total_env_steps):
        if step < cfg.warmup:
            action = rng.uniform(-1.0, 1.0, size=agent_cfg.action_dim)
        else:
            action = agent.select_action(obs, agent_cfg.explore_noise_std, rng)
        res = env.step(action)
        if is_grid:
            metrics.record_visitation(res.info["cell"])
            metrics.grid_steps += 1
        buffer.push(Transition(obs, action, res.reward, res.obs, res.done))
        if step % cfg.state_stride == 0:
            metrics.visited_states.append(np.array(res.obs))
        agent.schedule.tick_env()
        obs = env.reset() if (res.done or res.timeout) else res.obs

        if step >= cfg.warmup:
            try:
                agent.train_step(buffer, rng)
            except DivergenceError as exc:
                metrics.diverged = f"step {step + 1}: {exc}"
                metrics.rows.append((step + 1, float("nan"), float("nan")))
                log.error("run diverged at %s", metrics.diverged)
                break

        if (step + 1) % cfg.eval_every == 0:
            mean_ret, fail = evaluate(agent, eval_env, cfg.eval_episodes)
            metrics.rows.append((step + 1, mean_ret, fail))
            log.info("seed=%d step=%d return=%.2f failure=%.2f eta=%.4f",
                     cfg.seed, step + 1, mean_ret, fail, agent.schedule.eta_cached)

    if cfg.out_dir:
        metrics.write(cfg.out_dir, cfg.echo())
    return metrics


@dataclass
class AblationRow:
    variant: str
    seed: int
    final_return: float
    final_failure_rate: float
    storm_visits: int


def _run_one(cfg: RunConfig) -> AblationRow:
    m = run_training(cfg)
    storm = 0
    if cfg.env == "grid":
        layout = GridLayout.from_file(cfg.map_file) if cfg.map_file else GridLayout.default()
        storm = m.visits(layout.storm) if layout.storm else 0
    return AblationRow(cfg.variant, cfg.seed, m.final_return, m.final_failure_rate, storm)


def run_ablation(base: RunConfig, variants=ABLATION_ORDER, seeds=range(8), workers: int = 1) -> list[AblationRow]:
    """Train every (variant, seed) pair. Each run writes under
    ``base.out_dir/<variant>/seed<k>`` when an output directory is set."""
    cfgs = []
    for variant in variants:
        for seed in seeds:
            out = os.path.join(base.out_dir, variant, f"seed{seed}") if base.out_dir else None
            cfgs.append(replace(base, variant=variant, seed=seed, out_dir=out))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_one, cfgs))
    return [_run_one(c) for c in cfgs]


def ablation_csv(rows: list[AblationRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["variant", "seed", "final_return", "failure_rate", "storm_visits"])
    for r in rows:
        w.writerow([r.variant, r.seed, repr(r.final_return), repr(r.final_failure_rate), r.storm_visits])
    return buf.getvalue()


def summarize_ablation(rows: list[AblationRow]) -> dict[str, dict[str, float]]:
    """Median and mean final return plus median storm visits per variant."""
    out: dict[str, dict[str, float]] = {}
    for variant in dict.fromkeys(r.variant for r in rows):
        sel = [r for r in rows if r.variant == variant]
        rets = np.array([r.final_return for r in sel])
        out[variant] = {
            "median_return": float(np.median(rets)),
            "mean_return": float(np.mean(rets)),
            "median_failure_rate": float(np.median([r.final_failure_rate for r in sel])),
            "median_storm_visits": float(np.median([r.storm_visits for r in sel])),
        }
    return out
