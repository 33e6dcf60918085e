"""Continuous-action environments: the storm grid world and a point mass.

Grid coordinates are ``(col, row)`` with row 0 at the bottom. Actions are
scalars in ``[-1, 1]`` and are binned into four moves.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

UP, RIGHT, DOWN, LEFT = 0, 1, 2, 3
DIRECTION_NAMES = ("Up", "Right", "Down", "Left")
MOVES = {UP: (0, 1), RIGHT: (1, 0), DOWN: (0, -1), LEFT: (-1, 0)}

STEP_REWARD = -1.0
FIRE_REWARD = -3.0
GOAL_REWARD = 100.0


class EpisodeOverError(RuntimeError):
    pass


@dataclass
class StepResult:
    obs: np.ndarray
    reward: float
    done: bool
    timeout: bool
    info: dict = field(default_factory=dict)


def map_action(a) -> int:
    """Bin a scalar action: [-1,-.5) Up, [-.5,0) Right, [0,.5) Down, [.5,1] Left."""
    a = float(np.asarray(a, dtype=np.float64).reshape(-1)[0])
    if math.isnan(a):
        raise ValueError("action is NaN")
    a = min(max(a, -1.0), 1.0)
    if a < -0.5:
        return UP
    if a < 0.0:
        return RIGHT
    if a < 0.5:
        return DOWN
    return LEFT


@dataclass(frozen=True)
class GridLayout:
    width: int
    height: int
    start: tuple[int, int]
    fish: tuple[int, int]
    fire: frozenset
    storm: tuple[int, int] | None

    def __post_init__(self):
        cells = [self.start, self.fish] + ([self.storm] if self.storm else [])
        for c in cells + list(self.fire):
            if not (0 <= c[0] < self.width and 0 <= c[1] < self.height):
                raise ValueError(f"cell {c} outside {self.width}x{self.height} grid")
        if any(c in self.fire for c in cells):
            raise ValueError("start, fish and storm cells must not be on fire")

    @classmethod
    def default(cls) -> "GridLayout":
        """5x5: fire wall across the middle row, storm as the only gap."""
        return cls(5, 5, (2, 0), (2, 4), frozenset({(0, 2), (1, 2), (3, 2), (4, 2)}), (2, 2))

    @classmethod
    def from_text(cls, text: str) -> "GridLayout":
        """Parse a character map; the first line is the top row.

        ``.`` open, ``F`` fire, ``S`` storm, ``P`` start, ``G`` fish.
        """
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        height, width = len(lines), len(lines[0])
        start = fish = storm = None
        fire = set()
        for i, line in enumerate(lines):
            if len(line) != width:
                raise ValueError(f"map line {i + 1} has width {len(line)}, expected {width}")
            row = height - 1 - i
            for col, ch in enumerate(line):
                cell = (col, row)
                if ch == "F":
                    fire.add(cell)
                elif ch == "S":
                    storm = cell
                elif ch == "P":
                    start = cell
                elif ch == "G":
                    fish = cell
                elif ch != ".":
                    raise ValueError(f"unknown map character {ch!r} at line {i + 1}")
        if start is None or fish is None:
            raise ValueError("map needs one 'P' start and one 'G' fish cell")
        return cls(width, height, start, fish, frozenset(fire), storm)

    @classmethod
    def from_file(cls, path) -> "GridLayout":
        return cls.from_text(Path(path).read_text())

    def to_text(self) -> str:
        lines = []
        for row in reversed(range(self.height)):
            chars = []
            for col in range(self.width):
                c = (col, row)
                chars.append("F" if c in self.fire else "S" if c == self.storm else
                             "P" if c == self.start else "G" if c == self.fish else ".")
            lines.append("".join(chars))
        return "\n".join(lines) + "\n"

    def move(self, cell, direction) -> tuple[tuple[int, int], float, bool]:
        """Deterministic move: (next cell, reward, reached fish)."""
        dc, dr = MOVES[direction]
        nxt = (cell[0] + dc, cell[1] + dr)
        if not (0 <= nxt[0] < self.width and 0 <= nxt[1] < self.height):
            return cell, STEP_REWARD, False
        if nxt in self.fire:
            return cell, FIRE_REWARD, False
        if nxt == self.fish:
            return nxt, GOAL_REWARD, True
        return nxt, STEP_REWARD, False


class GridWorld:
    """Grid world whose storm cell overrides the chosen move with
    probability ``override_prob`` by a uniform draw over the four moves."""

    obs_dim = 2
    action_dim = 1

    def __init__(self, layout: GridLayout | None = None, override_prob: float = 0.75,
                 horizon: int = 200, rng: np.random.Generator | None = None):
        self.layout = layout or GridLayout.default()
        self.override_prob = override_prob
        self.horizon = horizon
        self.rng = rng if rng is not None else np.random.default_rng()
        self.pos = self.layout.start
        self.step_count = 0
        self.finished = False

    @property
    def width(self):
        return self.layout.width

    @property
    def height(self):
        return self.layout.height

    def observe(self, cell=None) -> np.ndarray:
        col, row = self.pos if cell is None else cell
        return np.array([col / (self.width - 1), row / (self.height - 1)])

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        self.pos = self.layout.start
        self.step_count = 0
        self.finished = False
        return self.observe()

    def step(self, a) -> StepResult:
        if self.finished:
            raise EpisodeOverError("episode finished; call reset()")
        direction = map_action(a)
        overridden = False
        if self.pos == self.layout.storm and self.override_prob > 0.0:
            # two draws every storm step, so the stream does not depend on the outcome
            u = self.rng.random()
            random_dir = int(self.rng.integers(4))
            if u < self.override_prob:
                overridden = True
                direction = random_dir
        self.pos, reward, reached = self.layout.move(self.pos, direction)
        self.step_count += 1
        timeout = (not reached) and self.step_count >= self.horizon
        self.finished = reached or timeout
        info = {"cell": self.pos, "overridden": overridden, "direction": direction}
        return StepResult(self.observe(), reward, reached, timeout, info)


@dataclass
class PointMass:
    """1-d point mass pushed toward a goal. Observation is (position, velocity)."""

    goal: float = 1.0
    noise_std: float = 0.0
    horizon: int = 200
    start: float = 0.0
    bound: float = 2.0
    tolerance: float = 0.05
    rng: np.random.Generator = field(default_factory=np.random.default_rng)
    position: float = 0.0
    velocity: float = 0.0
    step_count: int = 0
    finished: bool = False

    obs_dim = 2
    action_dim = 1

    def observe(self) -> np.ndarray:
        return np.array([self.position, self.velocity])

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        self.position, self.velocity = self.start, 0.0
        self.step_count = 0
        self.finished = False
        return self.observe()

    def step(self, a) -> StepResult:
        if self.finished:
            raise EpisodeOverError("episode finished; call reset()")
        a = float(np.clip(np.asarray(a, dtype=np.float64).reshape(-1)[0], -1.0, 1.0))
        noise = self.rng.normal(0.0, self.noise_std) if self.noise_std > 0 else 0.0
        self.velocity += 0.1 * a + noise
        self.position += self.velocity
        if abs(self.position) > self.bound:
            self.position = math.copysign(self.bound, self.position)
            self.velocity = 0.0
        self.step_count += 1
        distance = abs(self.position - self.goal)
        reached = distance < self.tolerance
        reward = 10.0 if reached else -distance
        timeout = (not reached) and self.step_count >= self.horizon
        self.finished = reached or timeout
        return StepResult(self.observe(), reward, reached, timeout, {})


def make_env(name: str, rng: np.random.Generator | None = None, layout: GridLayout | None = None):
    if name == "grid":
        return GridWorld(layout=layout, rng=rng)
    if name == "pointmass":
        return PointMass(rng=rng if rng is not None else np.random.default_rng())
    raise ValueError(f"unknown environment {name!r}")
