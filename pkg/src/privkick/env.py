"""Deterministic gridworld with feature-vector observations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

STAY, NORTH, SOUTH, WEST, EAST = range(5)
MOVES = ((0, 0), (0, 1), (0, -1), (-1, 0), (1, 0))
N_ACTIONS = len(MOVES)

GOAL_REWARD = 10.0
HAZARD_REWARD = -1.0
STEP_REWARD = -0.01

N_CORE_FEATURES = 9


class BadAction(ValueError):
    pass


@dataclass(frozen=True)
class GridLayout:
    width: int = 8
    height: int = 8
    goal: Tuple[int, int] = (7, 7)
    hazards: Tuple[Tuple[int, int], ...] = (
        (0, 4), (1, 4), (2, 4), (3, 4), (4, 4), (5, 4),
        (2, 6), (5, 1), (6, 6),
    )
    max_steps: int = 60
    n_nuisance: int = 7
    # inclusive (x0, y0, x1, y1) box the agent may start in; None = any free cell
    start_box: Optional[Tuple[int, int, int, int]] = None

    @classmethod
    def from_dict(cls, d: dict) -> "GridLayout":
        d = dict(d)
        if "goal" in d:
            d["goal"] = tuple(d["goal"])
        if "hazards" in d:
            d["hazards"] = tuple(tuple(h) for h in d["hazards"])
        if d.get("start_box") is not None:
            d["start_box"] = tuple(d["start_box"])
        return cls(**d)

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "goal": list(self.goal),
            "hazards": [list(h) for h in self.hazards],
            "max_steps": self.max_steps,
            "n_nuisance": self.n_nuisance,
            "start_box": None if self.start_box is None else list(self.start_box),
        }

    @property
    def obs_dim(self) -> int:
        return N_CORE_FEATURES + self.n_nuisance

    def start_cells(self) -> List[Tuple[int, int]]:
        hz = set(self.hazards)
        x0, y0, x1, y1 = self.start_box or (0, 0, self.width - 1, self.height - 1)
        return [
            (x, y)
            for y in range(y0, y1 + 1)
            for x in range(x0, x1 + 1)
            if (x, y) != self.goal and (x, y) not in hz
        ]


@dataclass
class StepResult:
    observation: np.ndarray
    reward: float
    done: bool
    truncated: bool = False


@dataclass
class FeatureGrid:
    """Agent on a grid; +10 at the goal, -1 per step on a hazard, -0.01 otherwise.

    Observation layout (all in [0, 1]):
      0-1  agent x, y normalized
      2-3  goal offset, mapped from [-1, 1] to [0, 1]
      4-7  hazard flag for the N, S, W, E neighbour
      8    agent is on a hazard
      9-   per-episode nuisance features, drawn at reset
    """

    layout: GridLayout = field(default_factory=GridLayout)
    pos: Tuple[int, int] = (0, 0)
    t: int = 0
    nuisance: Optional[np.ndarray] = None

    def __post_init__(self):
        self._hazards = frozenset(self.layout.hazards)
        self._starts = self.layout.start_cells()
        self.nuisance = np.zeros(self.layout.n_nuisance)

    @property
    def m(self) -> int:
        return N_ACTIONS

    @property
    def d(self) -> int:
        return self.layout.obs_dim

    def observe(self) -> np.ndarray:
        lay = self.layout
        x, y = self.pos
        gx, gy = lay.goal
        sx, sy = lay.width - 1, lay.height - 1
        hz = self._hazards
        core = [
            x / sx,
            y / sy,
            (gx - x) / (2 * sx) + 0.5,
            (gy - y) / (2 * sy) + 0.5,
            float((x, y + 1) in hz),
            float((x, y - 1) in hz),
            float((x - 1, y) in hz),
            float((x + 1, y) in hz),
            float((x, y) in hz),
        ]
        return np.concatenate([core, self.nuisance])

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        self.pos = self._starts[int(rng.integers(len(self._starts)))]
        self.nuisance = rng.random(self.layout.n_nuisance)
        self.t = 0
        return self.observe()

    def move(self, pos: Tuple[int, int], action: int) -> Tuple[int, int]:
        dx, dy = MOVES[action]
        x = min(max(pos[0] + dx, 0), self.layout.width - 1)
        y = min(max(pos[1] + dy, 0), self.layout.height - 1)
        return x, y

    def reward_at(self, pos: Tuple[int, int]) -> float:
        if pos == self.layout.goal:
            return GOAL_REWARD
        if pos in self._hazards:
            return HAZARD_REWARD
        return STEP_REWARD

    def step(self, action: int) -> StepResult:
        if not 0 <= action < N_ACTIONS:
            raise BadAction(f"action {action!r} not in [0, {N_ACTIONS})")
        self.pos = self.move(self.pos, int(action))
        self.t += 1
        reward = self.reward_at(self.pos)
        at_goal = self.pos == self.layout.goal
        truncated = not at_goal and self.t >= self.layout.max_steps
        return StepResult(self.observe(), reward, at_goal or truncated, truncated)


def reset(env: FeatureGrid, rng: np.random.Generator) -> np.ndarray:
    return env.reset(rng)


def step(env: FeatureGrid, action: int) -> StepResult:
    return env.step(action)
