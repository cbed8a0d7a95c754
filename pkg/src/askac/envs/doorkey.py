"""Two-room key-and-door gridworld with randomized layouts per episode.

The agent must fetch a key in the first room, unlock the door in the
dividing wall, and reach the goal in the second room. Observations are a
full-grid one-hot encoding (optionally padded to a larger grid so sizes
can change mid-run without changing the observation length) plus the
agent heading.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import StepResult

TURN_LEFT = 0
TURN_RIGHT = 1
FORWARD = 2
PICKUP = 3
TOGGLE = 4

ACTION_NAMES = ("turn-left", "turn-right", "forward", "pickup", "toggle")

# cell categories in the one-hot encoding
EMPTY, WALL, KEY, DOOR_LOCKED, DOOR_OPEN, GOAL, AGENT = range(7)
N_CATEGORIES = 7

# headings: 0 east, 1 south, 2 west, 3 north
DIR_VEC = ((1, 0), (0, 1), (-1, 0), (0, -1))


@dataclass(frozen=True)
class DoorKeyLayout:
    size: int
    split_col: int
    door_row: int
    key_pos: tuple[int, int]
    goal_pos: tuple[int, int]
    agent_start: tuple[int, int]
    agent_start_dir: int


def generate_layout(size: int, rng: np.random.Generator) -> DoorKeyLayout:
    """Random solvable layout: open left room with agent and key, locked
    door in the dividing wall, goal in the bottom-right corner."""
    split = int(rng.integers(2, size - 2))
    door_row = int(rng.integers(1, size - 2))
    left_cells = [(x, y) for x in range(1, split) for y in range(1, size - 1)]
    agent = left_cells[int(rng.integers(len(left_cells)))]
    agent_dir = int(rng.integers(4))
    key_choices = [c for c in left_cells if c != agent]
    key = key_choices[int(rng.integers(len(key_choices)))]
    return DoorKeyLayout(
        size=size,
        split_col=split,
        door_row=door_row,
        key_pos=key,
        goal_pos=(size - 2, size - 2),
        agent_start=agent,
        agent_start_dir=agent_dir,
    )


def obs_length(encode_size: int) -> int:
    return encode_size * encode_size * N_CATEGORIES + 4


class DoorKey:
    """Gridworld state machine over per-episode random layouts."""

    env_tag = "doorkey"
    n_actions = 5
    action_names = ACTION_NAMES

    def __init__(self, size: int = 5, seed: int | None = None, encode_size: int | None = None):
        if size < 5:
            raise ValueError("grid size must be at least 5")
        self.size = size
        self.encode_size = encode_size or size
        if self.encode_size < size:
            raise ValueError("encode_size smaller than grid size")
        self.rng = np.random.default_rng(seed)
        self.layout: DoorKeyLayout | None = None
        self.agent_pos = (0, 0)
        self.agent_dir = 0
        self.carrying = False
        self.door_open = False
        self.steps = 0
        self._done = True
        self._base = np.zeros((self.encode_size, self.encode_size, N_CATEGORIES))

    @property
    def obs_dim(self) -> int:
        return obs_length(self.encode_size)

    @property
    def max_steps(self) -> int:
        return 10 * self.size * self.size

    def set_grid_size(self, size: int) -> None:
        """Applies at the next reset; the running layout cannot resize."""
        size = int(size)
        if size > self.encode_size:
            raise ValueError(f"size {size} exceeds encoding capacity {self.encode_size}")
        self.size = size

    def reset(self) -> np.ndarray:
        self.layout = generate_layout(self.size, self.rng)
        self.agent_pos = self.layout.agent_start
        self.agent_dir = self.layout.agent_start_dir
        self.carrying = False
        self.door_open = False
        self.steps = 0
        self._done = False
        self._base = self._build_base()
        return self.encode()

    def _build_base(self) -> np.ndarray:
        """Static cell one-hots for the current layout; the key, door, and
        agent cells get patched per step."""
        lay = self.layout
        assert lay is not None
        n = self.encode_size
        base = np.zeros((n, n, N_CATEGORIES))
        for y in range(n):
            for x in range(n):
                if x == 0 or y == 0 or x >= lay.size - 1 or y >= lay.size - 1:
                    base[y, x, WALL] = 1.0
                elif x == lay.split_col and y != lay.door_row:
                    base[y, x, WALL] = 1.0
                elif (x, y) == lay.goal_pos:
                    base[y, x, GOAL] = 1.0
                else:
                    base[y, x, EMPTY] = 1.0
        return base

    def cell_category(self, x: int, y: int) -> int:
        """Category of a grid cell ignoring the agent overlay."""
        lay = self.layout
        assert lay is not None
        if x <= 0 or y <= 0 or x >= lay.size - 1 or y >= lay.size - 1:
            return WALL
        if x == lay.split_col:
            if y == lay.door_row:
                return DOOR_OPEN if self.door_open else DOOR_LOCKED
            return WALL
        if (x, y) == lay.key_pos and not self.carrying:
            return KEY
        if (x, y) == lay.goal_pos:
            return GOAL
        return EMPTY

    def encode(self) -> np.ndarray:
        """Full-grid one-hot (pad cells read as walls) plus heading one-hot."""
        lay = self.layout
        assert lay is not None
        grid = self._base.copy()
        if not self.carrying:
            kx, ky = lay.key_pos
            grid[ky, kx, :] = 0.0
            grid[ky, kx, KEY] = 1.0
        grid[lay.door_row, lay.split_col, :] = 0.0
        grid[lay.door_row, lay.split_col, DOOR_OPEN if self.door_open else DOOR_LOCKED] = 1.0
        ax, ay = self.agent_pos
        grid[ay, ax, :] = 0.0
        grid[ay, ax, AGENT] = 1.0
        out = np.zeros(grid.size + 4)
        out[: grid.size] = grid.reshape(-1)
        out[grid.size + self.agent_dir] = 1.0
        return out

    def _front(self) -> tuple[int, int]:
        dx, dy = DIR_VEC[self.agent_dir]
        return self.agent_pos[0] + dx, self.agent_pos[1] + dy

    def step(self, action: int) -> StepResult:
        if self._done or self.layout is None:
            raise RuntimeError("step() called on a finished episode; reset() first")
        if not 0 <= action < self.n_actions:
            raise ValueError(f"invalid action {action}")
        self.steps += 1
        reward = 0.0
        terminated = False
        if action == TURN_LEFT:
            self.agent_dir = (self.agent_dir - 1) % 4
        elif action == TURN_RIGHT:
            self.agent_dir = (self.agent_dir + 1) % 4
        elif action == FORWARD:
            fx, fy = self._front()
            cat = self.cell_category(fx, fy)
            if cat in (EMPTY, DOOR_OPEN, GOAL):
                self.agent_pos = (fx, fy)
                if cat == GOAL:
                    terminated = True
                    reward = 1.0 - 0.9 * (self.steps / self.max_steps)
        elif action == PICKUP:
            fx, fy = self._front()
            if self.cell_category(fx, fy) == KEY and not self.carrying:
                self.carrying = True
        elif action == TOGGLE:
            fx, fy = self._front()
            if self.cell_category(fx, fy) == DOOR_LOCKED and self.carrying:
                self.door_open = True
        truncated = not terminated and self.steps >= self.max_steps
        self._done = terminated or truncated
        return StepResult(self.encode(), reward, terminated, truncated)

    def product_state(self) -> tuple[tuple[int, int], int, bool, bool]:
        return self.agent_pos, self.agent_dir, self.carrying, self.door_open

    def render_payload(self) -> dict:
        lay = self.layout
        if lay is None:
            return {"size": self.size}
        return {
            "size": lay.size,
            "agent": list(self.agent_pos),
            "dir": self.agent_dir,
            "carrying": self.carrying,
            "split_col": lay.split_col,
            "door": {"pos": [lay.split_col, lay.door_row], "open": self.door_open},
            "key": None if self.carrying else list(lay.key_pos),
            "goal": list(lay.goal_pos),
        }
