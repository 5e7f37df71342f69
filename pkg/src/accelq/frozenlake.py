"""FrozenLake grid worlds compiled to explicit finite MDPs.

Tiles: S (start), F (frozen surface), H (hole), G (goal).  Holes and goals
are absorbing with zero onward reward.  Movement is slippery: the agent goes
in the chosen direction with probability ``p_intended`` and to each
perpendicular direction with ``p_left_perp`` / ``p_right_perp``; stepping
into the border keeps it in place.  Reaching the goal pays 1, encoded as the
expected arrival reward R(x, u) = P(goal | x, u) so the reward table stays
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .mdp import FiniteMdp

__all__ = [
    "ACTIONS",
    "BUNDLED_MAPS",
    "GridMap",
    "SlipModel",
    "parse_map",
    "load_map",
    "build_mdp",
]

# action indices; perpendicular pairs are relative to the facing direction
ACTIONS = ("up", "down", "left", "right")
_DELTAS = ((-1, 0), (1, 0), (0, -1), (0, 1))
_LEFT_OF = (2, 3, 1, 0)   # up->left, down->right, left->down, right->up
_RIGHT_OF = (3, 2, 0, 1)  # up->right, down->left, left->up, right->down

_TILES = frozenset("SFHG")

BUNDLED_MAPS = ("frozenlake4x4", "frozenlake8x8")


@dataclass(frozen=True)
class GridMap:
    """Rectangular tile grid with exactly one start and at least one goal."""

    tiles: tuple[str, ...]

    @property
    def rows(self) -> int:
        return len(self.tiles)

    @property
    def cols(self) -> int:
        return len(self.tiles[0])

    @property
    def num_states(self) -> int:
        return self.rows * self.cols

    def tile(self, row: int, col: int) -> str:
        return self.tiles[row][col]

    def state_index(self, row: int, col: int) -> int:
        return row * self.cols + col


@dataclass(frozen=True)
class SlipModel:
    """Probabilities of moving in the intended and perpendicular directions."""

    p_intended: float
    p_left_perp: float
    p_right_perp: float

    def __post_init__(self):
        probs = (self.p_intended, self.p_left_perp, self.p_right_perp)
        if any(p < 0.0 for p in probs):
            raise ValueError("slip probabilities must be nonnegative")
        if abs(sum(probs) - 1.0) > 1e-12:
            raise ValueError(f"slip probabilities must sum to 1, got {sum(probs)}")

    @classmethod
    def slippery(cls) -> "SlipModel":
        """The common benchmark convention: 1/3 each way."""
        third = 1.0 / 3.0
        return cls(third, third, third)

    @classmethod
    def deterministic(cls) -> "SlipModel":
        return cls(1.0, 0.0, 0.0)


def parse_map(text: str) -> GridMap:
    """Parse a newline-separated grid of SFHG characters."""
    rows = [line.strip() for line in text.strip().splitlines() if line.strip()]
    if not rows:
        raise ValueError("empty map")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"row {i} has length {len(row)}, expected {width}")
        for ch in row:
            if ch not in _TILES:
                raise ValueError(f"unknown tile {ch!r} in row {i}")
    flat = "".join(rows)
    if flat.count("S") != 1:
        raise ValueError(f"map must contain exactly one S, found {flat.count('S')}")
    if "G" not in flat:
        raise ValueError("map must contain at least one G")
    return GridMap(tuple(rows))


def load_map(name_or_path: str) -> GridMap:
    """Load a bundled map by name (``frozenlake4x4``/``frozenlake8x8``) or a file path."""
    if name_or_path in BUNDLED_MAPS:
        text = (resources.files(__package__) / "maps" / f"{name_or_path}.txt").read_text()
    else:
        path = Path(name_or_path)
        if not path.exists():
            raise ValueError(
                f"unknown map {name_or_path!r}: not a bundled name {BUNDLED_MAPS} "
                "and no such file"
            )
        text = path.read_text()
    return parse_map(text)


def build_mdp(grid: GridMap, slip: SlipModel | None = None, gamma: float = 0.95) -> FiniteMdp:
    """Compile a grid into a finite MDP with 4 actions at every state.

    Holes and goals are absorbing with zero reward; border moves clamp to
    the current cell; R(x, u) is the probability of landing on a goal from
    a non-terminal cell.  r_max is fixed at 1 (the arrival reward).
    """
    if slip is None:
        slip = SlipModel.slippery()
    n_states = grid.num_states
    n_actions = len(ACTIONS)
    kernel = np.zeros((n_states, n_actions, n_states))
    reward = np.zeros((n_states, n_actions))

    for r in range(grid.rows):
        for c in range(grid.cols):
            s = grid.state_index(r, c)
            if grid.tile(r, c) in "HG":
                kernel[s, :, s] = 1.0
                continue
            for a in range(n_actions):
                moves = (
                    (a, slip.p_intended),
                    (_LEFT_OF[a], slip.p_left_perp),
                    (_RIGHT_OF[a], slip.p_right_perp),
                )
                for direction, prob in moves:
                    if prob == 0.0:
                        continue
                    dr, dc = _DELTAS[direction]
                    rr = min(max(r + dr, 0), grid.rows - 1)
                    cc = min(max(c + dc, 0), grid.cols - 1)
                    kernel[s, a, grid.state_index(rr, cc)] += prob
                    if grid.tile(rr, cc) == "G":
                        reward[s, a] += prob

    return FiniteMdp.create(kernel, reward, gamma, r_max=1.0)
