"""Puzzle state, dynamics, reward, solvability, and initial-state sampling.

Tile ids are 0..H*W-1 in row-major goal order: tile k (k >= 1) belongs in the
k-th cell, and 0 is the blank whose home is the last cell.  Actions are named
for the direction the *tile* travels: UP slides the tile below the blank
upward, so UP is invalid exactly when the blank sits on the bottom row.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass
from functools import lru_cache

from .errors import DomainError
from .rng import RandomSource

# Bounds tile-id width; solver tables and the binary wire format assume small ids.
MAX_CELLS = 64

DEFAULT_MAX_EPISODE_STEPS = 1000


class Action(enum.IntEnum):
    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3

    @property
    def opposite(self) -> "Action":
        return _OPPOSITE[self]


_OPPOSITE = {
    Action.UP: Action.DOWN,
    Action.DOWN: Action.UP,
    Action.LEFT: Action.RIGHT,
    Action.RIGHT: Action.LEFT,
}


@dataclass(frozen=True)
class GridDims:
    height: int
    width: int

    def __post_init__(self):
        if self.height < 2 or self.width < 2:
            raise DomainError(f"grid must be at least 2x2, got {self.height}x{self.width}")
        if self.height * self.width > MAX_CELLS:
            raise DomainError(
                f"{self.height}x{self.width} exceeds the {MAX_CELLS}-cell maximum"
            )

    @property
    def n(self) -> int:
        return self.height * self.width

    def cell(self, index: int) -> tuple[int, int]:
        return divmod(index, self.width)

    def index(self, row: int, col: int) -> int:
        return row * self.width + col

    @classmethod
    def parse(cls, text: str) -> "GridDims":
        """Parse ``"HxW"`` (e.g. ``"3x3"``)."""
        parts = text.lower().split("x")
        if len(parts) != 2:
            raise DomainError(f"dims must look like HxW, got {text!r}")
        try:
            return cls(int(parts[0]), int(parts[1]))
        except ValueError as exc:
            raise DomainError(f"dims must look like HxW, got {text!r}") from exc

    def __str__(self) -> str:
        return f"{self.height}x{self.width}"


def goal_position(tile_id: int, dims: GridDims) -> tuple[int, int]:
    """Row/col of a tile in the solved layout; the blank's home is the last cell."""
    if not 0 <= tile_id < dims.n:
        raise DomainError(f"tile id {tile_id} out of range for {dims}")
    slot = dims.n - 1 if tile_id == 0 else tile_id - 1
    return dims.cell(slot)


def solved_tiles(dims: GridDims) -> tuple[int, ...]:
    return tuple(range(1, dims.n)) + (0,)


@dataclass(frozen=True)
class PuzzleState:
    dims: GridDims
    tiles: tuple[int, ...]
    blank_index: int = -1  # derived from tiles

    def __post_init__(self):
        tiles = tuple(int(t) for t in self.tiles)
        object.__setattr__(self, "tiles", tiles)
        n = self.dims.n
        if len(tiles) != n or sorted(tiles) != list(range(n)):
            raise DomainError(f"tiles must be a permutation of 0..{n - 1}")
        object.__setattr__(self, "blank_index", tiles.index(0))

    @classmethod
    def solved(cls, dims: GridDims) -> "PuzzleState":
        return cls._trusted(dims, solved_tiles(dims), dims.n - 1)

    @classmethod
    def _trusted(cls, dims, tiles, blank_index) -> "PuzzleState":
        # Skips permutation validation; callers must pass a known-valid layout.
        self = object.__new__(cls)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "tiles", tiles)
        object.__setattr__(self, "blank_index", blank_index)
        return self

    def to_text(self) -> str:
        head = f"{self.dims.height},{self.dims.width}"
        return head + ":" + ",".join(str(t) for t in self.tiles)

    @classmethod
    def from_text(cls, text: str) -> "PuzzleState":
        try:
            head, body = text.strip().split(":")
            h, w = (int(x) for x in head.split(","))
            tiles = tuple(int(x) for x in body.split(","))
        except ValueError as exc:
            raise DomainError(f"malformed state string {text!r}") from exc
        return cls(GridDims(h, w), tiles)

    def to_binary(self) -> bytes:
        n = self.dims.n
        return struct.pack(f"<HH{n}H", self.dims.height, self.dims.width, *self.tiles)

    @classmethod
    def from_binary(cls, data: bytes) -> "PuzzleState":
        if len(data) < 4:
            raise DomainError("state blob too short")
        h, w = struct.unpack_from("<HH", data)
        dims = GridDims(h, w)
        if len(data) != 4 + 2 * dims.n:
            raise DomainError(f"state blob has wrong length for {dims}")
        tiles = struct.unpack_from(f"<{dims.n}H", data, 4)
        return cls(dims, tiles)


def is_solved(state: PuzzleState) -> bool:
    return state.tiles == solved_tiles(state.dims)


def inversion_count(state: PuzzleState) -> int:
    """Out-of-order pairs among non-blank tiles in row-major order."""
    arr = [t for t in state.tiles if t != 0]
    return sum(
        1
        for i in range(len(arr))
        for j in range(i + 1, len(arr))
        if arr[i] > arr[j]
    )


def is_solvable(state: PuzzleState) -> bool:
    """True iff the state is reachable from the solved layout.

    Classical parity rule: with odd width, solvable iff the inversion count is
    even; with even width, a vertical blank move flips both inversion parity
    and the blank's row parity, so solvable iff inversions plus the blank's
    row distance from the bottom row is even.
    """
    inv = inversion_count(state)
    if state.dims.width % 2 == 1:
        return inv % 2 == 0
    rows_from_bottom = state.dims.height - 1 - state.dims.cell(state.blank_index)[0]
    return (inv + rows_from_bottom) % 2 == 0


def sample_uniform_solvable(dims: GridDims, rng: RandomSource) -> PuzzleState:
    """Uniform draw over solvable states.

    Shuffles all ids uniformly, then repairs parity by swapping the first two
    non-blank tiles in row-major order.  The swap is an involution pairing each
    unsolvable permutation with a distinct solvable one, so solvable states stay
    equally likely.
    """
    tiles = [int(t) for t in rng.permutation(dims.n)]
    blank = tiles.index(0)
    state = PuzzleState._trusted(dims, tuple(tiles), blank)
    if is_solvable(state):
        return state
    first, second = [i for i, t in enumerate(tiles) if t != 0][:2]
    tiles[first], tiles[second] = tiles[second], tiles[first]
    return PuzzleState._trusted(dims, tuple(tiles), blank)


def valid_actions(state: PuzzleState) -> set[Action]:
    row, col = state.dims.cell(state.blank_index)
    acts = set()
    if row < state.dims.height - 1:
        acts.add(Action.UP)
    if row > 0:
        acts.add(Action.DOWN)
    if col < state.dims.width - 1:
        acts.add(Action.LEFT)
    if col > 0:
        acts.add(Action.RIGHT)
    return acts


def _moving_index(state: PuzzleState, action: Action) -> int:
    b, w = state.blank_index, state.dims.width
    if action == Action.UP:
        return b + w
    if action == Action.DOWN:
        return b - w
    if action == Action.LEFT:
        return b + 1
    return b - 1


def apply_move(state: PuzzleState, action: Action) -> PuzzleState:
    """Slide the named tile into the blank; raises on invalid moves."""
    if action not in valid_actions(state):
        raise DomainError(f"{Action(action).name} is invalid in state {state.to_text()}")
    j = _moving_index(state, action)
    b = state.blank_index
    tiles = list(state.tiles)
    tiles[b], tiles[j] = tiles[j], 0
    return PuzzleState._trusted(state.dims, tuple(tiles), j)


def shuffle_from_solved(dims: GridDims, num_moves: int, rng: RandomSource) -> PuzzleState:
    """Scramble by random valid moves; reaches depth <= num_moves, always solvable."""
    if num_moves < 0:
        raise DomainError("num_moves must be >= 0")
    state = PuzzleState.solved(dims)
    for _ in range(num_moves):
        acts = sorted(valid_actions(state))
        state = apply_move(state, acts[rng.integers(len(acts))])
    return state


@lru_cache(maxsize=None)
def reward_denominator(dims: GridDims) -> int:
    """Normalization constant: sum over 1-indexed cells of max(i,H-i)+max(j,W-j)."""
    h, w = dims.height, dims.width
    return sum(
        max(i, h - i) + max(j, w - j)
        for i in range(1, h + 1)
        for j in range(1, w + 1)
    )


def manhattan_sum(state: PuzzleState, include_blank: bool = True) -> int:
    """Total |row delta| + |col delta| of every tile from its goal cell."""
    w = state.dims.width
    n = state.dims.n
    total = 0
    for idx, t in enumerate(state.tiles):
        if t == 0:
            if not include_blank:
                continue
            slot = n - 1
        else:
            slot = t - 1
        total += abs(idx // w - slot // w) + abs(idx % w - slot % w)
    return total


def normalized_manhattan(state: PuzzleState, include_blank: bool = True) -> float:
    """Displacement in [0, 1]; 0 exactly at the solved state."""
    return manhattan_sum(state, include_blank) / reward_denominator(state.dims)


@dataclass(frozen=True)
class StepOutcome:
    next_state: PuzzleState
    reward: float
    valid: bool
    solved: bool
    terminated: bool
    truncated: bool


def apply_action(
    state: PuzzleState,
    action: Action,
    step_index: int = 0,
    max_steps: int = DEFAULT_MAX_EPISODE_STEPS,
    include_blank: bool = True,
) -> StepOutcome:
    """One environment transition.

    Invalid moves leave the state unchanged at reward -1, solving pays +1 and
    terminates, and any other valid move pays the negated normalized Manhattan
    displacement of the resulting state.  Invalid moves still consume a step,
    so the episode cap applies to them as well.
    """
    if not 0 <= step_index < max_steps:
        raise DomainError(f"step_index {step_index} outside [0, {max_steps})")
    last_step = step_index + 1 >= max_steps
    if action not in valid_actions(state):
        return StepOutcome(state, -1.0, False, False, False, last_step)
    nxt = apply_move(state, action)
    if is_solved(nxt):
        return StepOutcome(nxt, 1.0, True, True, True, False)
    return StepOutcome(
        nxt, -normalized_manhattan(nxt, include_blank), True, False, False, last_step
    )
