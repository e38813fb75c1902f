"""Optimal-play oracle: Manhattan-heuristic IDA* and exhaustive BFS enumeration.

The search heuristic sums non-blank tile displacements only (the blank would
break admissibility), which is deliberately different from the reward's
normalized displacement that counts every cell.  BFS packs states into 64-bit
keys, 4 bits per tile, so the full 3x3 table (181,440 states) stays small.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from pathlib import Path

from .core import (
    Action,
    GridDims,
    PuzzleState,
    apply_move,
    goal_position,
    is_solvable,
    is_solved,
    solved_tiles,
)
from .errors import DomainError

DEFAULT_NODE_BUDGET = 100_000_000

BFS_MAX_CELLS = 9  # memory guard: 4x4 has ~1e13 reachable states


class NodeBudgetExceeded(RuntimeError):
    """IDA* gave up after expanding its node budget."""

    def __init__(self, nodes_expanded: int):
        super().__init__(f"node budget exhausted after {nodes_expanded} expansions")
        self.nodes_expanded = nodes_expanded


@dataclass(frozen=True)
class SolveResult:
    path: tuple[Action, ...]
    length: int
    nodes_expanded: int
    elapsed: float


@dataclass(frozen=True)
class EnumerationReport:
    dims: GridDims
    state_count: int
    depth_histogram: dict[int, int]
    mean_optimal_length: float
    max_depth: int

    def to_json_dict(self) -> dict:
        return {
            "dims": str(self.dims),
            "state_count": self.state_count,
            "depth_histogram": {str(k): v for k, v in sorted(self.depth_histogram.items())},
            "mean_optimal_length": self.mean_optimal_length,
            "max_depth": self.max_depth,
        }

    def save_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n")

    def save_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["depth", "count"])
            for depth in sorted(self.depth_histogram):
                writer.writerow([depth, self.depth_histogram[depth]])


def manhattan_heuristic(state: PuzzleState) -> int:
    """Admissible, consistent lower bound: non-blank displacement sum."""
    w = state.dims.width
    total = 0
    for idx, t in enumerate(state.tiles):
        if t == 0:
            continue
        slot = t - 1
        total += abs(idx // w - slot // w) + abs(idx % w - slot % w)
    return total


def _move_table(dims: GridDims) -> list[list[tuple[int, int]]]:
    """Per blank index: (action, swap index) pairs in fixed UP<DOWN<LEFT<RIGHT order."""
    h, w = dims.height, dims.width
    table = []
    for b in range(h * w):
        r, c = divmod(b, w)
        entry = []
        if r < h - 1:
            entry.append((int(Action.UP), b + w))
        if r > 0:
            entry.append((int(Action.DOWN), b - w))
        if c < w - 1:
            entry.append((int(Action.LEFT), b + 1))
        if c > 0:
            entry.append((int(Action.RIGHT), b - 1))
        table.append(entry)
    return table


_OPPOSITE = {0: 1, 1: 0, 2: 3, 3: 2}


def ida_star(state: PuzzleState, node_budget: int = DEFAULT_NODE_BUDGET) -> SolveResult:
    """Provably shortest solution via iterative-deepening A*.

    Tie-breaking follows the fixed action order, so paths are reproducible.
    Raises DomainError on unsolvable input and NodeBudgetExceeded past the budget.
    """
    if not is_solvable(state):
        raise DomainError(f"state {state.to_text()} is not solvable")
    start = time.perf_counter()
    if is_solved(state):
        return SolveResult((), 0, 0, time.perf_counter() - start)

    dims = state.dims
    w = dims.width
    goal_row = [goal_position(t, dims)[0] if t else 0 for t in range(dims.n)]
    goal_col = [goal_position(t, dims)[1] if t else 0 for t in range(dims.n)]
    moves = _move_table(dims)
    tiles = list(state.tiles)
    nodes = 0
    path: list[int] = []

    def dfs(blank: int, g: int, h: int, bound: int, last: int):
        nonlocal nodes
        f = g + h
        if f > bound:
            return f
        if h == 0:
            return True
        lowest = 1 << 30
        for action, j in moves[blank]:
            if last >= 0 and action == _OPPOSITE[last]:
                continue
            t = tiles[j]
            # Only the moved tile's displacement changes.
            dh = (abs(blank // w - goal_row[t]) + abs(blank % w - goal_col[t])) \
                - (abs(j // w - goal_row[t]) + abs(j % w - goal_col[t]))
            tiles[blank], tiles[j] = t, 0
            nodes += 1
            if nodes > node_budget:
                tiles[j], tiles[blank] = t, 0
                raise NodeBudgetExceeded(nodes)
            result = dfs(j, g + 1, h + dh, bound, action)
            tiles[j], tiles[blank] = t, 0
            if result is True:
                path.append(action)
                return True
            if result < lowest:
                lowest = result
        return lowest

    h0 = manhattan_heuristic(state)
    bound = h0
    while True:
        result = dfs(state.blank_index, 0, h0, bound, -1)
        if result is True:
            actions = tuple(Action(a) for a in reversed(path))
            return SolveResult(actions, len(actions), nodes, time.perf_counter() - start)
        bound = result


def pack_tiles(tiles) -> int:
    """4-bit-per-tile key; valid for grids of at most 16 cells."""
    key = 0
    for t in reversed(tiles):
        key = (key << 4) | t
    return key


def unpack_tiles(key: int, n: int) -> tuple[int, ...]:
    return tuple((key >> (4 * i)) & 15 for i in range(n))


def bfs_distances(dims: GridDims) -> dict[int, int]:
    """Exact optimal depth of every reachable state, keyed by pack_tiles."""
    if dims.n > BFS_MAX_CELLS:
        raise DomainError(
            f"{dims} has {dims.n} cells; exhaustive enumeration is guarded at "
            f"{BFS_MAX_CELLS} (the next size up has ~1e13 states)"
        )
    n = dims.n
    neighbours = [[j for _, j in entry] for entry in _move_table(dims)]
    start = pack_tiles(solved_tiles(dims))
    dist = {start: 0}
    frontier = [(start, n - 1)]
    depth = 0
    while frontier:
        depth += 1
        nxt = []
        for packed, blank in frontier:
            for j in neighbours[blank]:
                t = (packed >> (4 * j)) & 15
                child = packed - (t << (4 * j)) + (t << (4 * blank))
                if child not in dist:
                    dist[child] = depth
                    nxt.append((child, j))
        frontier = nxt
    return dist


def bfs_enumerate(dims: GridDims) -> EnumerationReport:
    """Histogram of optimal solution lengths over the full reachable space."""
    dist = bfs_distances(dims)
    histogram: dict[int, int] = {}
    for d in dist.values():
        histogram[d] = histogram.get(d, 0) + 1
    count = len(dist)
    total = sum(d * c for d, c in histogram.items())
    return EnumerationReport(
        dims=dims,
        state_count=count,
        depth_histogram=histogram,
        mean_optimal_length=total / count,
        max_depth=max(histogram),
    )


class SolverPolicy:
    """Plays the first action of an optimal solution, reusing the cached plan.

    Plans are keyed by state, so interleaved episodes from parallel environment
    instances each pick up their own continuation; a state the cache has never
    seen triggers a fresh search.
    """

    def __init__(self, node_budget: int = DEFAULT_NODE_BUDGET):
        self.node_budget = node_budget
        self._plans: dict[tuple[int, ...], tuple[Action, ...]] = {}

    def reset(self) -> None:
        pass

    def select_action(self, obs, state: PuzzleState, rng) -> Action:
        if is_solved(state):
            raise DomainError("state already solved; no action needed")
        plan = self._plans.pop(state.tiles, None)
        if not plan:
            plan = ida_star(state, self.node_budget).path
        action, rest = plan[0], plan[1:]
        if rest:
            self._plans[apply_move(state, action).tiles] = rest
        return action
