"""Grids, MAPF instances and solutions.

Cells are ``(x, y)`` tuples. A path is a sequence of ``(cell, timestep)``
tuples recording the agent's start and every move; waits are implicit gaps
between consecutive timesteps and are never stored.
"""

from __future__ import annotations

import heapq
import random
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

from .errors import UnsolvableError

Cell = tuple[int, int]
PathEntry = tuple[Cell, int]

_MOVES = ((1, 0), (-1, 0), (0, 1), (0, -1))


@dataclass(frozen=True)
class GridMap:
    """A 4-connected grid. ``blocked`` is row-major, index ``y * width + x``."""

    width: int
    height: int
    blocked: tuple[bool, ...] = field(repr=False)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("grid dimensions must be positive")
        if len(self.blocked) != self.width * self.height:
            raise ValueError("blocked mask does not match grid size")

    @classmethod
    def open(cls, width: int, height: int) -> GridMap:
        return cls(width, height, (False,) * (width * height))

    @classmethod
    def from_rows(cls, rows: Sequence[str], passable: str = ".G") -> GridMap:
        height, width = len(rows), len(rows[0]) if rows else 0
        blocked = tuple(ch not in passable for row in rows for ch in row)
        return cls(width, height, blocked)

    def index(self, cell: Cell) -> int:
        return cell[1] * self.width + cell[0]

    def cell(self, index: int) -> Cell:
        return (index % self.width, index // self.width)

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def passable(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and not self.blocked[self.index(cell)]

    def neighbors(self, cell: Cell) -> Iterator[Cell]:
        x, y = cell
        for dx, dy in _MOVES:
            nxt = (x + dx, y + dy)
            if self.passable(nxt):
                yield nxt

    def adjacent(self, a: Cell, b: Cell) -> bool:
        return abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1 and self.passable(a) and self.passable(b)

    def free_cells(self) -> list[Cell]:
        return [self.cell(i) for i, b in enumerate(self.blocked) if not b]

    def distances_from(self, source: Cell) -> dict[Cell, int]:
        """BFS distances over passable cells."""
        dist = {source: 0}
        queue = deque([source])
        while queue:
            c = queue.popleft()
            for n in self.neighbors(c):
                if n not in dist:
                    dist[n] = dist[c] + 1
                    queue.append(n)
        return dist


@dataclass(frozen=True)
class AgentTask:
    agent_id: int
    start: Cell
    goal: Cell


@dataclass(frozen=True)
class MapfSolution:
    """Per-agent paths of ``(cell, timestep)`` tuples."""

    paths: tuple[tuple[PathEntry, ...], ...]

    def __post_init__(self):
        # normalise nested lists (e.g. from JSON) into hashable tuples
        object.__setattr__(
            self,
            "paths",
            tuple(tuple((tuple(c), int(t)) for c, t in p) for p in self.paths),
        )

    @property
    def n_agents(self) -> int:
        return len(self.paths)

    def last_index(self, agent: int) -> int:
        return len(self.paths[agent]) - 1

    def location_at(self, agent: int, t: int) -> Cell:
        """Where ``agent`` is at timestep ``t``; it stays at its goal afterwards."""
        path = self.paths[agent]
        loc = path[0][0]
        for cell, ts in path:
            if ts > t:
                break
            loc = cell
        return loc


def solution_cost(sol: MapfSolution) -> int:
    """Sum of travel times, the last timestep of every path."""
    return sum(p[-1][1] for p in sol.paths)


@dataclass(frozen=True)
class Violation:
    kind: str  # "vertex" | "follow" | "structure"
    agents: tuple[int, ...]
    cell: Cell | None = None
    timestep: int | None = None
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def of_kind(self, kind: str) -> list[Violation]:
        return [v for v in self.violations if v.kind == kind]


def _structure_violations(grid, tasks, sol) -> list[Violation]:
    out = []
    if len(sol.paths) != len(tasks):
        out.append(Violation("structure", (), detail=f"{len(sol.paths)} paths for {len(tasks)} agents"))
    starts, goals = defaultdict(list), defaultdict(list)
    for task in tasks:
        starts[task.start].append(task.agent_id)
        goals[task.goal].append(task.agent_id)
    for cell, ids in list(starts.items()) + list(goals.items()):
        if len(ids) > 1:
            out.append(Violation("structure", tuple(ids), cell, detail="shared start or goal"))
    for a, path in enumerate(sol.paths):
        if not path:
            out.append(Violation("structure", (a,), detail="empty path"))
            continue
        if path[0][1] != 0:
            out.append(Violation("structure", (a,), path[0][0], path[0][1], "path does not start at t=0"))
        for cell, t in path:
            if grid is not None and not grid.passable(cell):
                out.append(Violation("structure", (a,), cell, t, "cell blocked or out of bounds"))
        for (c0, t0), (c1, t1) in zip(path, path[1:]):
            if t1 <= t0:
                out.append(Violation("structure", (a,), c1, t1, "timesteps not strictly increasing"))
            if abs(c0[0] - c1[0]) + abs(c0[1] - c1[1]) != 1:
                out.append(Violation("structure", (a,), c1, t1, "consecutive cells not adjacent"))
        if a < len(tasks):
            if path[0][0] != tasks[a].start:
                out.append(Violation("structure", (a,), path[0][0], 0, "path does not begin at start"))
            if path[-1][0] != tasks[a].goal:
                out.append(Violation("structure", (a,), path[-1][0], path[-1][1], "path does not end at goal"))
    return out


def validate_solution(grid: GridMap | None, tasks: Sequence[AgentTask], sol: MapfSolution) -> ValidationReport:
    """Report structural problems plus vertex and follow collisions.

    Paths are expanded to per-timestep occupancy (agents wait implicitly
    between tuples and remain at their goals) up to the latest arrival.
    """
    violations = _structure_violations(grid, tasks, sol)
    paths = [p for p in sol.paths if p]
    if len(paths) != len(sol.paths):
        return ValidationReport(tuple(violations))

    horizon = max(p[-1][1] for p in sol.paths)
    # occupancy[t] = cell per agent
    occupancy = [[sol.location_at(a, t) for a in range(sol.n_agents)] for t in range(horizon + 1)]
    for t, row in enumerate(occupancy):
        seen = defaultdict(list)
        for a, cell in enumerate(row):
            seen[cell].append(a)
        for cell, ids in seen.items():
            if len(ids) > 1:
                violations.append(Violation("vertex", tuple(ids), cell, t))
        if t == 0:
            continue
        prev = occupancy[t - 1]
        left = defaultdict(list)
        for a in range(sol.n_agents):
            if prev[a] != row[a]:
                left[prev[a]].append(a)
        for a, cell in enumerate(row):
            if prev[a] != cell:
                for b in left.get(cell, ()):
                    if b != a:
                        violations.append(Violation("follow", (b, a), cell, t))
    return ValidationReport(tuple(violations))


class Instance(NamedTuple):
    grid: GridMap
    tasks: list[AgentTask]
    solution: MapfSolution


class _Reservations:
    """Occupancy of already-planned agents.

    Two agents may never be in the same cell within one timestep of each
    other; that rules out vertex collisions and agents following into a
    cell vacated in the same timestep.
    """

    def __init__(self):
        self.times: dict[Cell, set[int]] = defaultdict(set)
        self.parked: dict[Cell, int] = {}  # goal cell -> first timestep held forever
        self.last: dict[Cell, int] = defaultdict(lambda: -1)

    def add_path(self, steps: list[Cell]):
        for t, cell in enumerate(steps):
            self.times[cell].add(t)
            self.last[cell] = max(self.last[cell], t)
        self.parked[steps[-1]] = len(steps) - 1

    def blocked(self, cell: Cell, t: int) -> bool:
        held = self.parked.get(cell)
        if held is not None and t >= held - 1:
            return True
        ts = self.times.get(cell)
        return bool(ts) and (t in ts or t - 1 in ts or t + 1 in ts)

    def can_park(self, cell: Cell, t: int) -> bool:
        return self.last[cell] < t - 1 and cell not in self.parked


def _space_time_astar(grid, start, goal, res, pending_starts, max_t):
    """Low-level search over (cell, t). Returns per-timestep cells or None."""
    dist = grid.distances_from(goal)
    if start not in dist:
        return None

    def free(cell, t):
        if res.blocked(cell, t):
            return False
        return not (t <= 1 and cell in pending_starts)

    if not free(start, 0):
        return None
    # ties: smaller timestep, then smaller cell index
    heap = [(dist[start], 0, grid.index(start), start)]
    parent = {(start, 0): None}
    while heap:
        _, t, _, cell = heapq.heappop(heap)
        if cell == goal and res.can_park(cell, t):
            steps = []
            node = (cell, t)
            while node is not None:
                steps.append(node[0])
                node = parent[node]
            return steps[::-1]
        if t >= max_t:
            continue
        for nxt in (cell, *grid.neighbors(cell)):
            key = (nxt, t + 1)
            if key in parent or nxt not in dist or not free(nxt, t + 1):
                continue
            parent[key] = (cell, t)
            heapq.heappush(heap, (t + 1 + dist[nxt], t + 1, grid.index(nxt), nxt))
    return None


def compress_steps(steps: Sequence[Cell]) -> tuple[PathEntry, ...]:
    """Drop waits from a per-timestep cell sequence."""
    out = [(steps[0], 0)]
    for t in range(1, len(steps)):
        if steps[t] != steps[t - 1]:
            out.append((steps[t], t))
    return tuple(out)


def plan_prioritized(grid: GridMap, tasks: Sequence[AgentTask], max_t: int | None = None) -> MapfSolution | None:
    """Plan agents in id order against the reservations of earlier agents."""
    if max_t is None:
        max_t = 4 * grid.width * grid.height + 4 * len(tasks)
    res = _Reservations()
    paths = []
    for i, task in enumerate(tasks):
        pending = {t.start for t in tasks[i + 1:]}
        steps = _space_time_astar(grid, task.start, task.goal, res, pending, max_t)
        if steps is None:
            return None
        res.add_path(steps)
        paths.append(compress_steps(steps))
    return MapfSolution(tuple(paths))


def _largest_component(grid: GridMap) -> list[Cell]:
    seen: set[Cell] = set()
    best: list[Cell] = []
    for cell in grid.free_cells():
        if cell in seen:
            continue
        comp = list(grid.distances_from(cell))
        seen.update(comp)
        if len(comp) > len(best):
            best = comp
    return sorted(best, key=grid.index)


def generate_instance(
    seed: int,
    width: int,
    height: int,
    n_agents: int,
    obstacle_density: float = 0.0,
    max_attempts: int = 50,
) -> Instance:
    """Random solvable instance planned with prioritized planning.

    Deterministic in ``seed``. Start/goal pairs are redrawn on planning
    failure; obstacles are redrawn only when the free region is too small.
    """
    if not 0.0 <= obstacle_density < 1.0:
        raise ValueError("obstacle_density must lie in [0, 1)")
    if n_agents < 1:
        raise ValueError("need at least one agent")
    rng = random.Random(seed)
    n_cells = width * height
    grid = None
    for _ in range(max_attempts):
        if grid is None:
            blocked = set(rng.sample(range(n_cells), round(obstacle_density * n_cells)))
            grid = GridMap(width, height, tuple(i in blocked for i in range(n_cells)))
            region = _largest_component(grid)
            if len(region) < 2 * n_agents:
                grid = None
                continue
        cells = rng.sample(region, 2 * n_agents)
        tasks = [AgentTask(i, cells[2 * i], cells[2 * i + 1]) for i in range(n_agents)]
        sol = plan_prioritized(grid, tasks)
        if sol is not None:
            return Instance(grid, tasks, sol)
    raise UnsolvableError(max_attempts)
