"""Temporal plan graphs: construction, execution, longest paths.

Vertices carry global integer ids numbered agent by agent, so the
lexicographic order (agent, index) is plain integer order. Type-1 edges are
implicit: they join consecutive ids of one agent. Only Type-2 edges are
stored, as ``(tail, head)`` pairs of global ids.
"""

from __future__ import annotations

import bisect
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import _kernels
from .errors import CyclicGraphError, DeadlockError
from .mapf import Cell, MapfSolution

Edge = tuple[int, int]


@dataclass(frozen=True)
class Layout:
    """Vertex structure shared by a TPG and every STPG derived from it.

    ``locations[v]`` is the cell of vertex ``v``; a dummy vertex repeats the
    cell of the vertex it was spliced after. ``translation`` maps vertex ids
    of the layout this one was spliced from to ids here.
    """

    offsets: tuple[int, ...]
    locations: tuple[Cell | None, ...]
    dummy: tuple[bool, ...]
    translation: tuple[int, ...] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        n = self.offsets[-1]
        if len(self.locations) != n or len(self.dummy) != n:
            raise ValueError("per-vertex arrays disagree with offsets")
        if any(self.offsets[a + 1] <= self.offsets[a] for a in range(self.n_agents)):
            raise ValueError("every agent needs at least one vertex")

    @classmethod
    def from_lengths(cls, lengths: Sequence[int]) -> Layout:
        """Abstract layout with ``lengths[a]`` vertices per agent and no cells."""
        offsets = [0]
        for n in lengths:
            offsets.append(offsets[-1] + n)
        total = offsets[-1]
        return cls(tuple(offsets), (None,) * total, (False,) * total)

    @property
    def n_agents(self) -> int:
        return len(self.offsets) - 1

    @property
    def n_vertices(self) -> int:
        return self.offsets[-1]

    def vid(self, agent: int, index: int) -> int:
        v = self.offsets[agent] + index
        if not 0 <= index or v >= self.offsets[agent + 1]:
            raise IndexError(f"agent {agent} has no vertex {index}")
        return v

    def agent_index(self, v: int) -> tuple[int, int]:
        a = bisect.bisect_right(self.offsets, v) - 1
        return a, v - self.offsets[a]

    def last_index(self, agent: int) -> int:
        return self.offsets[agent + 1] - self.offsets[agent] - 1

    def goal(self, agent: int) -> int:
        return self.offsets[agent + 1] - 1

    def is_goal(self, v: int) -> bool:
        return v + 1 in self.offsets

    def is_initial(self, v: int) -> bool:
        return v in self.offsets[:-1]

    def arrival(self, v: int) -> int:
        """The vertex at which the agent entered the cell it occupies at ``v``."""
        while self.dummy[v]:
            v -= 1
        return v

    def departure(self, v: int) -> int:
        """The vertex at which the agent leaves the cell it occupies at ``v``."""
        v += 1
        while self.dummy[v]:
            v += 1
        return v

    def reversed_edge(self, edge: Edge) -> Edge:
        """Swap the passing order encoded by a Type-2 edge.

        ``(v^j_{s+1}, v^i_k)`` becomes ``(v^i_{k+1}, v^j_s)``; dummy vertices
        are skipped so the pair keeps meaning "leaves the cell before the
        other enters it".
        """
        tail, head = edge
        if self.is_goal(head):
            raise ValueError(f"cannot reverse an edge into a goal vertex: {edge}")
        return self.departure(head), self.arrival(tail - 1)

    @cached_property
    def agent_of(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_agents), np.diff(self.offsets))

    @cached_property
    def chain_next(self) -> np.ndarray:
        nxt = np.arange(1, self.n_vertices + 1, dtype=np.int64)
        nxt[np.asarray(self.offsets[1:], dtype=np.int64) - 1] = -1
        return nxt

    @cached_property
    def offsets_array(self) -> np.ndarray:
        return np.asarray(self.offsets, dtype=np.int64)

    @cached_property
    def goal_ids(self) -> np.ndarray:
        return self.offsets_array[1:] - 1


def edge_array(edges: Iterable[Edge]) -> np.ndarray:
    """Edges as a sorted ``(m, 2)`` int64 array (tail, head lexicographic)."""
    arr = np.array(sorted(edges), dtype=np.int64).reshape(-1, 2)
    return arr


def csr(n: int, keys: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(keys, kind="stable")
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(keys, minlength=n), out=ptr[1:])
    return ptr, np.ascontiguousarray(values[order], dtype=np.int64)


@dataclass(frozen=True)
class Tpg:
    layout: Layout
    type2: frozenset[Edge]

    @property
    def n_agents(self) -> int:
        return self.layout.n_agents

    @property
    def n_vertices(self) -> int:
        return self.layout.n_vertices

    @property
    def type1_edges(self) -> list[Edge]:
        return [(v, v + 1) for v in range(self.n_vertices) if not self.layout.is_goal(v)]

    def vertex(self, agent: int, index: int) -> int:
        return self.layout.vid(agent, index)

    @cached_property
    def _edges(self) -> np.ndarray:
        return edge_array(self.type2)

    @cached_property
    def in_csr(self) -> tuple[np.ndarray, np.ndarray]:
        e = self._edges
        return csr(self.n_vertices, e[:, 1], e[:, 0])

    @cached_property
    def out_csr(self) -> tuple[np.ndarray, np.ndarray]:
        e = self._edges
        return csr(self.n_vertices, e[:, 0], e[:, 1])

    @cached_property
    def in_neighbors(self) -> list[list[int]]:
        ptr, idx = self.in_csr
        ptr, idx = ptr.tolist(), idx.tolist()
        return [idx[ptr[v]:ptr[v + 1]] for v in range(self.n_vertices)]

    def with_edges(self, extra: Iterable[Edge]) -> Tpg:
        return Tpg(self.layout, self.type2 | frozenset(extra))


def layout_from_solution(sol: MapfSolution) -> Layout:
    offsets = [0]
    locations = []
    for path in sol.paths:
        offsets.append(offsets[-1] + len(path))
        locations.extend(c for c, _ in path)
    return Layout(tuple(offsets), tuple(locations), (False,) * len(locations))


def build_tpg(sol: MapfSolution) -> Tpg:
    """TPG of a solution: ``(v^j_{s+1}, v^i_k)`` whenever j leaves a cell before i enters it."""
    layout = layout_from_solution(sol)
    visits = defaultdict(list)  # cell -> [(agent, index, t)]
    for a, path in enumerate(sol.paths):
        for k, (cell, t) in enumerate(path):
            visits[cell].append((a, k, t))
    edges = set()
    for entries in visits.values():
        for j, s, _ in entries:
            if s == len(sol.paths[j]) - 1:
                continue
            leave_t = sol.paths[j][s + 1][1]
            for i, k, t in entries:
                if i != j and leave_t < t:
                    edges.add((layout.vid(j, s + 1), layout.vid(i, k)))
    return Tpg(layout, frozenset(edges))


@dataclass
class ExecutionState:
    """Per-agent index of the most recently satisfied vertex, plus the cost counter.

    Vertex ``v^i_k`` is satisfied iff ``k <= progress[i]``.
    """

    progress: list[int]
    cost: int = 0

    @classmethod
    def initial(cls, layout: Layout) -> ExecutionState:
        return cls([0] * layout.n_agents)

    def copy(self) -> ExecutionState:
        return ExecutionState(list(self.progress), self.cost)

    def is_satisfied(self, layout: Layout, v: int) -> bool:
        a, k = layout.agent_index(v)
        return k <= self.progress[a]

    def satisfied(self, layout: Layout) -> list[bool]:
        return [
            k <= self.progress[a]
            for a in range(layout.n_agents)
            for k in range(layout.last_index(a) + 1)
        ]

    def finished(self, layout: Layout) -> bool:
        return all(p == layout.last_index(a) for a, p in enumerate(self.progress))


class ExecResult(NamedTuple):
    cost: int
    satisfy_iteration: np.ndarray


def exec_tpg(g: Tpg, init: ExecutionState | None = None) -> ExecResult:
    """Execute to completion; ``satisfy_iteration[v]`` is 0 for initially satisfied vertices.

    The returned cost includes ``init.cost``.
    """
    progress = init.progress if init is not None else [0] * g.n_agents
    ptr, idx = g.in_csr
    cost, sat, status = _kernels.exec_from(
        g.layout.offsets_array, ptr, idx, np.asarray(progress, dtype=np.int64)
    )
    if status:
        raise DeadlockError()
    return ExecResult(cost + (init.cost if init is not None else 0), np.asarray(sat, dtype=np.int64))


def step_exec(g: Tpg, state: ExecutionState) -> list[int]:
    """One iteration of the execution loop, mutating ``state``.

    Returns the vertices satisfied this iteration.
    """
    layout = g.layout
    ins = g.in_neighbors
    ready = []
    for a, k in enumerate(state.progress):
        if k == layout.last_index(a):
            continue
        state.cost += 1
        v = layout.offsets[a] + k + 1
        if all(state.is_satisfied(layout, u) for u in ins[v]):
            ready.append(a)
    if not ready and not state.finished(layout):
        raise DeadlockError()
    for a in ready:
        state.progress[a] += 1
    return [layout.offsets[a] + state.progress[a] for a in ready]


def has_cycle(g: Tpg) -> bool:
    ptr, idx = g.out_csr
    return bool(_kernels.has_cycle(g.layout.chain_next, ptr, idx))


def longest_paths(g: Tpg) -> np.ndarray:
    """Longest-path length to every vertex from the in-degree-zero vertices."""
    ptr, idx = g.out_csr
    lp, status = _kernels.longest_paths(g.layout.chain_next, ptr, idx)
    if status:
        raise CyclicGraphError()
    return np.asarray(lp, dtype=np.int64)


def tpg_cost_via_lp(g: Tpg) -> int:
    return int(longest_paths(g)[g.layout.goal_ids].sum())


def replay_solution(g: Tpg, satisfy_iteration: Sequence[int]) -> MapfSolution:
    """Agent motion implied by an execution, as a solution.

    Dummy vertices are waits and produce no tuple.
    """
    layout = g.layout
    paths = []
    for a in range(layout.n_agents):
        path = []
        for v in range(layout.offsets[a], layout.offsets[a + 1]):
            if not layout.dummy[v]:
                path.append((layout.locations[v], int(satisfy_iteration[v])))
        paths.append(tuple(path))
    return MapfSolution(tuple(paths))


def tpg_to_json(g: Tpg) -> dict:
    layout = g.layout
    agents = []
    for a in range(layout.n_agents):
        verts = []
        for k in range(layout.last_index(a) + 1):
            v = layout.offsets[a] + k
            loc = layout.locations[v]
            verts.append({"index": k, "loc": None if loc is None else list(loc), "dummy": layout.dummy[v]})
        agents.append({"id": a, "vertices": verts})
    pair = lambda v: list(layout.agent_index(v))  # noqa: E731
    return {
        "agents": agents,
        "type1": [[pair(u), pair(v)] for u, v in g.type1_edges],
        "type2": [[pair(u), pair(v)] for u, v in sorted(g.type2)],
    }


def tpg_from_json(data: dict) -> Tpg:
    agents = sorted(data["agents"], key=lambda a: a["id"])
    offsets = [0]
    locations, dummy = [], []
    for a in agents:
        verts = sorted(a["vertices"], key=lambda v: v["index"])
        offsets.append(offsets[-1] + len(verts))
        for v in verts:
            locations.append(None if v["loc"] is None else tuple(v["loc"]))
            dummy.append(bool(v.get("dummy", False)))
    layout = Layout(tuple(offsets), tuple(locations), tuple(dummy))
    edges = frozenset((layout.vid(*u), layout.vid(*v)) for u, v in data["type2"])
    return Tpg(layout, edges)
