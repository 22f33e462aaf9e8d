"""Switchable TPGs and their construction from a delayed execution."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidStateError, NotSwitchableError
from .tpg import Edge, ExecutionState, Layout, Tpg, edge_array, tpg_from_json, tpg_to_json


@dataclass(frozen=True)
class Stpg:
    """Type-2 edges split into switchable and non-switchable sets.

    Children made by :func:`fix_edge` / :func:`reverse_edge` share the
    layout with their parent and copy only the two edge sets.
    """

    layout: Layout
    switchable: frozenset[Edge]
    nonswitchable: frozenset[Edge]

    def __post_init__(self):
        if self.switchable & self.nonswitchable:
            raise ValueError("switchable and non-switchable edges overlap")

    @classmethod
    def from_tpg(cls, g: Tpg, switchable: Iterable[Edge] = ()) -> Stpg:
        sw = frozenset(switchable)
        return cls(g.layout, sw, g.type2 - sw)

    @property
    def n_agents(self) -> int:
        return self.layout.n_agents

    @cached_property
    def switchable_sorted(self) -> np.ndarray:
        return edge_array(self.switchable)

    @cached_property
    def reduced(self) -> Tpg:
        return Tpg(self.layout, self.nonswitchable)

    def reverse_of(self, edge: Edge) -> Edge:
        return self.layout.reversed_edge(edge)


def reduce(g: Stpg) -> Tpg:
    """The TPG without any switchable edge."""
    return g.reduced


def fix_edge(g: Stpg, e: Edge) -> Stpg:
    if e not in g.switchable:
        raise NotSwitchableError(e)
    return Stpg(g.layout, g.switchable - {e}, g.nonswitchable | {e})


def reverse_edge(g: Stpg, e: Edge) -> Stpg:
    if e not in g.switchable:
        raise NotSwitchableError(e)
    return Stpg(g.layout, g.switchable - {e}, g.nonswitchable | {g.reverse_of(e)})


def fix_all(g: Stpg) -> Stpg:
    return Stpg(g.layout, frozenset(), g.nonswitchable | g.switchable)


@dataclass(frozen=True)
class DelayEvent:
    """Agent ``agent`` stalls for ``length`` timesteps at vertex index ``current_index``."""

    agent: int
    current_index: int
    length: int

    def __post_init__(self):
        if self.length < 1:
            raise ValueError(f"delay length must be >= 1, got {self.length}")
        if self.current_index < 0 or self.agent < 0:
            raise ValueError("delay agent and index must be non-negative")

    def to_json(self) -> dict:
        return {"agent": self.agent, "at_index": self.current_index, "delta": self.length}

    @classmethod
    def from_json(cls, d: dict) -> DelayEvent:
        return cls(int(d["agent"]), int(d["at_index"]), int(d["delta"]))


def parse_delays(data) -> tuple[int | None, list[DelayEvent]]:
    """Accept a bare delay list or ``{"timestep": T, "delays": [...]}``."""
    if isinstance(data, str):
        data = json.loads(data)
    timestep = None
    if isinstance(data, dict):
        timestep = data.get("timestep")
        data = data.get("delays", [])
    if not isinstance(data, list):
        raise ValueError("delays must be a list")
    return timestep, [DelayEvent.from_json(d) for d in data]


def switchable_predicate(layout: Layout, state: ExecutionState, edge: Edge, *, guard_occupied: bool = True) -> bool:
    """Whether a Type-2 edge stays open for reordering.

    An edge into a goal vertex never does. Otherwise, with
    ``guard_occupied`` off, the edge is switchable while its tail is
    unsatisfied. With it on (the default) the tail agent must also not have
    entered the shared cell yet, since a reversal would then route another
    agent through the cell it stands on.
    """
    tail, head = edge
    if layout.is_goal(head):
        return False
    probe = layout.arrival(tail - 1) if guard_occupied else tail
    return not state.is_satisfied(layout, probe)


def check_state(g: Tpg, state: ExecutionState):
    layout = g.layout
    if len(state.progress) != layout.n_agents:
        raise InvalidStateError("progress length differs from agent count")
    for a, k in enumerate(state.progress):
        if not 0 <= k <= layout.last_index(a):
            raise InvalidStateError(f"agent {a} progress {k} out of range")
    for u, v in g.type2:
        if state.is_satisfied(layout, v) and not state.is_satisfied(layout, u):
            raise InvalidStateError(f"satisfied vertex {layout.agent_index(v)} has unsatisfied in-neighbour")


def splice_dummies(layout: Layout, delays: Sequence[DelayEvent]) -> Layout:
    """Insert ``length`` dummies after each delayed agent's current vertex."""
    extra = {d.agent: (d.current_index, d.length) for d in delays}
    offsets = [0]
    locations, dummy, translation = [], [], []
    for a in range(layout.n_agents):
        lo, hi = layout.offsets[a], layout.offsets[a + 1]
        for k, v in enumerate(range(lo, hi)):
            translation.append(len(locations))
            locations.append(layout.locations[v])
            dummy.append(layout.dummy[v])
            if a in extra and extra[a][0] == k:
                locations.extend([layout.locations[v]] * extra[a][1])
                dummy.extend([True] * extra[a][1])
        offsets.append(len(locations))
    return Layout(tuple(offsets), tuple(locations), tuple(dummy), tuple(translation))


def construct_stpg(
    g0: Tpg,
    state: ExecutionState,
    delays: Sequence[DelayEvent],
    *,
    guard_occupied: bool = True,
) -> tuple[Stpg, ExecutionState]:
    """Build the replanning root from a TPG under execution and the delays striking now.

    Returns the STPG over the spliced layout and the execution state mapped
    onto it (dummies start unsatisfied).
    """
    layout = g0.layout
    check_state(g0, state)
    seen = set()
    for d in delays:
        if d.agent >= layout.n_agents:
            raise InvalidStateError(f"unknown agent {d.agent}")
        if d.agent in seen:
            raise InvalidStateError(f"agent {d.agent} delayed twice")
        seen.add(d.agent)
        if d.current_index >= layout.last_index(d.agent):
            raise InvalidStateError(f"agent {d.agent} is already at its goal")
        if state.progress[d.agent] != d.current_index:
            raise InvalidStateError(
                f"agent {d.agent} is at index {state.progress[d.agent]}, delay says {d.current_index}"
            )

    switchable, fixed = set(), set()
    for e in g0.type2:
        (switchable if switchable_predicate(layout, state, e, guard_occupied=guard_occupied) else fixed).add(e)

    delays = sorted(delays, key=lambda d: d.agent)
    new_layout = splice_dummies(layout, delays) if delays else layout
    tr = new_layout.translation if delays else None
    if tr is not None:
        switchable = {(tr[u], tr[v]) for u, v in switchable}
        fixed = {(tr[u], tr[v]) for u, v in fixed}
    new_state = ExecutionState(list(state.progress), state.cost)
    for a, k in enumerate(new_state.progress):
        # dummies sit strictly after the frontier, so indices up to it are unchanged
        assert tr is None or tr[layout.offsets[a] + k] == new_layout.offsets[a] + k
    return Stpg(new_layout, frozenset(switchable), frozenset(fixed)), new_state


def stpg_to_json(g: Stpg) -> dict:
    """Tpg JSON of all Type-2 edges plus a ``switchable`` list of the open ones."""
    data = tpg_to_json(Tpg(g.layout, g.switchable | g.nonswitchable))
    pair = lambda v: list(g.layout.agent_index(v))  # noqa: E731
    data["switchable"] = [[pair(u), pair(v)] for u, v in sorted(g.switchable)]
    return data


def stpg_from_json(data: dict) -> Stpg:
    g = tpg_from_json(data)
    sw = frozenset((g.layout.vid(*u), g.layout.vid(*v)) for u, v in data.get("switchable", []))
    if not sw <= g.type2:
        raise ValueError("switchable edges must also be listed under type2")
    return Stpg.from_tpg(g, sw)
