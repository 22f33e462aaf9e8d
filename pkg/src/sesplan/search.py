"""Switchable Edge Search and its baselines.

:func:`ses_search` is an A* over STPGs: every node is ordered by the
execution cost of its reduced TPG (its partial cost, a lower bound on any
TPG it can still produce). Expanding a node resolves one switchable edge
both ways; children whose new edge closes a cycle are pruned. The two
module sets differ in how they find that edge and compute the bound:

* :class:`Eses` simulates execution and branches on the first switchable
  edge an agent is about to touch.
* :class:`Gses` computes longest paths and branches on an edge whose
  direction disagrees with them, stopping early when none does.
"""

from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import _kernels
from .errors import CyclicGraphError, DeadlockError, NoSolutionError, SearchTimeout, TooManySwitchableError
from .stpg import Stpg, fix_all, fix_edge, reverse_edge
from .tpg import Edge, Tpg, exec_tpg, has_cycle, longest_paths


@dataclass
class SearchStats:
    explored: int = 0  # nodes popped
    pruned: int = 0  # children rejected by cycle detection
    generated: int = 0  # children pushed
    expansions: int = 0
    terminated_early: bool = False

    def as_dict(self) -> dict:
        return {
            "explored": self.explored,
            "pruned": self.pruned,
            "generated": self.generated,
            "expansions": self.expansions,
            "terminated_early": self.terminated_early,
        }


class Decision(NamedTuple):
    edge: Edge  # the switchable edge resolved
    action: str  # "fix" | "reverse"
    added: Edge  # the non-switchable edge that resulted


@dataclass(frozen=True)
class SearchNode:
    stpg: Stpg
    aux: object
    g: int
    h: int
    decisions: tuple[Decision, ...] = field(default=(), repr=False)

    @property
    def f(self) -> int:
        return self.g + self.h


@dataclass
class SearchResult:
    tpg: Tpg
    cost: int
    stats: SearchStats
    decisions: tuple[Decision, ...]


def cycle_detection(g: Stpg, new_edge: Edge) -> bool:
    """True iff the reduced graph has a cycle through ``new_edge`` (DFS from its head)."""
    u, v = new_edge
    ptr, idx = g.reduced.out_csr
    return bool(_kernels.reaches(g.layout.chain_next, ptr, idx, v, u))


class Eses:
    """Execution-based modules.

    The auxiliary value is a tuple with, per agent, the index of its most
    recently satisfied vertex. Branch stops before an agent's next vertex
    touches a switchable edge: as the edge's head or tail, or as the cell
    entry a reversal would make the edge wait for. Stopping only at heads
    and tails would let the simulation move an agent into the shared cell
    before the order was decided, and the reversed child would then be
    evaluated from a state its own precedence forbids.
    """

    name = "eses"

    def __init__(self, guard_arrival: bool = True):
        self.guard_arrival = guard_arrival

    def initial_aux(self, root: Stpg):
        return (0,) * root.n_agents

    def heuristic(self, g: Stpg, aux):
        ptr, idx = g.reduced.in_csr
        cost, _, status = _kernels.exec_from(g.layout.offsets_array, ptr, idx, np.asarray(aux, dtype=np.int64))
        if status:
            raise DeadlockError("deadlock in reduction")
        return int(cost), aux

    def _touching(self, g: Stpg) -> tuple[np.ndarray, dict[int, Edge]]:
        layout = g.layout
        owner: dict[int, Edge] = {}
        for tail, head in g.switchable_sorted.tolist():
            touched = (tail, head, layout.arrival(tail - 1)) if self.guard_arrival else (tail, head)
            for v in touched:
                owner.setdefault(v, (tail, head))
        flags = np.zeros(layout.n_vertices, dtype=np.uint8)
        if owner:
            flags[list(owner)] = 1
        return flags, owner

    def branch(self, g: Stpg, aux):
        flags, owner = self._touching(g)
        ptr, idx = g.reduced.in_csr
        progress, cost, stop, status = _kernels.eses_advance(
            g.layout.offsets_array, ptr, idx, flags, np.asarray(aux, dtype=np.int64)
        )
        if status:
            raise DeadlockError("deadlock in reduction")
        edge = owner[stop] if stop >= 0 else None
        return tuple(progress), int(cost), edge, g


class Gses:
    """Graph-based modules; the auxiliary value is the longest-path array."""

    name = "gses"

    def initial_aux(self, root: Stpg):
        return None

    def heuristic(self, g: Stpg, aux):
        lp = longest_paths(g.reduced)
        return int(lp[g.layout.goal_ids].sum()), lp

    def branch(self, g: Stpg, lp):
        sw = g.switchable_sorted
        if len(sw):
            bad = np.flatnonzero(lp[sw[:, 0]] >= lp[sw[:, 1]])
            if bad.size:
                tail, head = sw[bad[0]].tolist()
                return lp, 0, (tail, head), g
        return lp, 0, None, fix_all(g)


MODULES = {"eses": Eses, "gses": Gses}


def ses_search(
    root: Stpg,
    modules,
    root_aux=None,
    *,
    deadline: float | None = None,
    trace: Callable[[dict], None] | None = None,
    on_pop: Callable[[SearchNode], None] | None = None,
) -> SearchResult:
    """Find a minimum-cost TPG producible from ``root``.

    ``deadline`` is a ``time.monotonic()`` value. ``trace`` receives one
    dict per expansion; ``on_pop`` sees every popped node.
    """
    layout = root.layout
    stats = SearchStats()
    aux = modules.initial_aux(root) if root_aux is None else root_aux
    h, aux = modules.heuristic(root, aux)
    tick = itertools.count()
    # ties: smaller f, then larger g, then insertion order
    queue = [(h, 0, next(tick), SearchNode(root, aux, 0, h))]
    while queue:
        if deadline is not None and time.monotonic() > deadline:
            raise SearchTimeout(stats)
        node = heapq.heappop(queue)[3]
        stats.explored += 1
        if on_pop is not None:
            on_pop(node)
        child_aux, g_delta, edge, resolved = modules.branch(node.stpg, node.aux)
        if edge is None:
            rest = tuple(Decision(e, "fix", e) for e in sorted(node.stpg.switchable))
            stats.terminated_early = bool(rest)
            if trace is not None:
                trace(_trace_record(layout, node, None, ()))
            return SearchResult(resolved.reduced, node.f, stats, node.decisions + rest)

        stats.expansions += 1
        g = node.g + g_delta
        reversed_ = node.stpg.reverse_of(edge)
        pruned = []
        for action, child, added in (
            ("fix", fix_edge(node.stpg, edge), edge),
            ("reverse", reverse_edge(node.stpg, edge), reversed_),
        ):
            if cycle_detection(child, added):
                stats.pruned += 1
                pruned.append(action)
                continue
            ch, caux = modules.heuristic(child, child_aux)
            decisions = node.decisions + (Decision(edge, action, added),)
            heapq.heappush(queue, (g + ch, -g, next(tick), SearchNode(child, caux, g, ch, decisions)))
            stats.generated += 1
        if trace is not None:
            trace(_trace_record(layout, node, edge, pruned))
    raise NoSolutionError()


def _trace_record(layout, node: SearchNode, edge, pruned) -> dict:
    return {
        "f": node.f,
        "g": node.g,
        "h": node.h,
        "switchable": len(node.stpg.switchable),
        "edge": None if edge is None else [list(layout.agent_index(edge[0])), list(layout.agent_index(edge[1]))],
        "pruned_fix": "fix" in pruned,
        "pruned_reverse": "reverse" in pruned,
    }


def naive_fix_all(root: Stpg) -> Tpg:
    """Keep every original passing order."""
    return fix_all(root).reduced


class OracleResult(NamedTuple):
    cost: int
    assignment: tuple[str, ...]  # per switchable edge in sorted order
    tpg: Tpg


def brute_force_optimal(root: Stpg, cap: int = 20) -> OracleResult:
    """Try all 2^m fix/reverse assignments; keep the cheapest deadlock-free one.

    Ties go to the lexicographically first assignment, "fix" before "reverse".
    """
    edges = [tuple(e) for e in root.switchable_sorted.tolist()]
    if len(edges) > cap:
        raise TooManySwitchableError(len(edges), cap)
    rev = [root.reverse_of(e) for e in edges]
    layout = root.layout
    if any(layout.is_initial(v) for _, v in itertools.chain(root.nonswitchable, edges, rev)):
        # execution cannot see a cycle through an initial vertex, so test each graph directly
        return _enumerate_with_cycle_check(root, edges, rev)
    ptr, idx = root.reduced.in_csr
    as_arr = lambda xs: np.asarray(xs, dtype=np.int64).reshape(-1)  # noqa: E731
    best, mask = _kernels.brute_force(
        root.layout.offsets_array, ptr, idx,
        as_arr([e[0] for e in edges]), as_arr([e[1] for e in edges]),
        as_arr([e[0] for e in rev]), as_arr([e[1] for e in rev]),
    )
    if best < 0:
        raise NoSolutionError()
    m = len(edges)
    assignment = tuple("reverse" if (mask >> (m - 1 - i)) & 1 else "fix" for i in range(m))
    chosen = [r if a == "reverse" else e for e, r, a in zip(edges, rev, assignment)]
    return OracleResult(int(best), assignment, root.reduced.with_edges(chosen))


def _enumerate_with_cycle_check(root: Stpg, edges, rev) -> OracleResult:
    best = None
    for choice in itertools.product(("fix", "reverse"), repeat=len(edges)):
        g = root.reduced.with_edges(r if c == "reverse" else e for e, r, c in zip(edges, rev, choice))
        if has_cycle(g):
            continue
        cost = exec_tpg(g).cost
        if best is None or cost < best.cost:
            best = OracleResult(cost, choice, g)
    if best is None:
        raise NoSolutionError()
    return best


ALGORITHMS = ("eses", "gses", "naive", "oracle")


def solve(root: Stpg, algo: str, *, deadline: float | None = None, oracle_cap: int = 20,
          trace: Callable[[dict], None] | None = None) -> SearchResult:
    """Run one replanning algorithm on a root and report it uniformly."""
    if algo in MODULES:
        return ses_search(root, MODULES[algo](), deadline=deadline, trace=trace)
    if algo == "naive":
        tpg = naive_fix_all(root)
        decisions = tuple(Decision(e, "fix", e) for e in sorted(root.switchable))
        return SearchResult(tpg, exec_tpg(tpg).cost, SearchStats(), decisions)
    if algo == "oracle":
        res = brute_force_optimal(root, oracle_cap)
        edges = sorted(root.switchable)
        decisions = tuple(
            Decision(e, a, root.reverse_of(e) if a == "reverse" else e) for e, a in zip(edges, res.assignment)
        )
        return SearchResult(res.tpg, res.cost, SearchStats(), decisions)
    raise ValueError(f"unknown algorithm {algo!r}; expected one of {ALGORITHMS}")


__all__ = [
    "ALGORITHMS",
    "CyclicGraphError",
    "Decision",
    "Eses",
    "Gses",
    "OracleResult",
    "SearchNode",
    "SearchResult",
    "SearchStats",
    "brute_force_optimal",
    "cycle_detection",
    "naive_fix_all",
    "ses_search",
    "solve",
]
