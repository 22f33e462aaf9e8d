"""Random instance and graph factories shared by the test modules."""

from __future__ import annotations

import random

from sesplan.mapf import generate_instance
from sesplan.sim import replan_root
from sesplan.stpg import DelayEvent, Stpg
from sesplan.tpg import ExecutionState, Layout, Tpg, build_tpg, step_exec

ACCEPTANCE_LINES: list[str] = []


def report(name: str, ok: bool, detail: str, *, soft: bool = False) -> bool:
    """Record and print one acceptance line."""
    status = "PASS" if ok else "WARN" if soft else "FAIL"
    line = f"{status} {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def random_layout(rng: random.Random, n_agents: int, max_len: int) -> Layout:
    return Layout.from_lengths([rng.randint(1, max_len) for _ in range(n_agents)])


def random_acyclic_tpg(rng: random.Random, n_agents=3, max_len=7, n_edges=8) -> Tpg:
    """Edges only go forward in a hidden per-vertex time, so the graph is a DAG.

    No edge enters an initial vertex: execution treats those as already
    satisfied, which only agrees with the graph when they have no in-edges.
    """
    layout = random_layout(rng, n_agents, max_len)
    when = []
    for a in range(n_agents):
        t = rng.randint(0, 3)
        for _ in range(layout.last_index(a) + 1):
            when.append(t)
            t += rng.randint(1, 3)
    edges = set()
    for _ in range(n_edges):
        u, v = rng.randrange(layout.n_vertices), rng.randrange(layout.n_vertices)
        if layout.agent_of[u] != layout.agent_of[v] and not layout.is_initial(v) and when[u] < when[v]:
            edges.add((u, v))
    return Tpg(layout, frozenset(edges))


def random_augmented_tpg(rng: random.Random, n_agents=3, max_len=6, n_edges=6) -> Tpg:
    """Arbitrary inter-agent edges (cycles welcome), none into initial vertices."""
    layout = random_layout(rng, n_agents, max_len)
    edges = set()
    for _ in range(n_edges):
        u, v = rng.randrange(layout.n_vertices), rng.randrange(layout.n_vertices)
        if layout.agent_of[u] != layout.agent_of[v] and not layout.is_initial(v):
            edges.add((u, v))
    return Tpg(layout, frozenset(edges))


def random_instance(seed: int, *, size=(4, 6), agents=(3, 5), density=0.1):
    rng = random.Random(seed)
    w = rng.randint(*size)
    h = rng.randint(*size)
    n = rng.randint(*agents)
    return generate_instance(seed, w, h, n, density)


def halted_state(g: Tpg, iterations: int) -> ExecutionState:
    state = ExecutionState.initial(g.layout)
    for _ in range(iterations):
        if state.finished(g.layout):
            break
        step_exec(g, state)
    return state


def random_root(seed: int, *, max_switchable: int | None = 12, min_switchable: int = 0, **kw):
    """A replanning root from a random instance, a random halt and random delays.

    Returns ``(instance, root, state)`` or None when the draw has no agent
    left to delay or too many switchable edges.
    """
    rng = random.Random(seed * 7919 + 1)
    inst = random_instance(seed, **kw)
    g = build_tpg(inst.solution)
    t = rng.randint(0, max(0, max(p[-1][1] for p in inst.solution.paths) // 3))
    state = halted_state(g, t)
    open_ = [a for a, k in enumerate(state.progress) if k < g.layout.last_index(a)]
    if not open_:
        return None
    chosen = sorted(rng.sample(open_, rng.randint(1, len(open_))))
    delays = [DelayEvent(a, state.progress[a], rng.randint(2, 5)) for a in chosen]
    root, state, _ = replan_root(g, delays, t)
    if max_switchable is not None and len(root.switchable) > max_switchable:
        return None
    if len(root.switchable) < min_switchable:
        return None
    return inst, root, state


def roots(count: int, start=0, **kw):
    """The first ``count`` usable roots from consecutive seeds."""
    out, seed = [], start
    while len(out) < count:
        r = random_root(seed, **kw)
        if r is not None:
            out.append(r)
        seed += 1
        assert seed - start < 50 * count, "root generator rarely succeeds"
    return out


def two_agent_reconstruction():
    """Two agents with five vertices each and two switchable edges, no fixed ones.

    Edges (0,3)->(1,1) and (1,3)->(0,2). Fixing the first costs 11 and
    reversing it costs 9; reversing the second as well closes a cycle, so
    the optimum is 10.
    """
    layout = Layout.from_lengths([5, 5])
    e1 = (layout.vid(0, 3), layout.vid(1, 1))
    e2 = (layout.vid(1, 3), layout.vid(0, 2))
    return Stpg(layout, frozenset({e1, e2}), frozenset()), e1, e2
