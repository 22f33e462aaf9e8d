import itertools
import json
import time

import numpy as np
import pytest

from helpers import two_agent_reconstruction, roots
from sesplan.errors import NoSolutionError, SearchTimeout, TooManySwitchableError
from sesplan.mapf import validate_solution
from sesplan.search import (
    Eses,
    Gses,
    brute_force_optimal,
    cycle_detection,
    naive_fix_all,
    ses_search,
    solve,
)
from sesplan.stpg import Stpg, fix_all, fix_edge, reverse_edge
from sesplan.tpg import ExecutionState, Layout, Tpg, exec_tpg, has_cycle, longest_paths, replay_solution, step_exec

MODULES = [Eses, Gses]


@pytest.fixture(scope="module")
def oracle_roots():
    return roots(200, min_switchable=1)


def popped(root, modules):
    nodes = []
    result = ses_search(root, modules, on_pop=nodes.append)
    return result, nodes


def exhaustive_optimum(root):
    """Plain itertools enumeration with the full execution procedure."""
    edges = sorted(root.switchable)
    best = None
    for choice in itertools.product((False, True), repeat=len(edges)):
        extra = [root.reverse_of(e) if rev else e for e, rev in zip(edges, choice)]
        g = root.reduced.with_edges(extra)
        if has_cycle(g):
            continue
        cost = exec_tpg(g).cost
        if best is None or cost < best[0]:
            best = (cost, tuple("reverse" if c else "fix" for c in choice))
    return best


class TestTwoAgentReconstruction:
    @pytest.mark.parametrize("modules", MODULES)
    def test_reconstructed_example_optimum_and_pruning(self, modules):
        root, e1, e2 = two_agent_reconstruction()
        trace = []
        result, nodes = popped(root, modules())
        ses_search(root, modules(), trace=trace.append)
        assert result.cost == 10
        assert exec_tpg(result.tpg).cost == 10
        # the root branches on e1; the reversed child then branches on e2, whose reversal is pruned
        assert [r["pruned_reverse"] for r in trace[:2]] == [False, True]
        assert trace[0]["edge"] == [[0, 3], [1, 1]] and trace[1]["edge"] == [[1, 3], [0, 2]]
        assert result.stats.pruned == 1
        # the fixed child of the root (partial cost 11) is never expanded
        assert all(not n.decisions or n.decisions[0].action == "reverse" for n in nodes)
        assert [d.action for d in result.decisions] == ["reverse", "fix"]

    def test_reconstructed_example_partial_costs(self):
        root, e1, e2 = two_agent_reconstruction()
        assert exec_tpg(root.reduced).cost == 8
        assert exec_tpg(fix_edge(root, e1).reduced).cost == 11
        assert exec_tpg(reverse_edge(root, e1).reduced).cost == 9

    def test_reconstructed_example_eses_horizon(self):
        root, e1, _ = two_agent_reconstruction()
        aux, g_delta, edge, _ = Eses().branch(root, (0, 0))
        assert edge == e1 and aux == (0, 0) and g_delta == 0

    def test_reconstructed_example_cycle(self):
        root, e1, e2 = two_agent_reconstruction()
        child = reverse_edge(reverse_edge(root, e1), e2)
        assert cycle_detection(child, root.reverse_of(e2))

    def test_reconstructed_example_oracle(self):
        root, _, _ = two_agent_reconstruction()
        assert brute_force_optimal(root).cost == 10
        assert solve(root, "oracle").cost == 10


class TestFramework:
    @pytest.mark.parametrize("modules", MODULES)
    def test_empty_switchable(self, modules):
        _, root, _ = roots(1, max_switchable=0)[0]
        result = ses_search(root, modules())
        assert result.stats.explored == 1
        assert result.tpg == root.reduced
        assert result.cost == exec_tpg(root.reduced).cost

    @pytest.mark.parametrize("modules", MODULES)
    def test_matches_brute_force(self, modules, oracle_roots):
        for _, root, _ in oracle_roots:
            assert ses_search(root, modules()).cost == brute_force_optimal(root).cost

    @pytest.mark.parametrize("modules", MODULES)
    def test_node_invariants(self, modules, oracle_roots):
        for _, root, _ in oracle_roots[:80]:
            result, nodes = popped(root, modules())
            for n in nodes:
                partial = exec_tpg(n.stpg.reduced).cost
                assert n.g + n.h == partial
                assert n.f <= result.cost
                assert not has_cycle(n.stpg.reduced)
            assert not has_cycle(result.tpg)
            assert exec_tpg(result.tpg).cost == result.cost
            s = result.stats
            assert s.explored <= s.generated + 1
            assert s.pruned + s.generated == 2 * s.expansions

    def test_eses_f_nondecreasing_and_aux_monotone(self, oracle_roots):
        for _, root, _ in oracle_roots[:80]:
            _, nodes = popped(root, Eses())
            fs = [n.f for n in nodes]
            assert fs == sorted(fs)
            aux = {n.decisions: n.aux for n in nodes}
            for n in nodes:
                if n.decisions:
                    parent = aux.get(n.decisions[:-1])
                    if parent is not None:
                        assert all(c >= p for c, p in zip(n.aux, parent))

    def test_eses_g_matches_double_execution(self, oracle_roots):
        """g equals the cost counter of executing the node's reduction until its aux."""

        def cost_until(g: Tpg, target):
            state = ExecutionState.initial(g.layout)
            while state.progress != list(target):
                step_exec(g, state)
                assert all(p <= t for p, t in zip(state.progress, target))
            return state.cost

        for _, root, _ in oracle_roots[:80]:
            _, nodes = popped(root, Eses())
            for n in nodes:
                red = n.stpg.reduced
                assert cost_until(red, n.aux) == n.g
                aux, g_delta, _, _ = Eses().branch(n.stpg, n.aux)
                assert cost_until(red, aux) - cost_until(red, n.aux) == g_delta

    def test_gses_aux_is_longest_paths(self, oracle_roots):
        for _, root, _ in oracle_roots[:60]:
            _, nodes = popped(root, Gses())
            for n in nodes:
                assert n.g == 0
                assert np.array_equal(n.aux, longest_paths(n.stpg.reduced))

    @pytest.mark.parametrize("modules", MODULES)
    def test_returned_plan_collision_free(self, modules, oracle_roots):
        for inst, root, _ in oracle_roots[:80]:
            tpg = ses_search(root, modules()).tpg
            replay = replay_solution(tpg, exec_tpg(tpg).satisfy_iteration)
            assert validate_solution(inst.grid, inst.tasks, replay).ok

    def test_cycle_detection_matches_full_check(self, oracle_roots):
        checked = 0
        for _, root, _ in oracle_roots:
            frontier = [root]
            while frontier and checked < 500:
                g = frontier.pop()
                if not g.switchable:
                    continue
                e = min(g.switchable)
                for child, added in ((fix_edge(g, e), e), (reverse_edge(g, e), g.reverse_of(e))):
                    cyclic = cycle_detection(child, added)
                    assert cyclic == has_cycle(child.reduced)
                    checked += 1
                    if not cyclic:
                        frontier.append(child)
        assert checked >= 500

    def test_cycle_detection_negative(self):
        layout = Layout.from_lengths([3, 3])
        g = Stpg(layout, frozenset(), frozenset({(1, 4)}))
        assert not cycle_detection(g, (1, 4))

    def test_no_solution(self):
        layout = Layout.from_lengths([3, 3])
        # fixing (1,4) closes 4->1->4, reversing it to (5,0) closes 0->1->5->0
        root = Stpg(layout, frozenset({(1, 4)}), frozenset({(4, 1), (1, 5)}))
        with pytest.raises(NoSolutionError, match="no solution found"):
            ses_search(root, Gses())

    def test_timeout(self, oracle_roots):
        _, root, _ = max(oracle_roots, key=lambda r: len(r[1].switchable))
        with pytest.raises(SearchTimeout) as info:
            ses_search(root, Eses(), deadline=time.monotonic() - 1)
        assert info.value.stats is not None

    def test_trace_lines_are_json(self, oracle_roots):
        _, root, _ = oracle_roots[0]
        lines = []
        ses_search(root, Eses(), trace=lambda r: lines.append(json.dumps(r)))
        rec = json.loads(lines[0])
        assert set(rec) == {"f", "g", "h", "switchable", "edge", "pruned_fix", "pruned_reverse"}

    def test_decisions_rebuild_result(self, oracle_roots):
        for _, root, _ in oracle_roots[:50]:
            for algo in ("eses", "gses", "oracle", "naive"):
                res = solve(root, algo)
                assert sorted(d.edge for d in res.decisions) == sorted(root.switchable)
                assert res.tpg == root.reduced.with_edges(d.added for d in res.decisions)


class TestEsesModules:
    def test_branch_all_goals_one_step(self):
        n = 4
        root = Stpg(Layout.from_lengths([2] * n), frozenset(), frozenset())
        aux, g_delta, edge, _ = Eses().branch(root, (0,) * n)
        assert (aux, g_delta, edge) == ((1,) * n, n, None)

    def test_heuristic_at_goals(self):
        root = Stpg(Layout.from_lengths([3, 2]), frozenset(), frozenset())
        assert Eses().heuristic(root, (2, 1))[0] == 0

    def test_root_heuristic_is_partial_cost(self, oracle_roots):
        for _, root, _ in oracle_roots[:30]:
            h, _ = Eses().heuristic(root, Eses().initial_aux(root))
            assert h == exec_tpg(root.reduced).cost


class TestGsesModules:
    def test_branch_scan(self, oracle_roots):
        for _, root, _ in oracle_roots:
            lp = longest_paths(root.reduced)
            _, g_delta, edge, resolved = Gses().branch(root, lp)
            assert g_delta == 0
            edges = sorted(root.switchable)
            if edge is None:
                assert all(lp[u] < lp[v] for u, v in edges)
                assert not resolved.switchable
                assert exec_tpg(resolved.reduced).cost == exec_tpg(root.reduced).cost
            else:
                assert lp[edge[0]] >= lp[edge[1]]
                assert all(lp[u] < lp[v] for u, v in edges[: edges.index(edge)])

    def test_empty(self):
        root = Stpg(Layout.from_lengths([3]), frozenset(), frozenset())
        assert Gses().branch(root, longest_paths(root.reduced))[2] is None
        assert Gses().heuristic(root, None)[0] == 2

    def test_heuristic_equals_execution(self, oracle_roots):
        for _, root, _ in oracle_roots[:50]:
            assert Gses().heuristic(root, None)[0] == exec_tpg(root.reduced).cost
            full = fix_all(root)
            assert Gses().heuristic(full, None)[0] == exec_tpg(full.reduced).cost

    def test_early_termination_happens(self, oracle_roots):
        flags = [ses_search(root, Gses()).stats.terminated_early for _, root, _ in oracle_roots]
        assert any(flags)


class TestBaselines:
    def test_oracle_zero_edges(self):
        _, root, _ = roots(1, max_switchable=0)[0]
        res = brute_force_optimal(root)
        assert res.cost == exec_tpg(root.reduced).cost and res.assignment == ()

    def test_oracle_single_edge_cycle_on_reverse(self):
        layout = Layout.from_lengths([3, 3])
        # reversing (1,4) adds (5,0), closing 0->1->5->0
        root = Stpg(layout, frozenset({(1, 4)}), frozenset({(1, 5)}))
        res = brute_force_optimal(root)
        assert res.assignment == ("fix",)
        assert res.cost == exec_tpg(fix_all(root).reduced).cost

    def test_oracle_lexicographic_argmin(self, oracle_roots):
        for _, root, _ in oracle_roots[:120]:
            res = brute_force_optimal(root)
            assert (res.cost, res.assignment) == exhaustive_optimum(root)

    def test_oracle_cap(self):
        _, root, _ = roots(1, min_switchable=3)[0]
        with pytest.raises(TooManySwitchableError, match="too many switchable edges"):
            brute_force_optimal(root, cap=2)

    def test_naive(self, oracle_roots):
        _, empty, _ = roots(1, max_switchable=0)[0]
        assert naive_fix_all(empty) == empty.reduced
        for _, root, _ in oracle_roots:
            naive = naive_fix_all(root)
            assert not has_cycle(naive)
            assert exec_tpg(naive).cost >= ses_search(root, Gses()).cost

    def test_unknown_algorithm(self):
        root, _, _ = two_agent_reconstruction()
        with pytest.raises(ValueError):
            solve(root, "cbs")
