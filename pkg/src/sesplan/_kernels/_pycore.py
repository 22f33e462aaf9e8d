"""Pure-Python kernels. Mirrors ``_core.pyx`` call for call.

Graphs arrive as flat integer arrays. Vertices are numbered agent by agent:
agent ``a`` owns ids ``offsets[a] .. offsets[a+1]-1`` and Type-1 edges join
consecutive ids of one agent. ``chain_next[v]`` is ``v + 1`` or ``-1`` at a
goal. Type-2 edges come in CSR form (``*_ptr``/``*_idx``), either by head
(in-neighbours) or by tail (out-neighbours).

Status codes: 0 ok, 1 deadlock / cycle.
"""

import heapq


def _lists(*arrays):
    return [a.tolist() if hasattr(a, "tolist") else list(a) for a in arrays]


def exec_from(offsets, in_ptr, in_idx, progress):
    """Run the execution loop from per-agent progress.

    Returns ``(cost, sat, status)``; ``sat[v]`` is the iteration in which
    ``v`` became satisfied (0 for the initial marks, -1 if never).
    """
    offsets, in_ptr, in_idx, cur = _lists(offsets, in_ptr, in_idx, progress)
    n_agents = len(offsets) - 1
    sat = [-1] * offsets[-1]
    goal = [offsets[a + 1] - 1 for a in range(n_agents)]
    for a in range(n_agents):
        cur[a] += offsets[a]
        for v in range(offsets[a], cur[a] + 1):
            sat[v] = 0
    active = [a for a in range(n_agents) if cur[a] < goal[a]]
    cost = 0
    it = 0
    while active:
        it += 1
        cost += len(active)
        ready = []
        for a in active:
            v = cur[a] + 1
            for p in range(in_ptr[v], in_ptr[v + 1]):
                if sat[in_idx[p]] < 0:
                    break
            else:
                ready.append(a)
        if not ready:
            return cost, sat, 1
        for a in ready:
            cur[a] += 1
            sat[cur[a]] = it
        active = [a for a in active if cur[a] < goal[a]]
    return cost, sat, 0


def eses_advance(offsets, in_ptr, in_idx, flags, progress):
    """Step execution until some agent's next vertex is flagged.

    Returns ``(progress, cost, stop_vertex, status)`` with ``stop_vertex``
    -1 when execution completed.
    """
    offsets, in_ptr, in_idx, flags, cur = _lists(offsets, in_ptr, in_idx, flags, progress)
    n_agents = len(offsets) - 1
    n = offsets[-1]
    sat = [False] * n
    goal = [offsets[a + 1] - 1 for a in range(n_agents)]
    for a in range(n_agents):
        cur[a] += offsets[a]
        for v in range(offsets[a], cur[a] + 1):
            sat[v] = True
    cost = 0
    while True:
        active = [a for a in range(n_agents) if cur[a] < goal[a]]
        if not active:
            return [cur[a] - offsets[a] for a in range(n_agents)], cost, -1, 0
        for a in active:
            if flags[cur[a] + 1]:
                return [c - offsets[a] for a, c in enumerate(cur)], cost, cur[a] + 1, 0
        cost += len(active)
        ready = []
        for a in active:
            v = cur[a] + 1
            for p in range(in_ptr[v], in_ptr[v + 1]):
                if not sat[in_idx[p]]:
                    break
            else:
                ready.append(a)
        if not ready:
            return [c - offsets[a] for a, c in enumerate(cur)], cost, -1, 1
        for a in ready:
            cur[a] += 1
            sat[cur[a]] = True


def longest_paths(chain_next, out_ptr, out_idx):
    """Longest path lengths from in-degree-zero vertices, Kahn order by id."""
    chain_next, out_ptr, out_idx = _lists(chain_next, out_ptr, out_idx)
    n = len(chain_next)
    indeg = [0] * n
    for v in range(n):
        if chain_next[v] >= 0:
            indeg[chain_next[v]] += 1
    for u in out_idx:
        indeg[u] += 1
    heap = [v for v in range(n) if indeg[v] == 0]
    heapq.heapify(heap)
    lp = [0] * n
    done = 0
    while heap:
        v = heapq.heappop(heap)
        done += 1
        nxt = lp[v] + 1
        w = chain_next[v]
        if w >= 0:
            if lp[w] < nxt:
                lp[w] = nxt
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(heap, w)
        for p in range(out_ptr[v], out_ptr[v + 1]):
            w = out_idx[p]
            if lp[w] < nxt:
                lp[w] = nxt
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(heap, w)
    return lp, 0 if done == n else 1


def reaches(chain_next, out_ptr, out_idx, source, target):
    """Iterative DFS: is ``target`` reachable from ``source``?"""
    chain_next, out_ptr, out_idx = _lists(chain_next, out_ptr, out_idx)
    seen = [False] * len(chain_next)
    stack = [source]
    seen[source] = True
    while stack:
        v = stack.pop()
        if v == target:
            return True
        w = chain_next[v]
        if w >= 0 and not seen[w]:
            seen[w] = True
            stack.append(w)
        for p in range(out_ptr[v], out_ptr[v + 1]):
            w = out_idx[p]
            if not seen[w]:
                seen[w] = True
                stack.append(w)
    return False


def has_cycle(chain_next, out_ptr, out_idx):
    """Tri-colour iterative DFS over Type-1 and Type-2 edges."""
    chain_next, out_ptr, out_idx = _lists(chain_next, out_ptr, out_idx)
    n = len(chain_next)
    color = [0] * n  # 0 white, 1 grey, 2 black
    for root in range(n):
        if color[root]:
            continue
        # frame: (vertex, next child slot); slot -1 is the Type-1 successor
        stack = [[root, -1]]
        color[root] = 1
        while stack:
            frame = stack[-1]
            v, slot = frame
            if slot == -1:
                frame[1] = out_ptr[v]
                w = chain_next[v]
            elif slot < out_ptr[v + 1]:
                frame[1] = slot + 1
                w = out_idx[slot]
            else:
                color[v] = 2
                stack.pop()
                continue
            if w < 0:
                continue
            if color[w] == 1:
                return True
            if color[w] == 0:
                color[w] = 1
                stack.append([w, -1])
    return False


def brute_force(offsets, in_ptr, in_idx, fix_tail, fix_head, rev_tail, rev_head):
    """Enumerate every fix/reverse assignment of the switchable edges.

    Bit ``m-1-i`` of the mask selects reverse for edge ``i``, so increasing
    masks visit assignments in lexicographic order (fix before reverse).
    Assignments whose running cost already reaches the incumbent are
    abandoned; they cannot be strictly better. Returns ``(best_cost,
    best_mask)``, best_cost -1 if every assignment deadlocks.
    """
    offsets, in_ptr, in_idx = _lists(offsets, in_ptr, in_idx)
    fix_tail, fix_head, rev_tail, rev_head = _lists(fix_tail, fix_head, rev_tail, rev_head)
    m = len(fix_tail)
    n_agents = len(offsets) - 1
    goal = [offsets[a + 1] - 1 for a in range(n_agents)]
    best, best_mask = -1, -1
    for mask in range(1 << m):
        extra = {}
        for i in range(m):
            if (mask >> (m - 1 - i)) & 1:
                extra.setdefault(rev_head[i], []).append(rev_tail[i])
            else:
                extra.setdefault(fix_head[i], []).append(fix_tail[i])
        sat = [False] * offsets[-1]
        cur = list(offsets[:-1])
        for a in range(n_agents):
            sat[cur[a]] = True
        active = [a for a in range(n_agents) if cur[a] < goal[a]]
        cost = 0
        dead = False
        while active:
            cost += len(active)
            if 0 <= best <= cost:
                break
            ready = []
            for a in active:
                v = cur[a] + 1
                ok = all(sat[in_idx[p]] for p in range(in_ptr[v], in_ptr[v + 1]))
                if ok and v in extra:
                    ok = all(sat[u] for u in extra[v])
                if ok:
                    ready.append(a)
            if not ready:
                dead = True
                break
            for a in ready:
                cur[a] += 1
                sat[cur[a]] = True
            active = [a for a in active if cur[a] < goal[a]]
        if not dead and not active and (best < 0 or cost < best):
            best, best_mask = cost, mask
    return best, best_mask
