# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same contracts as ``_pycore``."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()

ctypedef cnp.int64_t i64


def exec_from(const i64[::1] offsets, const i64[::1] in_ptr, const i64[::1] in_idx,
              const i64[::1] progress):
    cdef Py_ssize_t n_agents = offsets.shape[0] - 1
    cdef Py_ssize_t n = offsets[n_agents]
    cdef cnp.ndarray[i64, ndim=1] sat_arr = np.full(n, -1, dtype=np.int64)
    cdef i64[::1] sat = sat_arr
    cdef cnp.ndarray[i64, ndim=1] cur_arr = np.empty(n_agents, dtype=np.int64)
    cdef i64[::1] cur = cur_arr
    cdef cnp.ndarray[i64, ndim=1] ready_arr = np.empty(n_agents, dtype=np.int64)
    cdef i64[::1] ready = ready_arr
    cdef Py_ssize_t a, v, p, n_ready, n_active
    cdef i64 cost = 0, it = 0
    cdef bint ok
    for a in range(n_agents):
        cur[a] = offsets[a] + progress[a]
        for v in range(offsets[a], cur[a] + 1):
            sat[v] = 0
    while True:
        n_active = 0
        for a in range(n_agents):
            if cur[a] < offsets[a + 1] - 1:
                n_active += 1
        if n_active == 0:
            return int(cost), sat_arr, 0
        it += 1
        cost += n_active
        n_ready = 0
        for a in range(n_agents):
            if cur[a] >= offsets[a + 1] - 1:
                continue
            v = cur[a] + 1
            ok = True
            for p in range(in_ptr[v], in_ptr[v + 1]):
                if sat[in_idx[p]] < 0:
                    ok = False
                    break
            if ok:
                ready[n_ready] = a
                n_ready += 1
        if n_ready == 0:
            return int(cost), sat_arr, 1
        for p in range(n_ready):
            a = ready[p]
            cur[a] += 1
            sat[cur[a]] = it


def eses_advance(const i64[::1] offsets, const i64[::1] in_ptr, const i64[::1] in_idx,
                 const cnp.uint8_t[::1] flags, const i64[::1] progress):
    cdef Py_ssize_t n_agents = offsets.shape[0] - 1
    cdef Py_ssize_t n = offsets[n_agents]
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] sat_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] sat = sat_arr
    cdef cnp.ndarray[i64, ndim=1] cur_arr = np.empty(n_agents, dtype=np.int64)
    cdef i64[::1] cur = cur_arr
    cdef cnp.ndarray[i64, ndim=1] ready_arr = np.empty(n_agents, dtype=np.int64)
    cdef i64[::1] ready = ready_arr
    cdef Py_ssize_t a, v, p, n_ready, n_active
    cdef i64 cost = 0, stop = -1
    cdef int status = 0
    cdef bint ok
    for a in range(n_agents):
        cur[a] = offsets[a] + progress[a]
        for v in range(offsets[a], cur[a] + 1):
            sat[v] = 1
    while True:
        n_active = 0
        for a in range(n_agents):
            if cur[a] < offsets[a + 1] - 1:
                n_active += 1
                if stop < 0 and flags[cur[a] + 1]:
                    stop = cur[a] + 1
        if n_active == 0 or stop >= 0:
            break
        cost += n_active
        n_ready = 0
        for a in range(n_agents):
            if cur[a] >= offsets[a + 1] - 1:
                continue
            v = cur[a] + 1
            ok = True
            for p in range(in_ptr[v], in_ptr[v + 1]):
                if not sat[in_idx[p]]:
                    ok = False
                    break
            if ok:
                ready[n_ready] = a
                n_ready += 1
        if n_ready == 0:
            status = 1
            break
        for p in range(n_ready):
            a = ready[p]
            cur[a] += 1
            sat[cur[a]] = 1
    for a in range(n_agents):
        cur[a] -= offsets[a]
    return cur_arr.tolist(), int(cost), int(stop), status


cdef inline void _heap_push(i64* heap, Py_ssize_t* size, i64 x) nogil:
    cdef Py_ssize_t i = size[0]
    cdef Py_ssize_t parent
    size[0] += 1
    while i > 0:
        parent = (i - 1) >> 1
        if heap[parent] <= x:
            break
        heap[i] = heap[parent]
        i = parent
    heap[i] = x


cdef inline i64 _heap_pop(i64* heap, Py_ssize_t* size) nogil:
    cdef i64 top = heap[0]
    cdef Py_ssize_t n, i, child
    cdef i64 last
    size[0] -= 1
    n = size[0]
    if n == 0:
        return top
    last = heap[n]
    i = 0
    while True:
        child = 2 * i + 1
        if child >= n:
            break
        if child + 1 < n and heap[child + 1] < heap[child]:
            child += 1
        if heap[child] >= last:
            break
        heap[i] = heap[child]
        i = child
    heap[i] = last
    return top


def longest_paths(const i64[::1] chain_next, const i64[::1] out_ptr, const i64[::1] out_idx):
    cdef Py_ssize_t n = chain_next.shape[0]
    cdef cnp.ndarray[i64, ndim=1] lp_arr = np.zeros(n, dtype=np.int64)
    cdef i64[::1] lp = lp_arr
    cdef cnp.ndarray[i64, ndim=1] indeg_arr = np.zeros(n, dtype=np.int64)
    cdef i64[::1] indeg = indeg_arr
    cdef i64* heap = <i64*> malloc((n + 1) * sizeof(i64))
    cdef Py_ssize_t size = 0, done = 0, v, p
    cdef i64 w, nxt
    if heap == NULL:
        raise MemoryError()
    try:
        for v in range(n):
            if chain_next[v] >= 0:
                indeg[chain_next[v]] += 1
        for p in range(out_idx.shape[0]):
            indeg[out_idx[p]] += 1
        for v in range(n):
            if indeg[v] == 0:
                _heap_push(heap, &size, v)
        while size > 0:
            v = _heap_pop(heap, &size)
            done += 1
            nxt = lp[v] + 1
            w = chain_next[v]
            if w >= 0:
                if lp[w] < nxt:
                    lp[w] = nxt
                indeg[w] -= 1
                if indeg[w] == 0:
                    _heap_push(heap, &size, w)
            for p in range(out_ptr[v], out_ptr[v + 1]):
                w = out_idx[p]
                if lp[w] < nxt:
                    lp[w] = nxt
                indeg[w] -= 1
                if indeg[w] == 0:
                    _heap_push(heap, &size, w)
    finally:
        free(heap)
    return lp_arr, 0 if done == n else 1


def reaches(const i64[::1] chain_next, const i64[::1] out_ptr, const i64[::1] out_idx,
            i64 source, i64 target):
    cdef Py_ssize_t n = chain_next.shape[0]
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] seen_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] seen = seen_arr
    cdef i64* stack = <i64*> malloc((n + 1) * sizeof(i64))
    cdef Py_ssize_t top = 0, p
    cdef i64 v, w
    cdef bint found = False
    if stack == NULL:
        raise MemoryError()
    stack[0] = source
    top = 1
    seen[source] = 1
    while top > 0:
        top -= 1
        v = stack[top]
        if v == target:
            found = True
            break
        w = chain_next[v]
        if w >= 0 and not seen[w]:
            seen[w] = 1
            stack[top] = w
            top += 1
        for p in range(out_ptr[v], out_ptr[v + 1]):
            w = out_idx[p]
            if not seen[w]:
                seen[w] = 1
                stack[top] = w
                top += 1
    free(stack)
    return found


def has_cycle(const i64[::1] chain_next, const i64[::1] out_ptr, const i64[::1] out_idx):
    cdef Py_ssize_t n = chain_next.shape[0]
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] color_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] color = color_arr
    cdef i64* vstack = <i64*> malloc((n + 1) * sizeof(i64))
    cdef i64* sstack = <i64*> malloc((n + 1) * sizeof(i64))
    cdef Py_ssize_t top, root
    cdef i64 v, slot, w
    cdef bint cyclic = False
    if vstack == NULL or sstack == NULL:
        free(vstack)
        free(sstack)
        raise MemoryError()
    for root in range(n):
        if color[root] or cyclic:
            continue
        vstack[0] = root
        sstack[0] = -1
        top = 1
        color[root] = 1
        while top > 0:
            v = vstack[top - 1]
            slot = sstack[top - 1]
            if slot == -1:
                sstack[top - 1] = out_ptr[v]
                w = chain_next[v]
            elif slot < out_ptr[v + 1]:
                sstack[top - 1] = slot + 1
                w = out_idx[slot]
            else:
                color[v] = 2
                top -= 1
                continue
            if w < 0:
                continue
            if color[w] == 1:
                cyclic = True
                break
            if color[w] == 0:
                color[w] = 1
                vstack[top] = w
                sstack[top] = -1
                top += 1
    free(vstack)
    free(sstack)
    return cyclic


def brute_force(const i64[::1] offsets, const i64[::1] in_ptr, const i64[::1] in_idx,
                const i64[::1] fix_tail, const i64[::1] fix_head,
                const i64[::1] rev_tail, const i64[::1] rev_head):
    cdef Py_ssize_t m = fix_tail.shape[0]
    cdef Py_ssize_t n_agents = offsets.shape[0] - 1
    cdef Py_ssize_t n = offsets[n_agents]
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] sat_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] sat = sat_arr
    cdef cnp.ndarray[i64, ndim=1] cur_arr = np.empty(n_agents, dtype=np.int64)
    cdef i64[::1] cur = cur_arr
    cdef cnp.ndarray[i64, ndim=1] ready_arr = np.empty(n_agents, dtype=np.int64)
    cdef i64[::1] ready = ready_arr
    cdef cnp.ndarray[i64, ndim=1] xt_arr = np.empty(max(m, 1), dtype=np.int64)
    cdef cnp.ndarray[i64, ndim=1] xh_arr = np.empty(max(m, 1), dtype=np.int64)
    cdef i64[::1] xt = xt_arr
    cdef i64[::1] xh = xh_arr
    cdef i64 mask, n_masks, best = -1, best_mask = -1, cost
    cdef Py_ssize_t a, v, p, i, n_ready, n_active
    cdef bint ok, dead
    if m > 62:
        raise OverflowError("too many switchable edges for a 64-bit mask")
    n_masks = (<i64> 1) << m
    for mask in range(n_masks):
        for i in range(m):
            if (mask >> (m - 1 - i)) & 1:
                xt[i] = rev_tail[i]
                xh[i] = rev_head[i]
            else:
                xt[i] = fix_tail[i]
                xh[i] = fix_head[i]
        for v in range(n):
            sat[v] = 0
        for a in range(n_agents):
            cur[a] = offsets[a]
            sat[cur[a]] = 1
        cost = 0
        dead = False
        while True:
            n_active = 0
            for a in range(n_agents):
                if cur[a] < offsets[a + 1] - 1:
                    n_active += 1
            if n_active == 0:
                break
            cost += n_active
            if best >= 0 and cost >= best:
                break
            n_ready = 0
            for a in range(n_agents):
                if cur[a] >= offsets[a + 1] - 1:
                    continue
                v = cur[a] + 1
                ok = True
                for p in range(in_ptr[v], in_ptr[v + 1]):
                    if not sat[in_idx[p]]:
                        ok = False
                        break
                if ok:
                    for i in range(m):
                        if xh[i] == v and not sat[xt[i]]:
                            ok = False
                            break
                if ok:
                    ready[n_ready] = a
                    n_ready += 1
            if n_ready == 0:
                dead = True
                break
            for p in range(n_ready):
                a = ready[p]
                cur[a] += 1
                sat[cur[a]] = 1
        if not dead and n_active == 0 and (best < 0 or cost < best):
            best = cost
            best_mask = mask
    return int(best), int(best_mask)
