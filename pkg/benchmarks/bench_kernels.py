"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--agents 30] [--size 24] [--repeat 5]

Workloads come from one planned instance: execution, longest paths and
cycle checks on its TPG, one ESES advance, and brute force over a delayed
root with a handful of switchable edges.
"""

import argparse
import random
import timeit

import numpy as np

from sesplan import _kernels
from sesplan.mapf import generate_instance
from sesplan.sim import replan_root
from sesplan.stpg import DelayEvent
from sesplan.tpg import build_tpg


def small_root(seed, max_edges):
    """A delayed root on a small instance with 4..max_edges switchable edges."""
    for s in range(seed, seed + 500):
        inst = generate_instance(s, 8, 8, 5, 0.1)
        g = build_tpg(inst.solution)
        delays = [DelayEvent(a, 0, 3) for a in range(0, g.n_agents, 2)]
        root, _, _ = replan_root(g, delays, 0)
        if 4 <= len(root.switchable) <= max_edges:
            return root
    raise RuntimeError("no suitable root found")


def workloads(agents, size, seed, max_edges):
    g = build_tpg(generate_instance(seed, size, size, agents, 0.1).solution)
    layout = g.layout
    offsets, chain = layout.offsets_array, layout.chain_next
    in_ptr, in_idx = g.in_csr
    out_ptr, out_idx = g.out_csr
    progress = np.zeros(g.n_agents, dtype=np.int64)
    flags = np.zeros(layout.n_vertices, dtype=np.uint8)
    rng = random.Random(seed)
    flags[rng.sample(range(layout.n_vertices), layout.n_vertices // 10)] = 1
    last = layout.n_vertices - 1

    root = small_root(seed, max_edges)
    edges = root.switchable_sorted
    rev = np.array([root.reverse_of(tuple(e)) for e in edges.tolist()], dtype=np.int64)
    r_ptr, r_idx = root.reduced.in_csr
    bf_args = (root.layout.offsets_array, r_ptr, r_idx,
               np.ascontiguousarray(edges[:, 0]), np.ascontiguousarray(edges[:, 1]),
               np.ascontiguousarray(rev[:, 0]), np.ascontiguousarray(rev[:, 1]))

    return {
        f"exec_from ({layout.n_vertices} vertices)": lambda k: k.exec_from(offsets, in_ptr, in_idx, progress),
        "eses_advance": lambda k: k.eses_advance(offsets, in_ptr, in_idx, flags, progress),
        "longest_paths": lambda k: k.longest_paths(chain, out_ptr, out_idx),
        "has_cycle": lambda k: k.has_cycle(chain, out_ptr, out_idx),
        "reaches (0 -> last)": lambda k: k.reaches(chain, out_ptr, out_idx, 0, last),
        f"brute_force ({len(edges)} edges)": lambda k: k.brute_force(*bf_args),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--agents", type=int, default=30)
    ap.add_argument("--size", type=int, default=24)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--max-edges", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    impls = _kernels.backends()
    if "cython" not in impls:
        print("compiled backend not built; timing the fallback only")
    cases = workloads(args.agents, args.size, args.seed, args.max_edges)

    names = list(impls)
    print(f"{'kernel':<32}" + "".join(f"{n + ' (us)':>16}" for n in names) + f"{'speedup':>10}")
    for label, fn in cases.items():
        best = {}
        for name, mod in impls.items():
            timer = timeit.Timer(lambda: fn(mod))
            number, _ = timer.autorange()
            best[name] = min(timer.repeat(args.repeat, number)) / number * 1e6
        speedup = f"{best['python'] / best['cython']:.1f}x" if "cython" in best else "-"
        print(f"{label:<32}" + "".join(f"{best[n]:>16.1f}" for n in names) + f"{speedup:>10}")


if __name__ == "__main__":
    main()
