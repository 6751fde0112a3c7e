"""Time each kernel with numba against its numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N] [--size small|baseline|large]

Inputs come from the same generators the simulator uses, so the numbers
reflect realistic graph and field sizes.  If numba is disabled the "numba"
column times the uncompiled loop versions.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from edgecache import backend, kernels
from edgecache.caching import random_instance
from edgecache.indexcoding import build_conflict_graph
from edgecache.mds import field_for, vandermonde

SIZES = {"small": (6, 40, 10), "baseline": (10, 100, 20), "large": (50, 250, 40)}


def make_inputs(size: str, seed: int = 0) -> dict[str, tuple]:
    n, m, s = SIZES[size]
    rng = np.random.default_rng(seed)
    # pick a dense refresh so the conflict graph is not trivial
    inst = max((random_instance(rng, n, m, s) for _ in range(20)), key=lambda i: sum(map(len, i.requests)))
    g = build_conflict_graph(inst)
    adj = np.ascontiguousarray(g.adj)
    side = np.ascontiguousarray(g.side)
    order = rng.permutation(len(g)).astype(np.int64)
    known = np.where(side, 0, kernels.NEVER).astype(np.int64)
    gf = field_for(8)
    t_un = max(inst.t_un, 2)
    a = vandermonde(t_un, t_un, gf)
    b = rng.integers(0, 256, size=(t_un, 1024))
    return {
        "count_inversions": (rng.permutation(m * 20).astype(np.int64),),
        "conflict_adjacency": (g.vw, g.vf, side),
        "degeneracy_removal": (adj,),
        "back_degrees": (adj, order),
        "greedy_static": (adj, order),
        "greedy_dynamic": (order, g.vw, g.vf, known),
        "gf_matmul": (a, b, gf.exp, gf.log),
        "gf_solve": (a, gf.matmul(a, b), gf.exp, gf.log, gf.order),
    }


def _call(fn, args, name):
    if name == "greedy_dynamic":
        args = args[:3] + (args[3].copy(),)
    return fn(*args)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", choices=sorted(SIZES), default="baseline")
    args = ap.parse_args(argv)

    inputs = make_inputs(args.size)
    print(f"backend={backend()} size={args.size} (n, m, s)={SIZES[args.size]}")
    print(f"{'kernel':20s} {'numba ms':>10s} {'numpy ms':>10s} {'speedup':>8s}")
    for name, fn_args in inputs.items():
        fast, slow = kernels.NUMBA_KERNELS[name], kernels.NUMPY_KERNELS[name]
        _call(fast, fn_args, name)  # compile outside the timer
        t_fast = min(timeit.repeat(lambda: _call(fast, fn_args, name), number=1, repeat=args.repeat))
        t_slow = min(timeit.repeat(lambda: _call(slow, fn_args, name), number=1, repeat=args.repeat))
        print(f"{name:20s} {t_fast * 1e3:10.3f} {t_slow * 1e3:10.3f} {t_slow / t_fast:8.1f}x")


if __name__ == "__main__":
    main()
