"""Time the numba kernels against the pure-numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both backends are imported side by side (``satbridge.kernels.jit`` and
``satbridge.kernels.reference``), so the env flag is not needed here.
Outputs are cross-checked before timing.
"""

import argparse
import time

import numpy as np

from satbridge import kernels
from satbridge.graph import CoInstance, ProblemKind, gen_random_regular
from satbridge.decode import greedy_mis
from satbridge.reduce import reduce_to_maxsat
from satbridge.satgen import GenSpec, generate


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def bnb_case():
    f = generate(GenSpec("uniform", n_vars=22, n_clauses=90, k_min=2, k_max=3, seed=7))
    a = f.arrays
    args = (f.n_vars, a.lit_ptr, a.lit_var, a.lit_neg, a.hard, a.weight, a.var_ptr, a.var_clause, a.var_neg,
            10_000_000)
    return "maxsat_bnb (22 vars, 90 clauses)", args, lambda r: (r[0], r[1], r[2].tobytes())


def enum_case():
    f = generate(GenSpec("uniform", n_vars=18, n_clauses=60, k_min=1, k_max=3, seed=3))
    a = f.arrays
    args = (f.n_vars, a.lit_ptr, a.lit_var, a.lit_neg, a.hard, a.weight)
    return "maxsat_enumerate (18 vars)", args, lambda r: (r[0], r[1].tobytes())


def segsum_case():
    rng = np.random.default_rng(0)
    idx = rng.integers(0, 5000, 200_000)
    vals = rng.normal(size=(200_000, 16))
    return "segment_sum (200k x 16 -> 5000)", (vals, idx, 5000), lambda r: np.round(r, 9).tobytes()


def mis_case():
    g = gen_random_regular(2000, 3, 1)
    sel0 = np.zeros(g.n_nodes, np.uint8)
    sel0[list(greedy_mis(g))] = 1

    def fresh():
        sel = sel0.copy()
        tight = np.zeros(g.n_nodes, np.int64)
        np.add.at(tight, g.edges[:, 0], sel[g.edges[:, 1]])
        np.add.at(tight, g.edges[:, 1], sel[g.edges[:, 0]])
        return g.indptr, g.indices, sel, tight

    return "mis_two_improve_pass (2000 nodes)", fresh, lambda r: r


def flip_case():
    g = gen_random_regular(5000, 3, 2)
    side0 = (np.random.default_rng(0).random(g.n_nodes) < 0.5).astype(np.uint8)
    return "maxcut_flip_pass (5000 nodes)", lambda: (g.indptr, g.indices, side0.copy()), lambda r: r


CASES = [
    ("maxsat_bnb", bnb_case),
    ("maxsat_enumerate", enum_case),
    ("segment_sum", segsum_case),
    ("mis_two_improve_pass", mis_case),
    ("maxcut_flip_pass", flip_case),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if kernels.jit is None:
        raise SystemExit("numba is not installed")
    print(f"{'kernel':40s} {'numpy (s)':>11s} {'numba (s)':>11s} {'speed-up':>9s}")
    for name, make in CASES:
        label, a, key = make()
        ref_fn, jit_fn = getattr(kernels.reference, name), getattr(kernels.jit, name)
        getargs = a if callable(a) else (lambda a=a: a)
        # warm-up compiles the jit version; also cross-check outputs
        r1, r2 = ref_fn(*getargs()), jit_fn(*getargs())
        assert key(r1) == key(r2), f"{name}: backends disagree"
        t_ref = best_of(lambda: ref_fn(*getargs()), args.repeat)
        t_jit = best_of(lambda: jit_fn(*getargs()), args.repeat)
        print(f"{label:40s} {t_ref:11.5f} {t_jit:11.5f} {t_ref / t_jit:8.1f}x")


if __name__ == "__main__":
    main()
