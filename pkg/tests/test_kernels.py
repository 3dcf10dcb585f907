import os
import subprocess
import sys

import numpy as np
import pytest

from satbridge import kernels
from satbridge.graph import gen_erdos_renyi
from satbridge.satgen import GenSpec, generate

ref = kernels.reference
jit = kernels.jit
needs_jit = pytest.mark.skipif(jit is None, reason="numba not importable")


def test_backend_flag():
    assert kernels.BACKEND in ("numba", "numpy")
    code = "from satbridge import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, SATBRIDGE_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


@needs_jit
@pytest.mark.parametrize("seed", range(6))
def test_solvers_agree(seed):
    f = generate(GenSpec("power-law", n_vars=12, n_clauses=40, k_min=1, k_max=3, hard_fraction=0.1, seed=seed))
    a = f.arrays
    args = (f.n_vars, a.lit_ptr, a.lit_var, a.lit_neg, a.hard, a.weight)
    r1, r2 = ref.maxsat_enumerate(*args), jit.maxsat_enumerate(*args)
    assert r1[0] == r2[0] and np.array_equal(r1[1], r2[1])
    bargs = args + (a.var_ptr, a.var_clause, a.var_neg, 10**6)
    b1, b2 = ref.maxsat_bnb(*bargs), jit.maxsat_bnb(*bargs)
    assert b1[:2] == b2[:2] and np.array_equal(b1[2], b2[2]) and b1[3] == b2[3]


@needs_jit
def test_segment_ops_agree(rng):
    idx = rng.integers(0, 7, 200)
    vals = rng.normal(size=(200, 3))
    np.testing.assert_allclose(ref.segment_sum(vals, idx, 9), jit.segment_sum(vals, idx, 9), atol=1e-12)
    m1, m2 = ref.segment_max(vals, idx, 9), jit.segment_max(vals, idx, 9)
    assert np.array_equal(m1, m2)
    assert np.all(np.isneginf(m1[7:]))


@needs_jit
@pytest.mark.parametrize("seed", range(5))
def test_local_passes_agree(seed):
    g = gen_erdos_renyi(60, 0.08, seed)
    rng = np.random.default_rng(seed)
    side = (rng.random(60) < 0.5).astype(np.uint8)
    s1, s2 = side.copy(), side.copy()
    assert ref.maxcut_flip_pass(g.indptr, g.indices, s1) == jit.maxcut_flip_pass(g.indptr, g.indices, s2)
    assert np.array_equal(s1, s2)

    sel = np.zeros(60, np.uint8)
    for v in rng.permutation(60):
        if not any(sel[u] for u in g.neighbors(v)):
            sel[v] = 1
    tight = np.array([sel[g.neighbors(v)].sum() for v in range(60)], np.int64)
    a = (sel.copy(), tight.copy())
    b = (sel.copy(), tight.copy())
    assert ref.mis_two_improve_pass(g.indptr, g.indices, *a) == jit.mis_two_improve_pass(g.indptr, g.indices, *b)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
