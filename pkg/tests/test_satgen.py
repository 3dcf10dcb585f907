import numpy as np
import pytest
from scipy import stats

from satbridge.maxsat import emit_wcnf, parse_wcnf
from satbridge.satgen import (Distribution, GenSpec, PretrainSampler, generate, generate_batch,
                              read_manifest, split_seed, write_batch)


def var_counts(f):
    c = np.zeros(f.n_vars)
    for cl in f.clauses:
        for l in cl.literals:
            c[l.var] += 1
    return c


def test_uniform_unit_clauses_deterministic():
    spec = GenSpec("uniform", n_vars=3, n_clauses=2, k_min=1, k_max=1, seed=77)
    a, b = generate(spec), generate(spec)
    assert a.m == 2 and all(len(c.literals) == 1 for c in a.clauses)
    assert emit_wcnf(a) == emit_wcnf(b)
    assert a == b


@pytest.mark.parametrize("kw", [
    dict(k_min=0), dict(k_min=3, k_max=2), dict(n_vars=2, k_max=3),
    dict(var_exponent=0), dict(size_exponent=-1), dict(hard_fraction=1.5),
    dict(distribution="power-law", var_exponent=1.0),
])
def test_spec_errors(kw):
    with pytest.raises(ValueError):
        GenSpec(**kw)


def test_power_law_slope():
    beta = 2.5
    target = -1 / (beta - 1)
    for seed in range(20):
        f = generate(GenSpec("power-law", 1000, 5000, 2, 3, beta, seed=seed))
        c = np.sort(var_counts(f))[::-1]
        c = c[c > 0]
        slope = np.polyfit(np.log(np.arange(1, len(c) + 1)), np.log(c), 1)[0]
        assert abs(slope - target) <= 0.4, (seed, slope)


def test_double_power_law_sizes_decrease():
    f = generate(GenSpec("double-power-law", n_vars=40, n_clauses=100_000, k_min=1, k_max=10,
                         size_exponent=2.0, seed=3))
    hist = np.bincount([len(c.literals) for c in f.clauses], minlength=11)[1:]
    # one-sided binomial test: can we reject P(k+1) <= P(k) given the pair counts?
    for k in range(9):
        a, b = hist[k], hist[k + 1]
        if a + b == 0:
            continue
        p = stats.binomtest(int(b), int(a + b), 0.5, alternative="greater").pvalue
        assert p > 0.01, (k + 1, a, b)
    assert hist[0] > hist[-1]


def test_uniform_chi_square():
    passes = 0
    for seed in range(20):
        f = generate(GenSpec("uniform", 50, 10_000, 1, 3, seed=seed))
        passes += stats.chisquare(var_counts(f)).pvalue > 0.01
    assert passes >= 18


@pytest.mark.parametrize("dist", list(Distribution))
def test_clause_invariants_and_hard_prefix(dist):
    spec = GenSpec(dist, n_vars=6, n_clauses=300, k_min=1, k_max=6, hard_fraction=0.25, seed=9)
    f = generate(spec)
    assert f.m == 300
    for i, c in enumerate(f.clauses):
        vs = [l.var for l in c.literals]
        assert len(set(vs)) == len(vs)
        assert c.hard == (i < 75)
        if not c.hard:
            assert c.weight == 1


def test_split_seed():
    assert split_seed(5, 0) == split_seed(5, 0)
    assert len({split_seed(5, i) for i in range(100)}) == 100
    assert split_seed(5, 1) != split_seed(6, 1)


def test_sampler_ranges_and_cycle():
    s = PretrainSampler(n_min=8, n_max=20)
    batch = generate_batch(s, 30, seed=1)
    assert [sp.distribution for sp, _ in batch[:3]] == list(Distribution)
    for sp, f in batch:
        assert 8 <= f.n_vars <= 20
        assert 2.0 * f.n_vars - 1 <= f.m <= 6.0 * f.n_vars + 1
        assert all(not c.hard for c in f.clauses)
    again = generate_batch(s, 30, seed=1)
    assert [f for _, f in batch] == [f for _, f in again]


def test_write_batch(tmp_path):
    batch = generate_batch(PretrainSampler(n_min=5, n_max=9), 4, seed=2)
    manifest = write_batch(batch, tmp_path / "out")
    recs = read_manifest(manifest)
    assert [r["id"] for r in recs] == [0, 1, 2, 3]
    for r, (spec, f) in zip(recs, batch):
        assert r["seed"] == spec.seed
        assert GenSpec(**r["spec"]) == spec
        assert parse_wcnf((tmp_path / "out" / r["file"]).read_text()) == f
