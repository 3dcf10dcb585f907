import stat
import sys

import numpy as np
import pytest

from satbridge.graph import CoInstance, Graph
from satbridge.maxsat import Clause, Formula, Literal, evaluate, formula_from_dimacs
from satbridge.oracle import (ExternalSolverError, InfeasibleError, SolverTimeout, external_solve,
                              label_dataset, parse_solver_output, solve_enumerate, solve_exact)
from satbridge.reduce import reduce_to_maxsat
from satbridge.satgen import PretrainSampler, generate_batch

from conftest import brute_maxsat

TRI = formula_from_dimacs(3, hard=[(-1, -2), (-2, -3), (-1, -3)], soft=[(1,), (2,), (3,)])
EDGE = formula_from_dimacs(2, soft=[(1, 2), (-1, -2)])


def random_formula(rng, n):
    cl = []
    for _ in range(int(rng.integers(1, 3 * n + 1))):
        k = int(rng.integers(1, min(n, 4) + 1))
        vs = rng.choice(n, size=k, replace=False)
        hard = bool(rng.random() < 0.2)
        cl.append(Clause(tuple(Literal(int(v), bool(rng.random() < .5)) for v in vs),
                         hard=hard, weight=1 if hard else int(rng.integers(1, 4))))
    return Formula(n, tuple(cl))


def as_dimacs(f):
    return [(tuple(l.to_dimacs() for l in c.literals), c.hard, c.weight) for c in f.clauses]


def test_triangle_lexicographic():
    r = solve_exact(TRI)
    assert r.soft_optimum == 1 and r.proven
    # False < True with var 0 most significant: (F,F,T) is the smallest optimum
    assert r.assignment.tolist() == [False, False, True]
    assert brute_maxsat(3, as_dimacs(TRI))[1] == (False, False, True)


def test_edge_maxcut():
    r = solve_exact(EDGE)
    assert r.soft_optimum == 2 and r.assignment.tolist() == [False, True]


def test_infeasible():
    f = formula_from_dimacs(1, hard=[(1,), (-1,)])
    with pytest.raises(InfeasibleError):
        solve_exact(f)
    with pytest.raises(InfeasibleError):
        solve_enumerate(f)


def test_bnb_matches_enumeration_and_brute(rng):
    for _ in range(120):
        f = random_formula(rng, int(rng.integers(1, 11)))
        best, arg = brute_maxsat(f.n_vars, as_dimacs(f))
        if best is None:
            with pytest.raises(InfeasibleError):
                solve_exact(f)
            continue
        a, b = solve_exact(f), solve_enumerate(f)
        assert a.soft_optimum == b.soft_optimum == best
        assert a.assignment.tolist() == b.assignment.tolist() == list(arg)
        assert evaluate(f, a.assignment).hard_violations == 0


def test_budget_returns_unproven(rng):
    f = random_formula(np.random.default_rng(4), 24)
    f = Formula(24, tuple(c for c in f.clauses if not c.hard))
    r = solve_exact(f, budget=60)
    assert not r.proven
    assert evaluate(f, r.assignment).hard_violations == 0


def test_label_dataset():
    assert label_dataset([]) == []
    (inst,) = label_dataset([TRI])
    assert inst.labels.tolist() == [0, 0, 1]
    batch = [f for _, f in generate_batch(PretrainSampler(n_min=5, n_max=20), 100, seed=0)]
    out = label_dataset(batch)
    assert len(out) == 100


def test_label_dataset_drops(caplog):
    bad = formula_from_dimacs(1, hard=[(1,), (-1,)])
    out = label_dataset([TRI, bad])
    assert len(out) == 1 and "dropped 1" in caplog.text


def test_parse_solver_output():
    assert parse_solver_output("s OPTIMUM FOUND\nv 1 -2 3 0\n", 3) == ("OPTIMUM FOUND", pytest.approx([1, 0, 1]))
    st_, v = parse_solver_output("o 3\ns OPTIMUM FOUND\nv 011\n", 3)
    assert v.tolist() == [False, True, True]
    assert parse_solver_output("s UNKNOWN\n", 3) == ("UNKNOWN", None)
    with pytest.raises(ValueError):
        parse_solver_output("v 1 5 0", 3)


def fake_solver(tmp_path, body):
    p = tmp_path / "solver.py"
    p.write_text("import sys, time\npath = sys.argv[1]\n" + body)
    return [sys.executable, str(p)]


def test_external_signed_and_bitstring(tmp_path):
    cmd = fake_solver(tmp_path, "assert open(path).read().startswith('p wcnf')\n"
                                "print('o 99\\ns OPTIMUM FOUND\\nv -1 -2 3 0')\n")
    r = external_solve(TRI, cmd)
    assert r.soft_optimum == solve_exact(TRI).soft_optimum == 1 and r.proven
    cmd = fake_solver(tmp_path, "print('s SATISFIABLE\\nv 10')\nsys.exit(10)\n")
    r = external_solve(EDGE, cmd)
    assert r.soft_optimum == 2 and not r.proven


def test_external_errors(tmp_path):
    with pytest.raises(InfeasibleError):
        external_solve(TRI, fake_solver(tmp_path, "print('s UNSATISFIABLE')\n"))
    with pytest.raises(ExternalSolverError) as e:
        external_solve(TRI, fake_solver(tmp_path, "print('s OPTIMUM FOUND\\nv 1 2 -3')\n"))
    assert "hard" in str(e.value) and "v 1 2 -3" in e.value.output
    with pytest.raises(ExternalSolverError):
        external_solve(TRI, fake_solver(tmp_path, "print('garbage')\nsys.exit(1)\n"))
    with pytest.raises(ExternalSolverError):
        external_solve(TRI, [str(tmp_path / "missing-binary")])
    with pytest.raises(SolverTimeout):
        external_solve(TRI, fake_solver(tmp_path, "print('c starting', flush=True)\ntime.sleep(30)\n"), timeout=1.0)


def test_external_matches_exact_on_reductions(tmp_path, rng):
    # a conforming "solver" that defers to brute force
    script = (
        "sys.path.insert(0, %r)\n"
        "from satbridge.maxsat import parse_wcnf\n"
        "from satbridge.oracle import solve_enumerate\n"
        "r = solve_enumerate(parse_wcnf(open(path).read()))\n"
        "print('s OPTIMUM FOUND')\n"
        "print('v ' + ''.join('1' if b else '0' for b in r.assignment))\n"
    ) % str(__import__("pathlib").Path(__file__).resolve().parents[1] / "src")
    cmd = fake_solver(tmp_path, script)
    for kind in ("mis", "mds", "maxcut"):
        g = Graph(6, [(i, j) for i in range(6) for j in range(i + 1, 6) if rng.random() < 0.4])
        f = reduce_to_maxsat(CoInstance(g, kind))
        assert external_solve(f, cmd).soft_optimum == solve_exact(f).soft_optimum
