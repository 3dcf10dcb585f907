import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from satbridge.graph import (CoInstance, Graph, GraphFormatError, ProblemKind, gen_erdos_renyi,
                             gen_model_rb, gen_random_regular, load_graph, parse_dimacs, parse_gset)


def test_graph_basics():
    g = Graph(4, [(1, 0), (2, 3), (1, 2)])
    assert g.n_nodes == 4 and g.n_edges == 3
    assert g.edges.tolist() == [[0, 1], [2, 3], [1, 2]]
    assert g.neighbors(1).tolist() == [0, 2]
    assert g.degree().tolist() == [1, 2, 2, 1]
    with pytest.raises(AttributeError):
        g.n_nodes = 5


@pytest.mark.parametrize("edges", [[(0, 0)], [(0, 1), (1, 0)], [(0, 5)]])
def test_graph_rejects_bad_edges(edges):
    with pytest.raises(ValueError):
        Graph(3, edges)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12), st.floats(0, 1), st.integers(0, 2**32 - 1))
def test_adjacency_consistent(n, p, seed):
    g = gen_erdos_renyi(n, p, seed)
    rebuilt = [set() for _ in range(n)]
    for u, v in g.edges:
        rebuilt[u].add(int(v))
        rebuilt[v].add(int(u))
    assert [set(a.tolist()) for a in g.adjacency] == rebuilt
    assert all(g.degree(v) == len(g.adjacency[v]) for v in range(n))
    assert all(np.all(np.diff(a) > 0) for a in g.adjacency)


def test_problem_predicates():
    tri = Graph(3, [(0, 1), (1, 2), (0, 2)])
    assert ProblemKind.MIS.feasible(tri, [0])
    assert not ProblemKind.MIS.feasible(tri, [0, 1])
    star = Graph(5, [(0, i) for i in range(1, 5)])
    assert ProblemKind.MDS.feasible(star, [0])
    assert not ProblemKind.MDS.feasible(star, [1])
    assert ProblemKind.MAXCUT.feasible(star, [])
    assert ProblemKind.MAXCUT.objective(star, [0]) == 4
    assert ProblemKind.parse("Max-Cut") is ProblemKind.MAXCUT
    assert ProblemKind.MDS.maximize is False
    assert CoInstance(star, "mds").kind is ProblemKind.MDS


def test_parse_gset_smallest():
    g = parse_gset("2 1\n1 2 1")
    assert g.n_nodes == 2 and g.edges.tolist() == [[0, 1]]


@pytest.mark.parametrize("text,line", [
    ("2 1\n1 1 1", 2),           # self-loop
    ("3 2\n1 2 1\n2 1 1", 3),    # duplicate
    ("2 1\n1 3 1", 2),           # out of range
    ("2 1\n1 x 1", 2),           # malformed
])
def test_parse_gset_errors(text, line):
    with pytest.raises(GraphFormatError) as e:
        parse_gset(text)
    assert e.value.lineno == line
    assert f"line {line}" in str(e.value)


def test_parse_gset_count_mismatch_and_weights(caplog):
    with pytest.raises(GraphFormatError):
        parse_gset("3 2\n1 2 1")
    with caplog.at_level(logging.WARNING):
        g = parse_gset("3 2\n1 2 1\n2 3 -1")
    assert g.n_edges == 2 and "weights" in caplog.text


def test_parse_dimacs():
    g = parse_dimacs("c a comment\np edge 3 2\ne 1 2\ne 2 3")
    assert g == Graph(3, [(0, 1), (1, 2)])
    with pytest.raises(GraphFormatError):
        parse_dimacs("e 1 2\np edge 2 1")
    with pytest.raises(GraphFormatError):
        parse_dimacs("p edge 2 1\ne 1 2 3")
    with pytest.raises(GraphFormatError):
        parse_dimacs("c nothing")


def test_parse_dimacs_dedup(caplog):
    with caplog.at_level(logging.WARNING):
        g = parse_dimacs("p edge 3 3\ne 1 2\ne 2 1\ne 2 3")
    assert g.n_edges == 2 and "duplicate" in caplog.text


def test_load_graph_sniffs_format(tmp_path):
    (tmp_path / "a.col").write_text("p edge 2 1\ne 1 2\n")
    (tmp_path / "a.gset").write_text("2 1\n1 2 1\n")
    assert load_graph(tmp_path / "a.col") == load_graph(tmp_path / "a.gset")


def test_regular_k4():
    g = gen_random_regular(4, 3, 7)
    assert g.edge_set() == {(i, j) for i in range(4) for j in range(i + 1, 4)}


def test_regular_properties():
    a = gen_random_regular(100, 3, 1)
    b = gen_random_regular(100, 3, 1)
    assert np.all(a.degree() == 3)
    assert a.edge_set() == b.edge_set()
    for seed in range(100):
        assert np.all(gen_random_regular(30, 3, seed).degree() == 3)
    assert np.all(gen_random_regular(50, 10, 5).degree() == 10)


def test_regular_errors():
    with pytest.raises(ValueError):
        gen_random_regular(5, 3, 0)
    with pytest.raises(ValueError):
        gen_random_regular(4, 4, 0)


def test_model_rb_bound():
    g = gen_model_rb(5, 3, 0.3, 1.0, 0)
    assert g.n_nodes == 15
    # each group is a clique
    for grp in range(5):
        nodes = range(grp * 3, grp * 3 + 3)
        assert all((a, b) in g.edge_set() for a in nodes for b in nodes if a < b)


def test_graph_pickles():
    import pickle

    g = gen_random_regular(10, 3, 0)
    assert pickle.loads(pickle.dumps(g)) == g
