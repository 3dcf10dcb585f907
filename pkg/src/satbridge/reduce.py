"""CO instance -> Max-SAT formula -> variable/clause bipartite graph, and back."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import CoInstance, ProblemKind
from .maxsat import Clause, Formula, Literal, as_assignment

MDS_MODES = ("per-node", "per-edge")


def reduce_to_maxsat(instance: CoInstance, mds_clause_mode: str = "per-node") -> Formula:
    """Encode the instance; variable ``i`` is node ``i``.

    Hard clauses come first (edge order for MIS, node order for MDS), then
    soft clauses (node order for MIS/MDS, edge order for Max-Cut).

    ``mds_clause_mode="per-edge"`` emits ``x_i | x_j`` per edge for MDS, which
    is a vertex-cover constraint and not a domination constraint; it is only
    there to compare against that reading.
    """
    g, kind = instance.graph, instance.kind
    n = g.n_nodes
    clauses: list[Clause] = []
    if kind is ProblemKind.MIS:
        for u, v in g.edges:
            clauses.append(Clause((Literal(int(u), True), Literal(int(v), True)), hard=True))
        clauses.extend(Clause((Literal(i, False),)) for i in range(n))
    elif kind is ProblemKind.MDS:
        if mds_clause_mode == "per-node":
            for i in range(n):
                block = sorted([i, *map(int, g.neighbors(i))])
                clauses.append(Clause(tuple(Literal(j, False) for j in block), hard=True))
        elif mds_clause_mode == "per-edge":
            for u, v in g.edges:
                clauses.append(Clause((Literal(int(u), False), Literal(int(v), False)), hard=True))
        else:
            raise ValueError(f"mds_clause_mode must be one of {MDS_MODES}")
        clauses.extend(Clause((Literal(i, True),)) for i in range(n))
    else:
        for u, v in g.edges:
            u, v = int(u), int(v)
            clauses.append(Clause((Literal(u, False), Literal(v, False))))
            clauses.append(Clause((Literal(u, True), Literal(v, True))))
    return Formula(n, tuple(clauses))


@dataclass(frozen=True, eq=False)
class BipartiteGraph:
    """Variable/clause incidence graph with one polarity-tagged edge per literal.

    Edge arrays are in clause order, then literal order within the clause.
    ``edge_neg[e]`` is True when the literal on edge ``e`` is negated.
    """

    n_vars: int
    n_clauses: int
    edge_var: np.ndarray
    edge_clause: np.ndarray
    edge_neg: np.ndarray

    def __post_init__(self):
        for name in ("edge_var", "edge_clause"):
            a = np.ascontiguousarray(getattr(self, name), dtype=np.int64)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        pol = np.ascontiguousarray(self.edge_neg, dtype=bool)
        pol.setflags(write=False)
        object.__setattr__(self, "edge_neg", pol)

    @property
    def n_edges(self) -> int:
        return len(self.edge_var)

    @property
    def var_degree(self) -> np.ndarray:
        return np.bincount(self.edge_var, minlength=self.n_vars)

    @property
    def clause_degree(self) -> np.ndarray:
        return np.bincount(self.edge_clause, minlength=self.n_clauses)

    def var_adjacency(self) -> list[np.ndarray]:
        """Edge indices incident to each variable."""
        order = np.argsort(self.edge_var, kind="stable")
        return np.split(order, np.cumsum(self.var_degree)[:-1])

    def clause_adjacency(self) -> list[np.ndarray]:
        order = np.argsort(self.edge_clause, kind="stable")
        return np.split(order, np.cumsum(self.clause_degree)[:-1])

    def __eq__(self, other):
        return (isinstance(other, BipartiteGraph)
                and (self.n_vars, self.n_clauses) == (other.n_vars, other.n_clauses)
                and np.array_equal(self.edge_var, other.edge_var)
                and np.array_equal(self.edge_clause, other.edge_clause)
                and np.array_equal(self.edge_neg, other.edge_neg))


def build_bipartite(formula: Formula) -> BipartiteGraph:
    arr = formula.arrays
    sizes = np.diff(arr.lit_ptr)
    return BipartiteGraph(
        n_vars=formula.n_vars,
        n_clauses=formula.m,
        edge_var=arr.lit_var,
        edge_clause=np.repeat(np.arange(formula.m, dtype=np.int64), sizes),
        edge_neg=arr.lit_neg.astype(bool),
    )


@dataclass(frozen=True)
class SolutionReport:
    selected: frozenset
    objective: int
    feasible: bool

    @property
    def size(self) -> int:
        return len(self.selected)


def recover_solution(instance: CoInstance, assignment) -> SolutionReport:
    mask = as_assignment(assignment, instance.graph.n_nodes)
    kind = instance.kind
    return SolutionReport(
        selected=frozenset(int(i) for i in np.flatnonzero(mask)),
        objective=kind.objective(instance.graph, mask),
        feasible=kind.feasible(instance.graph, mask),
    )
