"""Undirected simple graphs, CO problem kinds, file parsers and generators."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)


class GraphFormatError(ValueError):
    """Malformed graph file; carries the 1-based line number when known."""

    def __init__(self, msg: str, lineno: int | None = None):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {msg}" if lineno is not None else msg)


class GenerationError(RuntimeError):
    pass


class Graph:
    """Immutable undirected simple graph on nodes ``0..n_nodes-1``.

    ``edges`` is an ``(E, 2)`` int array with ``u < v`` per row, in insertion
    order.  Adjacency is kept in CSR form (``indptr``, ``indices``) with each
    neighbour list sorted ascending.
    """

    __slots__ = ("n_nodes", "edges", "indptr", "indices")

    def __init__(self, n_nodes: int, edges: Iterable[Sequence[int]] | np.ndarray):
        n_nodes = int(n_nodes)
        if n_nodes < 0:
            raise ValueError("n_nodes must be non-negative")
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        e = e.reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n_nodes):
            raise ValueError("edge endpoint out of range")
        if np.any(e[:, 0] == e[:, 1]):
            raise ValueError("self-loops are not allowed")
        e = np.sort(e, axis=1)
        if len(np.unique(e[:, 0] * n_nodes + e[:, 1])) != len(e):
            raise ValueError("duplicate edge")
        e.setflags(write=False)

        both = np.concatenate([e, e[:, ::-1]]) if len(e) else np.empty((0, 2), np.int64)
        order = np.lexsort((both[:, 1], both[:, 0]))
        both = both[order]
        indptr = np.zeros(n_nodes + 1, np.int64)
        np.cumsum(np.bincount(both[:, 0], minlength=n_nodes), out=indptr[1:])
        indices = np.ascontiguousarray(both[:, 1])
        indptr.setflags(write=False)
        indices.setflags(write=False)
        object.__setattr__(self, "n_nodes", n_nodes)
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)

    def __setattr__(self, name, value):
        raise AttributeError("Graph is immutable")

    def __reduce__(self):
        return Graph, (self.n_nodes, np.array(self.edges))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    @property
    def adjacency(self) -> list[np.ndarray]:
        return [self.neighbors(v) for v in range(self.n_nodes)]

    def degree(self, v: int | None = None):
        deg = np.diff(self.indptr)
        return deg if v is None else int(deg[v])

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self.edges}

    def relabel(self, perm: Sequence[int]) -> "Graph":
        """Graph with node ``i`` renamed to ``perm[i]``; edge order preserved."""
        perm = np.asarray(perm, dtype=np.int64)
        return Graph(self.n_nodes, perm[self.edges])

    def __eq__(self, other):
        return (isinstance(other, Graph) and self.n_nodes == other.n_nodes
                and np.array_equal(self.edges, other.edges))

    def __hash__(self):
        return hash((self.n_nodes, self.edges.tobytes()))

    def __repr__(self):
        return f"Graph(n_nodes={self.n_nodes}, n_edges={self.n_edges})"


def _selected_mask(n: int, selected) -> np.ndarray:
    if isinstance(selected, (set, frozenset)):
        selected = sorted(selected)
    sel = np.asarray(selected)
    if sel.dtype == bool:
        if sel.shape != (n,):
            raise ValueError(f"selection mask must have length {n}")
        return sel
    mask = np.zeros(n, bool)
    mask[sel.astype(np.int64)] = True
    return mask


class ProblemKind(enum.Enum):
    """The three CO problems; value is ``(name, maximize?)``."""

    MAXCUT = ("maxcut", True)
    MIS = ("mis", True)
    MDS = ("mds", False)

    @property
    def maximize(self) -> bool:
        return self.value[1]

    @classmethod
    def parse(cls, name: str | "ProblemKind") -> "ProblemKind":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "").replace("_", "")
        for kind in cls:
            if kind.value[0] == key:
                return kind
        raise ValueError(f"unknown problem kind {name!r}")

    def __str__(self):
        return self.value[0]

    def feasible(self, graph: Graph, selected) -> bool:
        mask = _selected_mask(graph.n_nodes, selected)
        if self is ProblemKind.MAXCUT:
            return True
        if self is ProblemKind.MIS:
            e = graph.edges
            return not np.any(mask[e[:, 0]] & mask[e[:, 1]])
        # MDS: every node selected or adjacent to a selected node
        covered = mask.copy()
        e = graph.edges
        covered[e[mask[e[:, 0]], 1]] = True
        covered[e[mask[e[:, 1]], 0]] = True
        return bool(covered.all())

    def objective(self, graph: Graph, selected) -> int:
        """Cut size for Max-Cut, set size for MIS and MDS."""
        mask = _selected_mask(graph.n_nodes, selected)
        if self is ProblemKind.MAXCUT:
            e = graph.edges
            return int(np.count_nonzero(mask[e[:, 0]] != mask[e[:, 1]]))
        return int(mask.sum())


@dataclass(frozen=True)
class CoInstance:
    graph: Graph
    kind: ProblemKind
    name: str = field(default="")

    def __post_init__(self):
        object.__setattr__(self, "kind", ProblemKind.parse(self.kind))


def _ints(tokens, lineno):
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise GraphFormatError(f"expected integers, got {' '.join(tokens)!r}", lineno) from None


def _check_edge(u, v, n, seen, lineno):
    if not (1 <= u <= n and 1 <= v <= n):
        raise GraphFormatError(f"node index out of range 1..{n}: {u} {v}", lineno)
    if u == v:
        raise GraphFormatError(f"self-loop on node {u}", lineno)
    key = (min(u, v), max(u, v))
    dup = key in seen
    seen.add(key)
    return key, dup


def parse_gset(text: str) -> Graph:
    """Parse a GSET edge list (``n m`` header, then ``u v w`` lines, 1-based).

    Weights are read and discarded; a warning is logged if any weight is not 1.
    """
    lines = text.splitlines()
    header = None
    edges = []
    seen: set = set()
    odd_weights = 0
    for lineno, raw in enumerate(lines, start=1):
        tok = raw.split()
        if not tok:
            continue
        if header is None:
            if len(tok) != 2:
                raise GraphFormatError("header must be 'n m'", lineno)
            n, m = _ints(tok, lineno)
            if n < 0 or m < 0:
                raise GraphFormatError("negative header value", lineno)
            header = (n, m)
            continue
        if len(tok) not in (2, 3):
            raise GraphFormatError("edge line must be 'u v w'", lineno)
        vals = _ints(tok, lineno)
        key, dup = _check_edge(vals[0], vals[1], header[0], seen, lineno)
        if dup:
            raise GraphFormatError(f"duplicate edge {vals[0]} {vals[1]}", lineno)
        if len(vals) == 3 and vals[2] != 1:
            odd_weights += 1
        edges.append((key[0] - 1, key[1] - 1))
    if header is None:
        raise GraphFormatError("empty file: missing 'n m' header")
    if len(edges) != header[1]:
        raise GraphFormatError(f"header declares {header[1]} edges, found {len(edges)}")
    if odd_weights:
        log.warning("GSET file: %d edge weights != 1 treated as unit weights", odd_weights)
    return Graph(header[0], edges)


def parse_dimacs(text: str) -> Graph:
    """Parse a DIMACS ``p edge n m`` graph; duplicate edges are dropped with a warning."""
    n = None
    declared = 0
    edges = []
    seen: set = set()
    dups = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tok = raw.split()
        if not tok or tok[0] == "c":
            continue
        if tok[0] == "p":
            if n is not None:
                raise GraphFormatError("second 'p' line", lineno)
            if len(tok) != 4 or tok[1] not in ("edge", "col"):
                raise GraphFormatError("problem line must be 'p edge n m'", lineno)
            n, declared = _ints(tok[2:], lineno)
            continue
        if tok[0] == "e":
            if n is None:
                raise GraphFormatError("edge line before 'p' line", lineno)
            if len(tok) != 3:
                raise GraphFormatError("edge line must be 'e u v'", lineno)
            u, v = _ints(tok[1:], lineno)
            key, dup = _check_edge(u, v, n, seen, lineno)
            if dup:
                dups += 1
                continue
            edges.append((key[0] - 1, key[1] - 1))
            continue
        raise GraphFormatError(f"unknown line type {tok[0]!r}", lineno)
    if n is None:
        raise GraphFormatError("missing 'p edge n m' line")
    if dups:
        log.warning("DIMACS file: %d duplicate edges ignored", dups)
    if len(edges) + dups != declared:
        log.warning("DIMACS file: header declares %d edges, read %d lines", declared, len(edges) + dups)
    return Graph(n, edges)


def load_graph(path, fmt: str | None = None) -> Graph:
    """Read a GSET or DIMACS file; format guessed from content when not given."""
    with open(path) as f:
        text = f.read()
    if fmt is None:
        first = next((ln.split() for ln in text.splitlines()
                      if ln.strip() and not ln.startswith("c")), [])
        fmt = "dimacs" if first[:1] == ["p"] else "gset"
    return parse_dimacs(text) if fmt == "dimacs" else parse_gset(text)


def gen_random_regular(n: int, gamma: int, seed: int, max_restarts: int = 1000) -> Graph:
    """Uniform-ish random ``gamma``-regular graph via the pairing model.

    Stubs are paired at random; a pair that would form a self-loop or a
    repeated edge is rejected and redrawn.  When no admissible pair remains
    the whole pairing restarts.
    """
    if gamma < 0 or n <= 0:
        raise ValueError("need n > 0 and gamma >= 0")
    if (n * gamma) % 2:
        raise ValueError(f"n*gamma must be even (n={n}, gamma={gamma})")
    if gamma >= n:
        raise ValueError(f"gamma must be < n (n={n}, gamma={gamma})")
    rng = np.random.default_rng(seed)
    for _ in range(max_restarts):
        edges = _try_pairing(n, gamma, rng)
        if edges is not None:
            return Graph(n, edges)
    raise GenerationError(f"no simple {gamma}-regular pairing on {n} nodes after {max_restarts} restarts")


def _try_pairing(n, gamma, rng):
    stubs = list(np.repeat(np.arange(n), gamma))
    edges = []
    present = set()
    while stubs:
        ok = False
        for _ in range(8 * len(stubs)):
            i, j = rng.integers(len(stubs), size=2)
            u, v = stubs[i], stubs[j]
            if i == j or u == v or (min(u, v), max(u, v)) in present:
                continue
            ok = True
            break
        if not ok:
            # exhaustive check before giving up on this pairing
            pair = _any_admissible(stubs, present)
            if pair is None:
                return None
            i, j = pair
            u, v = stubs[i], stubs[j]
        key = (int(min(u, v)), int(max(u, v)))
        present.add(key)
        edges.append(key)
        for k in sorted((i, j), reverse=True):
            stubs[k] = stubs[-1]
            stubs.pop()
    return edges


def _any_admissible(stubs, present):
    for i in range(len(stubs)):
        for j in range(i + 1, len(stubs)):
            u, v = stubs[i], stubs[j]
            if u != v and (min(u, v), max(u, v)) not in present:
                return i, j
    return None


def gen_erdos_renyi(n: int, p: float, seed: int) -> Graph:
    """G(n, p) with edges listed in lexicographic order."""
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    return Graph(n, np.stack([iu[keep], ju[keep]], axis=1))


def gen_model_rb(n_groups: int, group_size: int, p: float, r: float, seed: int) -> Graph:
    """Model RB graph in the style of the frb benchmarks.

    ``n_groups`` disjoint cliques of ``group_size`` nodes; for
    ``round(r * n_groups * ln n_groups)`` random pairs of groups,
    ``round(p * group_size**2)`` random cross pairs are joined.  Because the
    cliques partition the nodes, no independent set exceeds ``n_groups``.
    """
    rng = np.random.default_rng(seed)
    d = group_size
    present = set()
    for g in range(n_groups):
        base = g * d
        for a in range(d):
            for b in range(a + 1, d):
                present.add((base + a, base + b))
    n_constraints = int(round(r * n_groups * np.log(n_groups)))
    n_incompat = int(round(p * d * d))
    for _ in range(n_constraints):
        g1, g2 = rng.choice(n_groups, size=2, replace=False)
        cells = rng.choice(d * d, size=n_incompat, replace=False)
        for cell in cells:
            u, v = g1 * d + cell // d, g2 * d + cell % d
            present.add((int(min(u, v)), int(max(u, v))))
    return Graph(n_groups * d, sorted(present))
