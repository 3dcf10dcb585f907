"""From per-node probabilities to feasible solutions.

Pipeline for MIS / MDS: threshold -> repair -> (MIS) greedy completion ->
local search.  Max-Cut: threshold -> 1-flip local search.  Setting
``SATBRIDGE_CHECKS=1`` re-verifies feasibility (and monotonicity of the
local search) after every operation.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import kernels
from .graph import CoInstance, Graph, ProblemKind

DEFAULT_STEPS = 120


def _checks_on() -> bool:
    return os.environ.get("SATBRIDGE_CHECKS", "").strip().lower() in {"1", "true", "yes"}


def _verify(instance: CoInstance, sel, what: str):
    if _checks_on() and not instance.kind.feasible(instance.graph, _mask(instance.graph, sel)):
        raise AssertionError(f"{what} produced an infeasible {instance.kind} solution")


def _mask(graph: Graph, sel) -> np.ndarray:
    m = np.zeros(graph.n_nodes, bool)
    m[list(sel)] = True
    return m


def _probs(instance: CoInstance, probs) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    if p.shape != (instance.graph.n_nodes,):
        raise ValueError(f"expected {instance.graph.n_nodes} probabilities, got {p.shape}")
    return p


def _desc(p: np.ndarray, nodes=None) -> np.ndarray:
    """Nodes by descending probability, ties by index."""
    nodes = np.arange(len(p)) if nodes is None else np.asarray(sorted(nodes), np.int64)
    return nodes[np.argsort(-p[nodes], kind="stable")]


def _asc(p: np.ndarray, nodes) -> np.ndarray:
    nodes = np.asarray(sorted(nodes), np.int64)
    return nodes[np.argsort(p[nodes], kind="stable")]


def threshold_decode(probs, instance: CoInstance) -> frozenset:
    """Nodes with probability strictly above 0.5."""
    p = _probs(instance, probs)
    return frozenset(np.flatnonzero(p > 0.5).tolist())


def needs_repair(instance: CoInstance, raw) -> bool:
    return not instance.kind.feasible(instance.graph, _mask(instance.graph, raw))


def repair(instance: CoInstance, raw, probs) -> frozenset:
    """Make ``raw`` feasible using the probabilities as a priority order.

    MIS: keep raw nodes in descending probability while independent.
    MDS: add the most probable dominator of every undominated node, then
    drop redundant nodes in ascending probability.  Max-Cut: unchanged.
    """
    g, kind = instance.graph, instance.kind
    p = _probs(instance, probs)
    if kind is ProblemKind.MAXCUT:
        return frozenset(raw)
    adj = g.adjacency
    if kind is ProblemKind.MIS:
        keep = np.zeros(g.n_nodes, bool)
        for v in _desc(p, raw):
            if not keep[adj[v]].any():
                keep[v] = True
        out = frozenset(np.flatnonzero(keep).tolist())
    else:
        sel = _mask(g, raw)
        dom = _dom_counts(g, sel)
        for u in range(g.n_nodes):
            if dom[u] == 0:
                best = int(_desc(p, np.append(adj[u], u).tolist())[0])
                sel[best] = True
                dom[best] += 1
                dom[adj[best]] += 1
        _prune_redundant(g, sel, dom, p)
        out = frozenset(np.flatnonzero(sel).tolist())
    _verify(instance, out, "repair")
    return out


def complete_mis(instance: CoInstance, sel, probs=None) -> frozenset:
    """Extend an independent set to a maximal one, most probable nodes first."""
    g = instance.graph
    p = np.zeros(g.n_nodes) if probs is None else _probs(instance, probs)
    keep = _mask(g, sel)
    blocked = keep.copy()
    for v in np.flatnonzero(keep):
        blocked[g.neighbors(v)] = True
    adj = g.adjacency
    for v in _desc(p):
        if not blocked[v]:
            keep[v] = True
            blocked[v] = True
            blocked[adj[v]] = True
    out = frozenset(np.flatnonzero(keep).tolist())
    _verify(instance, out, "complete_mis")
    return out


def _dom_counts(g: Graph, sel: np.ndarray) -> np.ndarray:
    """Number of selected nodes in each closed neighbourhood."""
    dom = sel.astype(np.int64)
    e = g.edges
    np.add.at(dom, e[:, 0], sel[e[:, 1]])
    np.add.at(dom, e[:, 1], sel[e[:, 0]])
    return dom


def _prune_redundant(g: Graph, sel: np.ndarray, dom: np.ndarray, score: np.ndarray) -> int:
    removed = 0
    adj = g.adjacency
    for v in _asc(score, np.flatnonzero(sel)):
        if dom[v] >= 2 and np.all(dom[adj[v]] >= 2):
            sel[v] = False
            dom[v] -= 1
            dom[adj[v]] -= 1
            removed += 1
    return removed


def _mds_swap_pass(g: Graph, sel: np.ndarray, dom: np.ndarray, score: np.ndarray) -> int:
    """Swap a dominator v for a higher-scoring neighbour u when domination survives."""
    adj = g.adjacency
    swaps = 0
    for v in np.flatnonzero(sel):
        if not sel[v]:
            continue
        for u in adj[v]:
            if sel[u] or score[u] <= score[v]:
                continue
            # closed neighbourhood of v loses v; closed neighbourhood of u gains u
            lose = np.append(adj[v], v)
            gain = np.zeros(g.n_nodes, bool)
            gain[adj[u]] = True
            gain[u] = True
            if np.all(dom[lose] - 1 + gain[lose] >= 1):
                sel[v] = False
                dom[lose] -= 1
                sel[u] = True
                dom[adj[u]] += 1
                dom[u] += 1
                swaps += 1
                break
    return swaps


def local_search_2improve(instance: CoInstance, sel, steps: int = DEFAULT_STEPS, probs=None,
                          trace: list | None = None) -> frozenset:
    """Local search from a feasible set.

    MIS: first-improvement 2-improvement passes ({v} -> {j, k} with j, k
    1-tight and non-adjacent).  MDS: redundant removal plus score-improving
    1-swaps, scored by ``probs`` (degree when absent).  Stops after
    ``steps`` passes or a pass with no move.  ``trace`` collects the
    objective after every pass.
    """
    g, kind = instance.graph, instance.kind
    mask = _mask(g, sel)
    if not kind.feasible(g, mask):
        raise ValueError(f"local search needs a feasible {kind} solution")
    if kind is ProblemKind.MAXCUT:
        raise ValueError("use maxcut_local_search for Max-Cut")
    start = int(mask.sum())
    if kind is ProblemKind.MIS:
        selected = mask.astype(np.uint8)
        tight = np.zeros(g.n_nodes, np.int64)
        e = g.edges
        np.add.at(tight, e[:, 0], selected[e[:, 1]])
        np.add.at(tight, e[:, 1], selected[e[:, 0]])
        for _ in range(steps):
            moves = kernels.mis_two_improve_pass(g.indptr, g.indices, selected, tight)
            _track(instance, selected.astype(bool), trace, start)
            if moves == 0:
                break
        mask = selected.astype(bool)
    else:
        score = np.asarray(g.degree(), float) if probs is None else _probs(instance, probs)
        dom = _dom_counts(g, mask)
        for _ in range(steps):
            changed = _prune_redundant(g, mask, dom, score)
            changed += _mds_swap_pass(g, mask, dom, score)
            _track(instance, mask, trace, start)
            if changed == 0:
                break
    return frozenset(np.flatnonzero(mask).tolist())


def _track(instance, mask, trace, start):
    size = int(mask.sum())
    if trace is not None:
        trace.append(size)
    if _checks_on():
        if not instance.kind.feasible(instance.graph, mask):
            raise AssertionError("local search left the feasible region")
        worse = size < start if instance.kind is ProblemKind.MIS else size > start
        if worse:
            raise AssertionError("local search made the objective worse")


def maxcut_local_search(instance: CoInstance, sel, steps: int = DEFAULT_STEPS,
                        trace: list | None = None) -> frozenset:
    """1-flip hill climbing: move a node when most of its neighbours share its side."""
    g = instance.graph
    side = _mask(g, sel).astype(np.uint8)
    for _ in range(steps):
        flips = kernels.maxcut_flip_pass(g.indptr, g.indices, side)
        if trace is not None:
            trace.append(ProblemKind.MAXCUT.objective(g, side.astype(bool)))
        if flips == 0:
            break
    return frozenset(np.flatnonzero(side).tolist())


@dataclass(frozen=True)
class DecodeResult:
    selected: frozenset
    objective: int
    raw_objective: int | None   # objective of the thresholded set (None if infeasible)
    raw_feasible: bool


def decode(instance: CoInstance, probs, steps: int = DEFAULT_STEPS, local_search: bool = True) -> DecodeResult:
    """Full decoding: threshold, repair, completion and local search."""
    g, kind = instance.graph, instance.kind
    raw = threshold_decode(probs, instance)
    raw_ok = not needs_repair(instance, raw)
    raw_obj = kind.objective(g, _mask(g, raw)) if raw_ok else None
    if kind is ProblemKind.MAXCUT:
        sel = maxcut_local_search(instance, raw, steps) if local_search else raw
    else:
        sel = repair(instance, raw, probs)
        if kind is ProblemKind.MIS:
            sel = complete_mis(instance, sel, probs)
        if local_search:
            sel = local_search_2improve(instance, sel, steps, probs)
    _verify(instance, sel, "decode")
    return DecodeResult(sel, kind.objective(g, _mask(g, sel)), raw_obj, raw_ok)


def greedy_mis(graph: Graph) -> frozenset:
    """Repeatedly take a minimum-degree node of the remaining graph."""
    alive = np.ones(graph.n_nodes, bool)
    deg = np.asarray(graph.degree(), np.int64).copy()
    adj = graph.adjacency
    out = []
    while alive.any():
        cand = np.flatnonzero(alive)
        v = int(cand[np.argmin(deg[cand])])
        out.append(v)
        gone = [v] + [u for u in adj[v] if alive[u]]
        alive[gone] = False
        for u in gone:
            deg[adj[u]] -= 1
    return frozenset(out)


def greedy_mds(graph: Graph) -> frozenset:
    """Repeatedly take the node dominating the most undominated nodes."""
    adj = graph.adjacency
    covered = np.zeros(graph.n_nodes, bool)
    out = []
    while not covered.all():
        gain = np.array([(not covered[v]) + int(np.count_nonzero(~covered[adj[v]]))
                         for v in range(graph.n_nodes)])
        v = int(np.argmax(gain))
        out.append(v)
        covered[v] = True
        covered[adj[v]] = True
    return frozenset(out)


def greedy_maxcut(instance: CoInstance, seed: int, steps: int = DEFAULT_STEPS) -> frozenset:
    """Uniform random bipartition followed by 1-flip local search."""
    rng = np.random.default_rng(seed)
    side = rng.random(instance.graph.n_nodes) < 0.5
    return maxcut_local_search(instance, np.flatnonzero(side), steps)


def greedy_baseline(instance: CoInstance, seed: int = 0, steps: int = DEFAULT_STEPS) -> frozenset:
    kind = instance.kind
    if kind is ProblemKind.MIS:
        sel = greedy_mis(instance.graph)
        return local_search_2improve(instance, sel, steps)
    if kind is ProblemKind.MDS:
        sel = greedy_mds(instance.graph)
        return local_search_2improve(instance, sel, steps)
    return greedy_maxcut(instance, seed, steps)
