"""Bipartite attention network over variable/clause incidence graphs.

Parameters live in a flat ``dict[str, ndarray]`` (insertion order is the
canonical order used by checkpoints and the optimiser).  Layer ``l``
contains a clause-side block (variables -> clauses) and a variable-side
block (clauses -> variables), each with per-head query/key/value
projections stored column-stacked as ``(d, heads * d_head)`` matrices and a
2-layer combine MLP over ``[own feature || concatenated head messages]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..reduce import BipartiteGraph
from . import autodiff as ad
from .config import TrainConfig


class NumericError(FloatingPointError):
    def __init__(self, msg, layer=None):
        super().__init__(msg)
        self.layer = layer


def _glorot(rng, shape, dtype):
    fan_in, fan_out = shape[0], shape[-1]
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=shape).astype(dtype)


def _mlp_shapes(prefix, d_in, d_hidden, d_out):
    return [(f"{prefix}.w1", (d_in, d_hidden)), (f"{prefix}.b1", (d_hidden,)),
            (f"{prefix}.w2", (d_hidden, d_out)), (f"{prefix}.b2", (d_out,))]


def param_shapes(cfg: TrainConfig, heads=("head",)) -> list[tuple[str, tuple]]:
    d, w = cfg.d, cfg.width
    shapes = _mlp_shapes("init_var", cfg.raw_width, d, d) + _mlp_shapes("init_clause", cfg.raw_width, d, d)
    for l in range(cfg.n_layers):
        shapes.append((f"layer{l}.pol", (2, d)))
        for side in ("clause", "var"):
            p = f"layer{l}.{side}"
            shapes += [(f"{p}.wq", (d, w)), (f"{p}.wk", (d, w)), (f"{p}.wv", (d, w))]
            shapes += _mlp_shapes(f"{p}.mlp", d + w, d, d)
    for h in heads:
        shapes += _mlp_shapes(h, d, d, 1)
    shapes += _mlp_shapes("disc", d, d, 1)
    return shapes


def init_params(cfg: TrainConfig, rng: np.random.Generator | None = None) -> dict[str, np.ndarray]:
    """Glorot-uniform weights, zero biases; deterministic for a given ``cfg.seed``."""
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    out = {}
    for name, shape in param_shapes(cfg):
        if len(shape) == 1:
            out[name] = np.zeros(shape, cfg.dtype)
        else:
            out[name] = _glorot(rng, shape, cfg.dtype)
    return out


def frozen_names(params, cfg: TrainConfig) -> frozenset:
    """Init MLPs plus the first ``cfg.frozen_layers`` attention layers."""
    if cfg.frozen_layers == 0:
        return frozenset()
    prefixes = ("init_var.", "init_clause.") + tuple(f"layer{l}." for l in range(cfg.frozen_layers))
    return frozenset(n for n in params if n.startswith(prefixes))


@dataclass
class Batch:
    """One or more bipartite graphs merged into a disjoint union."""

    n_vars: int
    n_clauses: int
    edge_var: np.ndarray
    edge_clause: np.ndarray
    edge_neg: np.ndarray
    x_raw: np.ndarray
    c_raw: np.ndarray
    var_offsets: np.ndarray   # (k+1,) instance boundaries over variables

    @property
    def n_instances(self) -> int:
        return len(self.var_offsets) - 1

    def instance_of_var(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_instances), np.diff(self.var_offsets))


def raw_attributes(bip: BipartiteGraph, cfg: TrainConfig):
    """Per-node input attributes: ``[1, degree / max degree on that side]``."""
    def side(deg, n):
        if not cfg.degree_feature:
            return np.ones((n, 1), cfg.dtype)
        top = deg.max() if n and deg.max() > 0 else 1
        return np.stack([np.ones(n), deg / top], axis=1).astype(cfg.dtype)

    return side(bip.var_degree, bip.n_vars), side(bip.clause_degree, bip.n_clauses)


def collate(graphs, cfg: TrainConfig) -> Batch:
    ev, ec, en, xr, cr = [], [], [], [], []
    voff = [0]
    n = m = 0
    for b in graphs:
        ev.append(b.edge_var + n)
        ec.append(b.edge_clause + m)
        en.append(b.edge_neg)
        x, c = raw_attributes(b, cfg)
        xr.append(x)
        cr.append(c)
        n += b.n_vars
        m += b.n_clauses
        voff.append(n)
    cat = lambda xs, dt: np.ascontiguousarray(np.concatenate(xs).astype(dt)) if xs else np.empty(0, dt)
    return Batch(n, m, cat(ev, np.int64), cat(ec, np.int64), cat(en, bool),
                 np.concatenate(xr), np.concatenate(cr), np.asarray(voff, np.int64))


def as_batch(obj, cfg: TrainConfig) -> Batch:
    if isinstance(obj, Batch):
        return obj
    if isinstance(obj, BipartiteGraph):
        return collate([obj], cfg)
    return collate(list(obj), cfg)


def tensors(params: dict, requires_grad: bool = True) -> dict[str, ad.Tensor]:
    return {k: ad.Tensor(v, requires_grad=requires_grad, name=k) for k, v in params.items()}


def _mlp(x, P, prefix):
    h = ad.silu(ad.add(ad.matmul(x, P[prefix + ".w1"]), P[prefix + ".b1"]))
    return ad.add(ad.matmul(h, P[prefix + ".w2"]), P[prefix + ".b2"])


def _attend(P, prefix, target, source, tgt_idx, src_idx, n_tgt, pol_rows, cfg):
    """Attention from ``source`` nodes into ``target`` nodes along edges.

    Returns ``(new_target_features, attention (E, heads))``.
    """
    h, dh = cfg.heads, cfg.d_head
    E = len(tgt_idx)
    q = ad.take_rows(ad.matmul(target, P[prefix + ".wq"]), tgt_idx)
    k = ad.take_rows(ad.matmul(source, P[prefix + ".wk"]), src_idx)
    src = ad.take_rows(source, src_idx)
    if pol_rows is not None:
        src = ad.add(src, pol_rows)
    v = ad.matmul(src, P[prefix + ".wv"])
    scores = ad.sum_last(ad.reshape(ad.mul(q, k), (E, h, dh)))
    if cfg.attention_scale:
        scores = ad.scale(scores, 1.0 / np.sqrt(dh))
    alpha = ad.segment_softmax(scores, tgt_idx, n_tgt)
    msg = ad.mul(ad.reshape(alpha, (E, h, 1)), ad.reshape(v, (E, h, dh)))
    agg = ad.segment_sum(ad.reshape(msg, (E, h * dh)), tgt_idx, n_tgt)
    return _mlp(ad.concat([target, agg], axis=1), P, prefix + ".mlp"), alpha


def _check_finite(t, layer, what):
    if not np.all(np.isfinite(t.data)):
        raise NumericError(f"non-finite {what} activation in layer {layer}", layer)


def forward_t(P: dict, batch: Batch, cfg: TrainConfig, head: str = "head", trace: dict | None = None):
    """Differentiable forward pass; returns ``(logits (n,), features (n, d))`` tensors."""
    X = _mlp(ad.constant(batch.x_raw), P, "init_var")
    C = _mlp(ad.constant(batch.c_raw), P, "init_clause")
    _check_finite(X, -1, "initial")
    pol_idx = batch.edge_neg.astype(np.int64)
    for l in range(cfg.n_layers):
        pol = ad.take_rows(P[f"layer{l}.pol"], pol_idx) if cfg.polarity_edges else None
        C, a_c = _attend(P, f"layer{l}.clause", C, X, batch.edge_clause, batch.edge_var,
                         batch.n_clauses, pol, cfg)
        X, a_v = _attend(P, f"layer{l}.var", X, C, batch.edge_var, batch.edge_clause,
                         batch.n_vars, pol, cfg)
        _check_finite(C, l, "clause")
        _check_finite(X, l, "variable")
        if trace is not None:
            trace.setdefault("clause_attention", []).append(a_c.data)
            trace.setdefault("var_attention", []).append(a_v.data)
    logits = ad.reshape(_mlp(X, P, head), (batch.n_vars,))
    return logits, X


def forward(params: dict, graph, cfg: TrainConfig, head: str = "head", trace: dict | None = None):
    """Inference forward pass on a bipartite graph (or list / Batch); numpy in, numpy out."""
    batch = as_batch(graph, cfg)
    logits, feats = forward_t(tensors(params, requires_grad=False), batch, cfg, head, trace)
    return logits.data, feats.data


def init_embeddings(bip: BipartiteGraph, params: dict, cfg: TrainConfig):
    P = tensors(params, requires_grad=False)
    x, c = raw_attributes(bip, cfg)
    return _mlp(ad.constant(x), P, "init_var").data, _mlp(ad.constant(c), P, "init_clause").data


def _layer_params(params, layer):
    pre = f"layer{layer}."
    return {k: v for k, v in params.items() if k.startswith(pre)}


def clause_aggregate(params: dict, layer: int, X, C, bip: BipartiteGraph, cfg: TrainConfig,
                     return_attention: bool = False):
    """One variables -> clauses attention step of layer ``layer``."""
    P = tensors(_layer_params(params, layer), requires_grad=False)
    pol = (ad.take_rows(P[f"layer{layer}.pol"], bip.edge_neg.astype(np.int64))
           if cfg.polarity_edges else None)
    out, alpha = _attend(P, f"layer{layer}.clause", ad.constant(C), ad.constant(X),
                         bip.edge_clause, bip.edge_var, bip.n_clauses, pol, cfg)
    return (out.data, alpha.data) if return_attention else out.data


def variable_aggregate(params: dict, layer: int, X, C, bip: BipartiteGraph, cfg: TrainConfig,
                       return_attention: bool = False):
    """One clauses -> variables attention step; isolated variables get a zero message."""
    P = tensors(_layer_params(params, layer), requires_grad=False)
    pol = (ad.take_rows(P[f"layer{layer}.pol"], bip.edge_neg.astype(np.int64))
           if cfg.polarity_edges else None)
    out, alpha = _attend(P, f"layer{layer}.var", ad.constant(X), ad.constant(C),
                         bip.edge_var, bip.edge_clause, bip.n_vars, pol, cfg)
    return (out.data, alpha.data) if return_attention else out.data


def sigmoid(z):
    return ad._sigmoid(np.asarray(z, dtype=float))


def predict_proba(params: dict, graph, cfg: TrainConfig, head: str = "head") -> np.ndarray:
    logits, _ = forward(params, graph, cfg, head)
    return sigmoid(logits)
