"""Minimal reverse-mode automatic differentiation over numpy arrays.

Each op records its parents and a closure that maps the output adjoint to
parent adjoints.  ``backward`` walks the tape in reverse topological order.
Only the ops the bipartite attention model needs are provided.
"""

from __future__ import annotations

import numpy as np

from .. import kernels


class Tensor:
    __slots__ = ("data", "grad", "parents", "backward_fn", "requires_grad", "name")

    def __init__(self, data, requires_grad=False, parents=(), backward_fn=None, name=None):
        self.data = data
        self.grad = None
        self.parents = parents
        self.backward_fn = backward_fn
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, name={self.name!r})"

    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


def constant(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x))


def _node(data, parents, fn):
    parents = tuple(parents)
    if not any(p.requires_grad for p in parents):
        return Tensor(data)
    return Tensor(data, parents=parents, backward_fn=fn)


def _unbroadcast(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def add(a, b):
    a, b = constant(a), constant(b)
    return _node(a.data + b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def mul(a, b):
    a, b = constant(a), constant(b)
    return _node(a.data * b.data, (a, b),
                 lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)))


def scale(a, c: float):
    return _node(a.data * c, (a,), lambda g: (g * c,))


def matmul(a, b):
    return _node(a.data @ b.data, (a, b), lambda g: (g @ b.data.T, a.data.T @ g))


def silu(a):
    s = _sigmoid(a.data)
    out = a.data * s
    return _node(out, (a,), lambda g: (g * (s * (1.0 + a.data * (1.0 - s))),))


def concat(tensors, axis=-1):
    tensors = [constant(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    cuts = np.cumsum(sizes)[:-1]
    return _node(np.concatenate([t.data for t in tensors], axis=axis), tensors,
                 lambda g: tuple(np.split(g, cuts, axis=axis)))


def reshape(a, shape):
    old = a.shape
    return _node(a.data.reshape(shape), (a,), lambda g: (g.reshape(old),))


def sum_last(a):
    """Sum over the last axis."""
    shape = a.shape
    return _node(a.data.sum(axis=-1), (a,),
                 lambda g: (np.broadcast_to(g[..., None], shape).copy(),))


def take_rows(a, index):
    """``a[index]`` along axis 0 (gather)."""
    n = a.shape[0]

    def back(g):
        flat = g.reshape(g.shape[0], -1)
        out = kernels.segment_sum(np.ascontiguousarray(flat), index, n)
        return (out.reshape((n,) + g.shape[1:]),)

    return _node(a.data[index], (a,), back)


def segment_sum(a, index, n_seg):
    """Row-wise scatter-add of ``a`` into ``n_seg`` segments."""
    shape = a.shape
    flat = np.ascontiguousarray(a.data.reshape(shape[0], -1))
    out = kernels.segment_sum(flat, index, n_seg).reshape((n_seg,) + shape[1:])
    return _node(out, (a,), lambda g: (g[index],))


def segment_softmax(scores, index, n_seg):
    """Softmax of ``scores`` (E, H) within groups of rows sharing ``index``."""
    s = scores.data
    mx = kernels.segment_max(np.ascontiguousarray(s), index, n_seg)
    ex = np.exp(s - mx[index])
    den = kernels.segment_sum(ex, index, n_seg)
    alpha = ex / den[index]

    def back(g):
        inner = kernels.segment_sum(np.ascontiguousarray(g * alpha), index, n_seg)
        return (alpha * (g - inner[index]),)

    return _node(alpha, (scores,), back)


def _softplus(z):
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def bce_with_logits(logits, targets, weights):
    """``sum_i w_i * BCE(sigmoid(z_i), y_i)`` in the stable softplus form."""
    z = logits.data
    y = np.asarray(targets, dtype=z.dtype)
    w = np.asarray(weights, dtype=z.dtype)
    val = np.sum(w * (_softplus(z) - y * z))
    return _node(np.asarray(val, dtype=z.dtype), (logits,),
                 lambda g: (g * w * (_sigmoid(z) - y),))


def grad_reverse(a, coef: float):
    """Identity forward; multiplies the incoming adjoint by ``-coef``."""
    return _node(a.data, (a,), lambda g: (-coef * g,))


def backward(root: Tensor):
    """Accumulate ``d root / d leaf`` into ``.grad`` of every leaf requiring grad."""
    order = []
    seen = set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    grads = {id(root): np.ones_like(root.data)}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node.backward_fn is None:
            node.grad = g if node.grad is None else node.grad + g
            continue
        for p, pg in zip(node.parents, node.backward_fn(g)):
            if not p.requires_grad:
                continue
            key = id(p)
            grads[key] = pg if key not in grads else grads[key] + pg
