"""Finite-difference verification of the analytic gradients."""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .config import TrainConfig
from .losses import classification_loss_t, domain_loss_t, finetune_objective, pretrain_objective
from .model import as_batch, forward_t, tensors

LOSSES = ("bce", "domain", "finetune")
REL_FLOOR = 1e-6


def relative_error(analytic, numeric, floor: float = REL_FLOOR) -> np.ndarray:
    """``|a - n| / max(|a|, |n|, floor)`` elementwise."""
    a, n = np.asarray(analytic, float), np.asarray(numeric, float)
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)


def _evaluate(params, cfg, loss, data, lam, grads: bool):
    """Return ``(lc, ld, grads or None)`` for the selected loss path."""
    P = tensors(params, requires_grad=grads)
    if loss == "bce":
        graphs, labels = data["source"]
        root, _ = pretrain_objective(P, as_batch(graphs, cfg), labels, cfg)
        lc, ld = float(root.data), 0.0
    elif loss == "domain":
        (gs, _), (gt, _) = data["source"], data["target"]
        _, fs = forward_t(P, as_batch(gs, cfg), cfg)
        _, ft = forward_t(P, as_batch(gt, cfg), cfg)
        root = domain_loss_t(fs, ft, P, coef=lam)
        lc, ld = 0.0, float(root.data)
    elif loss == "finetune":
        (gs, ys), (gt, yt) = data["source"], data["target"]
        root, parts = finetune_objective(P, as_batch(gs, cfg), ys, as_batch(gt, cfg), yt, cfg, lam=lam)
        lc, ld = parts["loss_cls"], parts["loss_domain"]
    else:
        raise ValueError(f"loss must be one of {LOSSES}")
    if not grads:
        return lc, ld, None
    ad.backward(root)
    return lc, ld, {k: (t.grad if t.grad is not None else np.zeros_like(t.data)) for k, t in P.items()}


def grad_check(source, params, cfg: TrainConfig, loss: str = "bce", target=None,
               step: float = 1e-5, max_entries: int | None = None, seed: int = 0,
               details: bool = False):
    """Max relative error between analytic and central-difference gradients.

    ``source`` / ``target`` are ``(graphs, labels)`` pairs (``graphs`` a
    BipartiteGraph or list).  For the domain and fine-tune paths the analytic
    gradient of a backbone parameter is ``dL_c - lam * dL_d`` (gradient
    reversal) and of a discriminator parameter ``dL_d``; the numeric side
    differences exactly those combinations of the two loss values.
    ``max_entries`` samples that many entries per tensor (all by default).
    """
    if cfg.dtype != np.float64:
        raise ValueError("gradient checks need precision='float64'")
    params = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
    if loss in ("domain", "finetune") and "head_t.w1" not in params:
        for k in [k for k in params if k.startswith("head.")]:
            params["head_t." + k[len("head."):]] = params[k].copy()
    data = {"source": source, "target": target}
    lam = cfg.lam
    _, _, grads = _evaluate(params, cfg, loss, data, lam, grads=True)
    rng = np.random.default_rng(seed)
    worst = 0.0
    report = {}
    for name, p in params.items():
        sign = 1.0 if name.startswith("disc.") else -lam
        flat = p.reshape(-1)
        idx = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            idx = rng.choice(flat.size, size=max_entries, replace=False)
        num = np.empty(len(idx))
        for j, i in enumerate(idx):
            old = flat[i]
            flat[i] = old + step
            lc_p, ld_p, _ = _evaluate(params, cfg, loss, data, lam, grads=False)
            flat[i] = old - step
            lc_m, ld_m, _ = _evaluate(params, cfg, loss, data, lam, grads=False)
            flat[i] = old
            num[j] = ((lc_p - lc_m) + sign * (ld_p - ld_m)) / (2 * step)
        err = relative_error(grads[name].reshape(-1)[idx], num)
        report[name] = float(err.max()) if err.size else 0.0
        worst = max(worst, report[name])
    return (worst, report) if details else worst


def check_linear(n: int = 6, d_in: int = 4, step: float = 1e-5, seed: int = 0) -> float:
    """Sanity check of the engine itself: BCE of a single affine layer."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, d_in))
    y = rng.random(n) < 0.5
    w = rng.normal(size=(d_in, 1))
    b = rng.normal(size=(1,))
    weights = np.full(n, 1.0 / n)

    def loss(w_, b_, grad=False):
        W, B = ad.Tensor(w_, requires_grad=grad), ad.Tensor(b_, requires_grad=grad)
        z = ad.reshape(ad.add(ad.matmul(ad.constant(x), W), B), (n,))
        out = ad.bce_with_logits(z, y, weights)
        if grad:
            ad.backward(out)
            return W.grad, B.grad
        return float(out.data)

    gw, gb = loss(w, b, grad=True)
    worst = 0.0
    for p, g in ((w, gw), (b, gb)):
        flat = p.reshape(-1)
        num = np.empty(flat.size)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + step
            up = loss(w, b)
            flat[i] = old - step
            down = loss(w, b)
            flat[i] = old
            num[i] = (up - down) / (2 * step)
        worst = max(worst, float(relative_error(g.reshape(-1), num).max()))
    return worst


__all__ = ["grad_check", "check_linear", "relative_error", "classification_loss_t"]
