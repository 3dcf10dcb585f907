"""Classification and domain losses, in tensor form for training and numpy form for checks."""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .config import TrainConfig
from .model import Batch, _mlp, forward_t


def instance_weights(batch: Batch, mask=None) -> np.ndarray:
    """Per-variable weights giving the mean over instances of each instance's mean loss."""
    keep = np.ones(batch.n_vars, bool) if mask is None else np.asarray(mask, bool)
    inst = batch.instance_of_var()
    counts = np.bincount(inst[keep], minlength=batch.n_instances).astype(float)
    live = counts > 0
    if not live.any():
        raise ValueError("empty mask: no variables to average over")
    w = np.zeros(batch.n_vars)
    w[keep] = 1.0 / counts[inst[keep]]
    return w / live.sum()


def bce_loss(logits, labels, mask=None) -> float:
    """Mean binary cross-entropy of ``sigmoid(logits)`` against boolean labels."""
    z = np.asarray(logits, dtype=float)
    y = np.asarray(labels, dtype=float)
    if z.shape != y.shape:
        raise ValueError(f"logits {z.shape} and labels {y.shape} differ in shape")
    keep = np.ones(len(z), bool) if mask is None else np.asarray(mask, bool)
    if not keep.any():
        raise ValueError("empty mask")
    per = ad._softplus(z) - y * z
    return float(per[keep].mean())


def classification_loss_t(logits: ad.Tensor, labels, batch: Batch, mask=None) -> ad.Tensor:
    return ad.bce_with_logits(logits, labels, instance_weights(batch, mask))


def discriminator_t(features: ad.Tensor, P) -> ad.Tensor:
    return ad.reshape(_mlp(features, P, "disc"), (features.shape[0],))


def domain_loss_t(feat_s: ad.Tensor, feat_t: ad.Tensor, P, coef: float | None = None) -> ad.Tensor:
    """``-E_S log Dis(f) - E_T log(1 - Dis(f))`` over variable nodes.

    With ``coef`` set, features pass through a gradient-reversal node first:
    the discriminator sees the true gradient, the feature extractor
    ``-coef`` times it.
    """
    if coef is not None:
        feat_s, feat_t = ad.grad_reverse(feat_s, coef), ad.grad_reverse(feat_t, coef)
    zs = discriminator_t(feat_s, P)
    zt = discriminator_t(feat_t, P)
    ns, nt = zs.shape[0], zt.shape[0]
    ls = ad.bce_with_logits(zs, np.ones(ns), np.full(ns, 1.0 / ns))
    lt = ad.bce_with_logits(zt, np.zeros(nt), np.full(nt, 1.0 / nt))
    return ad.add(ls, lt)


def domain_loss(features_s, features_t, params) -> float:
    P = {k: ad.Tensor(v) for k, v in params.items() if k.startswith("disc.")}
    return float(domain_loss_t(ad.constant(features_s), ad.constant(features_t), P).data)


def pretrain_objective(P, batch: Batch, labels, cfg: TrainConfig, head: str = "head"):
    """Returns ``(loss tensor, logits tensor)`` for one pre-training group."""
    logits, _ = forward_t(P, batch, cfg, head)
    return classification_loss_t(logits, labels, batch), logits


def finetune_objective(P, src: Batch, src_labels, tgt: Batch, tgt_labels, cfg: TrainConfig,
                       lam: float | None = None, reverse: bool = True, domain: bool = True):
    """Fine-tuning objective.

    Returns ``(root, parts)`` where ``root`` is the tensor to differentiate
    (``L_c(S) + L_c(T) + L_d`` with gradient reversal scaled by ``lam`` on the
    features) and ``parts`` holds the scalar components and logits.  The
    logged total is ``L_c + lam * L_d``.  ``domain=False`` leaves the domain
    term out of ``root`` (it is still evaluated and reported).
    """
    lam = cfg.lam if lam is None else lam
    logit_s, feat_s = forward_t(P, src, cfg, "head")
    logit_t, feat_t = forward_t(P, tgt, cfg, "head_t")
    lc_s = classification_loss_t(logit_s, src_labels, src)
    ld = domain_loss_t(feat_s, feat_t, P, coef=lam if reverse else None)
    if cfg.unsupervised:
        lc = lc_s
        lc_t_val = float("nan")
    else:
        lc_t = classification_loss_t(logit_t, tgt_labels, tgt)
        lc = ad.add(lc_s, lc_t)
        lc_t_val = float(lc_t.data)
    root = ad.add(lc, ld) if domain else lc
    parts = {
        "loss_cls_source": float(lc_s.data),
        "loss_cls_target": lc_t_val,
        "loss_cls": float(lc.data),
        "loss_domain": float(ld.data),
        "loss_total": float(lc.data) + (lam * float(ld.data) if domain else 0.0),
        "logits_source": logit_s.data,
        "logits_target": logit_t.data,
    }
    return root, parts
