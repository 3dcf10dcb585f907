from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import TrainConfig


@dataclass
class AdamState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def warmup_lr(cfg: TrainConfig, epoch: int) -> float:
    return cfg.lr * min(1.0, (epoch + 1) / cfg.warmup_epochs)


def adam_step(params: dict, grads: dict, state: AdamState, cfg: TrainConfig, epoch: int,
              frozen=frozenset()):
    """In-place Adam update with decoupled weight decay and linear warm-up.

    Parameters named in ``frozen`` (and parameters without a gradient) are
    left untouched, including their moment estimates.
    """
    lr = warmup_lr(cfg, epoch)
    b1, b2, eps, wd = cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay
    state.step += 1
    t = state.step
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    for name, p in params.items():
        if name in frozen:
            continue
        g = grads.get(name)
        if g is None:
            continue
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {name} {p.shape}")
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        update = (m / c1) / (np.sqrt(v / c2) + eps)
        if wd:
            update = update + wd * p
        p -= (lr * update).astype(p.dtype, copy=False)
    return params, state
