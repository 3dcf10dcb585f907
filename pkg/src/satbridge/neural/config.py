from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

import numpy as np


@dataclass(frozen=True)
class TrainConfig:
    """Model shape and optimisation settings.

    Defaults are the published hyper-parameters (d=128, 5 layers, lr 1e-5,
    400/100 epochs, lambda 0.2, first 2 layers frozen).  ``desk()`` returns a
    much smaller configuration that trains in minutes on a CPU.
    """

    d: int = 128
    n_layers: int = 5
    heads: int = 8
    d_head: int = 16
    lr: float = 1e-5
    weight_decay: float = 1e-10
    epochs_pretrain: int = 400
    epochs_finetune: int = 100
    warmup_epochs: int = 10
    lam: float = 0.2
    frozen_layers: int = 2
    seed: int = 0
    precision: str = "float32"
    batch_size: int = 8
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    degree_feature: bool = True
    polarity_edges: bool = True
    attention_scale: bool = True
    unsupervised: bool = False

    def __post_init__(self):
        for name in ("d", "n_layers", "heads", "d_head", "batch_size", "warmup_epochs"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.lr <= 0 or self.weight_decay < 0 or self.lam < 0:
            raise ValueError("need lr > 0, weight_decay >= 0, lam >= 0")
        if self.epochs_pretrain < 0 or self.epochs_finetune < 0:
            raise ValueError("epoch counts must be non-negative")
        if not 0 <= self.frozen_layers < self.n_layers:
            raise ValueError("frozen_layers must be in [0, n_layers)")
        if self.precision not in ("float32", "float64"):
            raise ValueError("precision must be float32 or float64")

    @property
    def dtype(self):
        return np.dtype(self.precision)

    @property
    def width(self) -> int:
        return self.heads * self.d_head

    @property
    def raw_width(self) -> int:
        return 2 if self.degree_feature else 1

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})

    def replace(self, **kw) -> "TrainConfig":
        return replace(self, **kw)

    @classmethod
    def desk(cls, **kw) -> "TrainConfig":
        base = dict(d=32, n_layers=3, heads=4, d_head=8, lr=2e-3, weight_decay=1e-10,
                    epochs_pretrain=400, epochs_finetune=100, warmup_epochs=10)
        base.update(kw)
        return cls(**base)

    @classmethod
    def plain(cls, **kw) -> "TrainConfig":
        """All-ones node attributes and polarity-blind edges."""
        return cls(degree_feature=False, polarity_edges=False, **kw)

    def architecture(self) -> tuple:
        return (self.d, self.n_layers, self.heads, self.d_head, self.raw_width)
