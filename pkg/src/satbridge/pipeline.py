"""Pre-training, domain-adaptive fine-tuning and prediction."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .graph import CoInstance
from .maxsat import Formula, emit_wcnf, evaluate, parse_wcnf
from .neural import autodiff as ad
from .neural.checkpoint import Checkpoint
from .neural.config import TrainConfig
from .neural.losses import finetune_objective, pretrain_objective
from .neural.model import NumericError, collate, forward, frozen_names, init_params, sigmoid, tensors
from .neural.optim import AdamState, adam_step
from .reduce import BipartiteGraph, build_bipartite, reduce_to_maxsat

log = logging.getLogger(__name__)

ARCH_KEYS = ("d", "n_layers", "heads", "d_head", "degree_feature", "polarity_edges")


class TrainingError(RuntimeError):
    """Training aborted; ``checkpoint`` holds the state at the failing step."""

    def __init__(self, msg, checkpoint: Checkpoint | None = None, path: Path | None = None):
        super().__init__(msg)
        self.checkpoint = checkpoint
        self.path = path


class ConfigError(ValueError):
    pass


@dataclass
class LabeledInstance:
    formula: Formula
    bipartite: BipartiteGraph
    labels: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=bool)
        if self.labels.shape != (self.formula.n_vars,):
            raise ValueError(f"labels length {len(self.labels)} != n_vars {self.formula.n_vars}")
        if evaluate(self.formula, self.labels).hard_violations:
            raise ValueError("labels violate a hard clause")

    @classmethod
    def from_formula(cls, formula: Formula, labels, meta=None) -> "LabeledInstance":
        return cls(formula, build_bipartite(formula), labels, dict(meta or {}))

    def to_record(self) -> dict:
        return {"wcnf": emit_wcnf(self.formula), "labels": "".join("1" if b else "0" for b in self.labels),
                "meta": self.meta}

    @classmethod
    def from_record(cls, rec: dict) -> "LabeledInstance":
        labels = np.array([c == "1" for c in rec["labels"]], dtype=bool)
        return cls.from_formula(parse_wcnf(rec["wcnf"]), labels, rec.get("meta"))


def save_labeled(instances: Sequence[LabeledInstance], path) -> Path:
    path = Path(path)
    with open(path, "w") as f:
        for inst in instances:
            f.write(json.dumps(inst.to_record(), sort_keys=True) + "\n")
    return path


def load_labeled(path) -> list[LabeledInstance]:
    with open(path) as f:
        return [LabeledInstance.from_record(json.loads(line)) for line in f if line.strip()]


@dataclass
class DomainBatch:
    source: Sequence[LabeledInstance]
    target: Sequence[LabeledInstance]

    def __post_init__(self):
        if not self.source or not self.target:
            raise ValueError("DomainBatch needs non-empty source and target")


class MetricsLog:
    """Append-only line-delimited metrics; also kept in memory."""

    def __init__(self, path=None):
        self.path = Path(path) if path is not None else None
        self.records: list[dict] = []

    def write(self, rec: dict):
        self.records.append(rec)
        if self.path is not None:
            with open(self.path, "a") as f:
                f.write(json.dumps(rec, sort_keys=True) + "\n")

    def epochs(self) -> list[dict]:
        return [r for r in self.records if r["kind"] == "epoch"]


def _groups(order: np.ndarray, size: int) -> list[np.ndarray]:
    return [order[i:i + size] for i in range(0, len(order), size)]


def _labels(instances) -> np.ndarray:
    return np.concatenate([inst.labels for inst in instances])


def _correct(logits: np.ndarray, labels: np.ndarray) -> int:
    return int(np.sum((logits > 0) == labels))


def _grads(P: dict) -> dict:
    return {k: t.grad for k, t in P.items() if t.grad is not None}


def _abort(msg, params, opt, rng, cfg, meta, diag_dir):
    ckpt = Checkpoint(cfg, {k: v.copy() for k, v in params.items()}, opt,
                      rng.bit_generator.state, dict(meta, aborted=msg))
    path = None
    if diag_dir is not None:
        path = ckpt.save(Path(diag_dir) / "diagnostic.ckpt")
    raise TrainingError(msg, ckpt, path)


def pretrain(dataset: Sequence[LabeledInstance], config: TrainConfig, metrics_path=None,
             diag_dir=None, callback: Callable[[dict], bool | None] | None = None) -> Checkpoint:
    """Supervised pre-training on oracle-labelled Max-SAT instances.

    Each optimiser step averages the per-instance mean BCE over a group of
    ``batch_size`` instances.  ``callback`` receives every epoch record and
    may return True to stop early.
    """
    if not dataset:
        raise ValueError("empty dataset")
    cfg = config
    params = init_params(cfg)
    opt = AdamState()
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    frozen = frozenset()  # nothing is frozen during pre-training
    metrics = MetricsLog(metrics_path)
    meta = {"stage": "pretrain", "n_instances": len(dataset)}
    for epoch in range(cfg.epochs_pretrain):
        order = rng.permutation(len(dataset))
        tot_loss = 0.0
        correct = total = 0
        for idx in _groups(order, cfg.batch_size):
            insts = [dataset[i] for i in idx]
            batch = collate([x.bipartite for x in insts], cfg)
            y = _labels(insts)
            P = tensors(params)
            try:
                loss, logits = pretrain_objective(P, batch, y, cfg)
            except NumericError as e:
                _abort(str(e), params, opt, rng, cfg, meta, diag_dir)
            lv = float(loss.data)
            if not math.isfinite(lv):
                _abort(f"non-finite loss at step {opt.step + 1}", params, opt, rng, cfg, meta, diag_dir)
            ad.backward(loss)
            adam_step(params, _grads(P), opt, cfg, epoch, frozen)
            tot_loss += lv * len(idx)
            correct += _correct(logits.data, y)
            total += len(y)
            metrics.write({"kind": "step", "step": opt.step, "epoch": epoch, "loss": lv})
        rec = {"kind": "epoch", "epoch": epoch, "step": opt.step, "loss": tot_loss / len(dataset),
               "accuracy": correct / total}
        metrics.write(rec)
        if callback is not None and callback(rec):
            break
    meta["epochs"] = [r["loss"] for r in metrics.epochs()]
    meta["accuracy"] = [r["accuracy"] for r in metrics.epochs()]
    return Checkpoint(cfg, params, opt, rng.bit_generator.state, meta)


def check_compatible(ckpt: Checkpoint, cfg: TrainConfig):
    a, b = ckpt.config.to_dict(), cfg.to_dict()
    bad = [k for k in ARCH_KEYS if a[k] != b[k]]
    if bad:
        raise ConfigError("checkpoint incompatible with config: " +
                          ", ".join(f"{k}={a[k]} vs {b[k]}" for k in bad))
    if cfg.frozen_layers >= cfg.n_layers:
        raise ConfigError("frozen_layers must be below n_layers")


def finetune(provider, checkpoint: Checkpoint, config: TrainConfig, metrics_path=None,
             diag_dir=None, adversarial: bool = True,
             callback: Callable[[dict], bool | None] | None = None) -> Checkpoint:
    """Domain-adaptive fine-tuning.

    ``provider`` is a DomainBatch or a callable ``epoch -> DomainBatch``.
    Each step pairs ``batch_size`` source with ``batch_size`` target
    instances; the shorter side is cycled.  ``adversarial=False`` drops the
    domain term entirely (plain two-domain supervised training).
    """
    cfg = config
    check_compatible(checkpoint, cfg)
    params = {k: v.astype(cfg.dtype, copy=True) for k, v in checkpoint.params.items()}
    if "head_t.w1" not in params:
        for k in [k for k in params if k.startswith("head.")]:
            params["head_t." + k[len("head."):]] = params[k].copy()
    frozen = frozen_names(params, cfg)
    opt = AdamState()
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 2]))
    metrics = MetricsLog(metrics_path)
    meta = {"stage": "finetune", "parent": checkpoint.checksum, "lam": cfg.lam}
    for epoch in range(cfg.epochs_finetune):
        db = provider(epoch) if callable(provider) else provider
        if not isinstance(db, DomainBatch):
            db = DomainBatch(*db)
        gs = _groups(rng.permutation(len(db.source)), cfg.batch_size)
        gt = _groups(rng.permutation(len(db.target)), cfg.batch_size)
        n_steps = max(len(gs), len(gt))
        sums = {"loss_total": 0.0, "loss_cls": 0.0, "loss_domain": 0.0}
        correct = total = 0
        for s in range(n_steps):
            src = [db.source[i] for i in gs[s % len(gs)]]
            tgt = [db.target[i] for i in gt[s % len(gt)]]
            ys, yt = _labels(src), _labels(tgt)
            P = tensors(params)
            try:
                root, parts = finetune_objective(
                    P, collate([x.bipartite for x in src], cfg), ys,
                    collate([x.bipartite for x in tgt], cfg), yt, cfg, domain=adversarial)
            except NumericError as e:
                _abort(str(e), params, opt, rng, cfg, meta, diag_dir)
            if not math.isfinite(parts["loss_total"]):
                _abort(f"non-finite loss at step {opt.step + 1}", params, opt, rng, cfg, meta, diag_dir)
            ad.backward(root)
            adam_step(params, _grads(P), opt, cfg, epoch, frozen)
            rec = {"kind": "step", "step": opt.step, "epoch": epoch}
            for k in sums:
                rec[k] = parts[k]
                sums[k] += parts[k]
            if not cfg.unsupervised:
                correct += _correct(parts["logits_target"], yt)
                total += len(yt)
            metrics.write(rec)
        rec = {"kind": "epoch", "epoch": epoch, "step": opt.step,
               **{k: v / n_steps for k, v in sums.items()},
               "target_accuracy": correct / total if total else float("nan")}
        metrics.write(rec)
        if callback is not None and callback(rec):
            break
    meta["epochs"] = [r["loss_total"] for r in metrics.epochs()]
    return Checkpoint(cfg, params, opt, rng.bit_generator.state, meta)


def predict(checkpoint: Checkpoint, instance: CoInstance, **reduce_kw) -> np.ndarray:
    """Per-node probabilities in (0, 1), using the target head when present."""
    bip = build_bipartite(reduce_to_maxsat(instance, **reduce_kw))
    return predict_bipartite(checkpoint, bip)[:instance.graph.n_nodes]


def predict_bipartite(checkpoint: Checkpoint, bip: BipartiteGraph) -> np.ndarray:
    head = "head_t" if checkpoint.has_target_head else "head"
    logits, _ = forward(checkpoint.params, bip, checkpoint.config, head)
    eps = np.finfo(np.float64).eps
    return np.clip(sigmoid(logits), eps, 1.0 - eps)


def accuracy(checkpoint: Checkpoint, instances: Sequence[LabeledInstance], head: str | None = None) -> float:
    """Fraction of variables whose thresholded prediction matches the label."""
    if head is None:
        head = "head_t" if checkpoint.has_target_head else "head"
    correct = total = 0
    cfg = checkpoint.config
    for i in range(0, len(instances), 32):
        chunk = instances[i:i + 32]
        logits, _ = forward(checkpoint.params, [x.bipartite for x in chunk], cfg, head)
        y = _labels(chunk)
        correct += _correct(logits, y)
        total += len(y)
    return correct / total
