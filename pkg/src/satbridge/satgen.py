"""Synthetic Max-SAT instances: uniform, power-law and double power-law.

Variable popularity in the power-law families follows the scale-free SAT
model: variable ``i`` (0-based) is drawn with probability proportional to
``(i + 1) ** (-1 / (beta_v - 1))``, which gives variable occurrence counts
a power-law distribution with exponent ``beta_v``.  In the double power-law
family the clause size ``k`` is drawn with probability proportional to
``k ** -beta_k`` over ``[k_min, k_max]``.
"""

from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .maxsat import Clause, Formula, Literal, emit_wcnf


class Distribution(str, enum.Enum):
    UNIFORM = "uniform"
    POWER_LAW = "power-law"
    DOUBLE_POWER_LAW = "double-power-law"


@dataclass(frozen=True)
class GenSpec:
    distribution: Distribution = Distribution.UNIFORM
    n_vars: int = 50
    n_clauses: int = 200
    k_min: int = 1
    k_max: int = 3
    var_exponent: float = 2.5
    size_exponent: float = 2.0
    seed: int = 0
    hard_fraction: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "distribution", Distribution(self.distribution))
        if self.n_vars < 1 or self.n_clauses < 0:
            raise ValueError("need n_vars >= 1 and n_clauses >= 0")
        if not 1 <= self.k_min <= self.k_max <= self.n_vars:
            raise ValueError(f"need 1 <= k_min <= k_max <= n_vars, got "
                             f"[{self.k_min}, {self.k_max}] with n_vars={self.n_vars}")
        if self.var_exponent <= 0 or self.size_exponent <= 0:
            raise ValueError("exponents must be positive")
        if self.distribution is not Distribution.UNIFORM and self.var_exponent <= 1:
            raise ValueError("power-law variable exponent must exceed 1")
        if not 0.0 <= self.hard_fraction <= 1.0:
            raise ValueError("hard_fraction must lie in [0, 1]")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["distribution"] = self.distribution.value
        return d


def split_seed(seed: int, index: int) -> int:
    """Child seed for instance ``index`` of a batch: SeedSequence((seed, index)) -> uint64."""
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


def variable_weights(spec: GenSpec) -> np.ndarray:
    if spec.distribution is Distribution.UNIFORM:
        w = np.ones(spec.n_vars)
    else:
        w = np.arange(1, spec.n_vars + 1, dtype=float) ** (-1.0 / (spec.var_exponent - 1.0))
    return w / w.sum()


def size_weights(spec: GenSpec) -> np.ndarray:
    ks = np.arange(spec.k_min, spec.k_max + 1, dtype=float)
    if spec.distribution is Distribution.DOUBLE_POWER_LAW:
        w = ks ** (-spec.size_exponent)
    else:
        w = np.ones_like(ks)
    return w / w.sum()


def _inverse_cdf(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)


def generate(spec: GenSpec) -> Formula:
    rng = np.random.default_rng(spec.seed)
    var_cdf = np.cumsum(variable_weights(spec))
    size_cdf = np.cumsum(size_weights(spec))
    sizes = spec.k_min + _inverse_cdf(size_cdf, rng.random(spec.n_clauses))
    n_hard = int(np.floor(spec.hard_fraction * spec.n_clauses))
    clauses = []
    for ci, k in enumerate(sizes):
        chosen: list[int] = []
        while len(chosen) < k:
            # resample duplicates; complementary literals need a repeated variable
            for v in _inverse_cdf(var_cdf, rng.random(k - len(chosen))):
                if v not in chosen and len(chosen) < k:
                    chosen.append(int(v))
        signs = rng.random(k) < 0.5
        lits = tuple(Literal(v, bool(s)) for v, s in zip(chosen, signs))
        clauses.append(Clause(lits, hard=ci < n_hard))
    return Formula(spec.n_vars, tuple(clauses))


@dataclass(frozen=True)
class PretrainSampler:
    """Per-instance sizes for pre-training sets.

    ``n_vars`` is uniform in ``[n_min, n_max]`` and the clause/variable ratio
    uniform in ``[ratio_min, ratio_max]``; distributions cycle through
    ``distributions``.
    """

    n_min: int = 30
    n_max: int = 150
    ratio_min: float = 2.0
    ratio_max: float = 6.0
    k_min: int = 1
    k_max: int = 3
    var_exponent: float = 2.5
    size_exponent: float = 2.0
    hard_fraction: float = 0.0
    distributions: tuple = (Distribution.UNIFORM, Distribution.POWER_LAW, Distribution.DOUBLE_POWER_LAW)

    def spec(self, seed: int, index: int) -> GenSpec:
        child = split_seed(seed, index)
        rng = np.random.default_rng(child)
        n = int(rng.integers(self.n_min, self.n_max + 1))
        ratio = float(rng.uniform(self.ratio_min, self.ratio_max))
        return GenSpec(
            distribution=Distribution(self.distributions[index % len(self.distributions)]),
            n_vars=n,
            n_clauses=max(1, int(round(ratio * n))),
            k_min=self.k_min,
            k_max=min(self.k_max, n),
            var_exponent=self.var_exponent,
            size_exponent=self.size_exponent,
            seed=child,
            hard_fraction=self.hard_fraction,
        )


def generate_batch(sampler: PretrainSampler, count: int, seed: int) -> list[tuple[GenSpec, Formula]]:
    out = []
    for i in range(count):
        spec = sampler.spec(seed, i)
        out.append((spec, generate(spec)))
    return out


def write_batch(batch, directory, prefix: str = "inst") -> Path:
    """Write ``<prefix>-NNNNN.wcnf`` files plus ``manifest.jsonl``.

    Each manifest line is ``{"id", "file", "seed", "spec"}``.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = directory / "manifest.jsonl"
    with open(manifest, "w") as mf:
        for i, (spec, formula) in enumerate(batch):
            name = f"{prefix}-{i:05d}.wcnf"
            (directory / name).write_text(emit_wcnf(formula))
            rec = {"id": i, "file": name, "seed": spec.seed, "spec": spec.to_dict()}
            mf.write(json.dumps(rec, sort_keys=True) + "\n")
    return manifest


def read_manifest(path) -> list[dict]:
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]

