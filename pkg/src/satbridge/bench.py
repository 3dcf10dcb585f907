"""Benchmark runs: instances -> predict -> decode -> verify -> report."""

from __future__ import annotations

import json
import logging
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .decode import DEFAULT_STEPS, decode, greedy_baseline
from .graph import CoInstance, ProblemKind, gen_erdos_renyi, gen_random_regular, load_graph
from .maxsat import evaluate
from .reduce import recover_solution, reduce_to_maxsat
from .satgen import split_seed

log = logging.getLogger(__name__)

SCHEMA = "satbridge.bench"
SCHEMA_VERSION = 1
PAPER_P_REFERENCE = {(100, 3): 0.702}


class BenchError(RuntimeError):
    pass


def p_value(z: float, n: int, gamma: float) -> float:
    """Normalised cut size of a gamma-regular graph: (z/n - gamma/4) / sqrt(gamma/4)."""
    if n <= 0 or gamma <= 0:
        raise ValueError("need n > 0 and gamma > 0")
    q = gamma / 4.0
    return (z / n - q) / math.sqrt(q)


def cut_from_p(p: float, n: int, gamma: float) -> float:
    q = gamma / 4.0
    return n * (p * math.sqrt(q) + q)


@dataclass
class BenchConfig:
    kind: str = "maxcut"
    source: str = "regular"          # regular | erdos-renyi | dataset | files
    n: int = 100
    gamma: int = 3
    p: float = 0.2
    count: int = 20
    seed: int = 0
    datasets: list = field(default_factory=list)
    files: list = field(default_factory=list)
    format: str | None = None
    data_dir: str | None = None
    checkpoint: str = "greedy"       # checkpoint path or "greedy"
    steps: int = DEFAULT_STEPS
    local_search: bool = True
    workers: int = 1
    timing: bool = False             # wall time makes reports non-reproducible

    @classmethod
    def from_dict(cls, d: dict) -> "BenchConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown bench config keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "BenchConfig":
        return cls.from_dict(read_structured(path))


def read_structured(path) -> dict:
    text = Path(path).read_text()
    if str(path).endswith(".json"):
        return json.loads(text)
    import yaml

    return yaml.safe_load(text) or {}


def build_instances(cfg: BenchConfig) -> list[CoInstance]:
    kind = ProblemKind.parse(cfg.kind)
    if cfg.source == "regular":
        return [CoInstance(gen_random_regular(cfg.n, cfg.gamma, split_seed(cfg.seed, i)), kind,
                           f"reg{cfg.gamma}-n{cfg.n}-{i}") for i in range(cfg.count)]
    if cfg.source == "erdos-renyi":
        return [CoInstance(gen_erdos_renyi(cfg.n, cfg.p, split_seed(cfg.seed, i)), kind,
                           f"er-n{cfg.n}-{i}") for i in range(cfg.count)]
    if cfg.source == "dataset":
        from .datasets import load_dataset

        return [load_dataset(name, cfg.data_dir) for name in cfg.datasets]
    if cfg.source == "files":
        return [CoInstance(load_graph(f, cfg.format), kind, Path(f).name) for f in cfg.files]
    raise ValueError(f"unknown instance source {cfg.source!r}")


def verify(instance: CoInstance, selected) -> int:
    """Objective of ``selected`` after checking it on both the graph and the Max-SAT side."""
    g, kind = instance.graph, instance.kind
    mask = np.zeros(g.n_nodes, bool)
    mask[list(selected)] = True
    rep = recover_solution(instance, mask)
    if not rep.feasible:
        raise BenchError(f"{instance.name}: infeasible {kind} solution")
    ev = evaluate(reduce_to_maxsat(instance), mask)
    if ev.hard_violations:
        raise BenchError(f"{instance.name}: {ev.hard_violations} hard clauses violated")
    soft = ev.soft_satisfied_weight
    via_sat = {ProblemKind.MIS: soft, ProblemKind.MDS: g.n_nodes - soft,
               ProblemKind.MAXCUT: soft - g.n_edges}[kind]
    if via_sat != rep.objective:
        raise BenchError(f"{instance.name}: objective {rep.objective} disagrees with Max-SAT value {via_sat}")
    return rep.objective


_CKPT_CACHE: dict = {}


def _solve(args):
    idx, inst, cfg = args
    t0 = time.perf_counter()
    raw = None
    ckpt_id = "greedy"
    if cfg.checkpoint == "greedy":
        sel = greedy_baseline(inst, split_seed(cfg.seed, 10_000 + idx), cfg.steps)
    else:
        from .neural.checkpoint import Checkpoint
        from .pipeline import predict

        ckpt = _CKPT_CACHE.get(cfg.checkpoint)
        if ckpt is None:
            ckpt = _CKPT_CACHE[cfg.checkpoint] = Checkpoint.load(cfg.checkpoint)
        ckpt_id = ckpt.checksum[:16]
        res = decode(inst, predict(ckpt, inst), cfg.steps, cfg.local_search)
        sel, raw = res.selected, res.raw_objective
    obj = verify(inst, sel)
    g = inst.graph
    rec = {"index": idx, "instance": inst.name, "kind": str(inst.kind), "n": g.n_nodes, "m": g.n_edges,
           "objective": obj, "raw_objective": raw, "seed": cfg.seed, "checkpoint": ckpt_id, "p_value": None}
    if inst.kind is ProblemKind.MAXCUT:
        deg = g.degree()
        if len(deg) and deg.min() == deg.max() and deg[0] > 0:
            rec["p_value"] = p_value(obj, g.n_nodes, int(deg[0]))
    if cfg.timing:
        rec["wall_time"] = time.perf_counter() - t0
    return rec


@dataclass
class BenchReport:
    header: dict
    records: list
    summary: dict

    def lines(self) -> list[str]:
        dump = lambda o: json.dumps(o, sort_keys=True)
        return [dump(self.header)] + [dump(r) for r in self.records] + [dump(self.summary)]

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text("\n".join(self.lines()) + "\n")
        return path

    @classmethod
    def read(cls, path) -> "BenchReport":
        rows = [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]
        head = rows[0]
        if head.get("schema") != SCHEMA or head.get("version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report header {head}")
        return cls(head, rows[1:-1], rows[-1])

    def table(self) -> str:
        cols = ["instance", "n", "m", "objective", "raw_objective", "p_value"]
        rows = [[_fmt(r.get(c)) for c in cols] for r in self.records]
        widths = [max(len(c), *(len(r[i]) for r in rows)) if rows else len(c) for i, c in enumerate(cols)]
        out = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
        out.append("  ".join("-" * w for w in widths))
        out += ["  ".join(v.ljust(w) for v, w in zip(r, widths)) for r in rows]
        out.append("")
        out += [f"{k}: {_fmt(v)}" for k, v in self.summary.items() if k != "kind"]
        return "\n".join(out)


def _fmt(v):
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def _summary(records, cfg: BenchConfig) -> dict:
    objs = [r["objective"] for r in records]
    ps = [r["p_value"] for r in records if r["p_value"] is not None]
    s = {"kind": "summary", "count": len(records),
         "mean_objective": statistics.fmean(objs) if objs else None,
         "median_objective": statistics.median(objs) if objs else None,
         "mean_p_value": statistics.fmean(ps) if ps else None,
         "median_p_value": statistics.median(ps) if ps else None}
    if cfg.source == "regular":
        s["reference_p_value"] = PAPER_P_REFERENCE.get((cfg.n, cfg.gamma))
    return s


def run_benchmark(config) -> BenchReport:
    """Run a benchmark from a BenchConfig, a dict or a config file path.

    Instances run on ``workers`` processes; results come back in instance
    order, so the report does not depend on scheduling.  Any solution that
    fails re-verification aborts the run.
    """
    if isinstance(config, (str, Path)):
        cfg = BenchConfig.load(config)
    elif isinstance(config, dict):
        cfg = BenchConfig.from_dict(config)
    else:
        cfg = config
    instances = build_instances(cfg)
    jobs = [(i, inst, cfg) for i, inst in enumerate(instances)]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            records = list(pool.map(_solve, jobs))
    else:
        records = [_solve(j) for j in jobs]
    header = {"schema": SCHEMA, "version": SCHEMA_VERSION, "config": asdict(cfg)}
    return BenchReport(header, records, _summary(records, cfg))
