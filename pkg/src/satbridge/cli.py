"""Command-line entry point: ``satbridge <command> [options]``.

Every command accepts ``--config FILE`` (JSON or YAML).  Keys in the file
use the same names as the long flags (dashes or underscores) and act as
defaults; flags given on the command line win.
"""

from __future__ import annotations

import argparse
import enum
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .neural.config import TrainConfig
from .satgen import Distribution, GenSpec, PretrainSampler

log = logging.getLogger("satbridge")


def _add_dataclass_flags(p, cls, skip=()):
    group = p.add_argument_group(cls.__name__)
    for f in fields(cls):
        if f.name in skip:
            continue
        flag = "--" + f.name.replace("_", "-")
        default = f.default
        if isinstance(default, bool):
            group.add_argument(flag, dest=f.name, action=argparse.BooleanOptionalAction, default=None)
        elif isinstance(default, tuple):
            group.add_argument(flag, dest=f.name, nargs="+", default=None)
        elif isinstance(default, enum.Enum):
            group.add_argument(flag, dest=f.name, choices=[d.value for d in type(default)], default=None)
        else:
            group.add_argument(flag, dest=f.name, type=type(default), default=None)


def _pick(args, cls) -> dict:
    return {f.name: getattr(args, f.name) for f in fields(cls)
            if getattr(args, f.name, None) is not None}


def train_config(args) -> TrainConfig:
    base = TrainConfig.desk() if args.preset == "desk" else TrainConfig()
    return base.replace(**_pick(args, TrainConfig))


def _instance(args):
    from .graph import CoInstance, load_graph

    return CoInstance(load_graph(args.graph, args.format), args.kind, Path(args.graph).name)


def _graph_flags(p):
    p.add_argument("--graph", required=True, help="graph file (GSET or DIMACS)")
    p.add_argument("--format", choices=["gset", "dimacs"], default=None)
    p.add_argument("--kind", choices=["maxcut", "mis", "mds"], required=True)


# commands ------------------------------------------------------------------

def cmd_gen(args):
    from .satgen import generate, generate_batch, write_batch

    if args.n_vars is not None:
        specs = [GenSpec(**{**_pick(args, GenSpec), "seed": args.seed})]
        batch = [(s, generate(s)) for s in specs]
    else:
        kw = _pick(args, PretrainSampler)
        if "distributions" in kw:
            kw["distributions"] = tuple(Distribution(d) for d in kw["distributions"])
        batch = generate_batch(PretrainSampler(**kw), args.count, args.seed)
    manifest = write_batch(batch, args.out, args.prefix)
    print(f"wrote {len(batch)} formulas, manifest {manifest}")


def cmd_reduce(args):
    from .maxsat import emit_wcnf
    from .reduce import reduce_to_maxsat

    text = emit_wcnf(reduce_to_maxsat(_instance(args), args.mds_clause_mode))
    _emit(text, args.out)


def cmd_oracle(args):
    from .maxsat import parse_wcnf
    from .oracle import BudgetExhausted, InfeasibleError, solve_enumerate, solve_exact

    f = parse_wcnf(Path(args.wcnf).read_text())
    try:
        res = solve_enumerate(f) if args.enumerate else solve_exact(f, args.budget)
    except InfeasibleError:
        print("s UNSATISFIABLE")
        return 20
    except BudgetExhausted:
        print("s UNKNOWN")
        return 0
    cost = f.total_soft_weight - res.soft_optimum
    print(f"o {cost}")
    print("s OPTIMUM FOUND" if res.proven else "s SATISFIABLE")
    print("v " + "".join("1" if b else "0" for b in res.assignment))
    return 30 if res.proven else 10


def cmd_label(args):
    from .graph import CoInstance, load_graph
    from .maxsat import parse_wcnf
    from .oracle import label_dataset
    from .pipeline import save_labeled
    from .reduce import reduce_to_maxsat
    from .satgen import read_manifest

    formulas, metas = [], []
    if args.manifest:
        root = Path(args.manifest).parent
        for rec in read_manifest(args.manifest):
            formulas.append(parse_wcnf((root / rec["file"]).read_text()))
            metas.append({"source": "satgen", "spec": rec["spec"]})
    for w in args.wcnf or []:
        formulas.append(parse_wcnf(Path(w).read_text()))
        metas.append({"source": "wcnf", "file": Path(w).name})
    for gpath in args.graphs or []:
        if not args.kind:
            raise SystemExit("--graphs needs --kind")
        inst = CoInstance(load_graph(gpath, args.format), args.kind, Path(gpath).name)
        formulas.append(reduce_to_maxsat(inst))
        metas.append({"source": "co", "kind": args.kind, "file": Path(gpath).name})
    labeled = label_dataset(formulas, args.budget, metas)
    save_labeled(labeled, args.out)
    print(f"labeled {len(labeled)} of {len(formulas)} -> {args.out}")


def cmd_pretrain(args):
    from .pipeline import load_labeled, pretrain

    cfg = train_config(args)
    data = load_labeled(args.data)
    ckpt = pretrain(data, cfg, metrics_path=args.metrics, diag_dir=Path(args.out).parent)
    ckpt.save(args.out)
    print(f"saved {args.out} (final epoch loss {ckpt.meta['epochs'][-1]:.4f})")


def cmd_finetune(args):
    from .neural.checkpoint import Checkpoint
    from .pipeline import DomainBatch, finetune, load_labeled

    parent = Checkpoint.load(args.checkpoint)
    cfg = parent.config.replace(**_pick(args, TrainConfig))
    db = DomainBatch(load_labeled(args.source), load_labeled(args.target))
    ckpt = finetune(db, parent, cfg, metrics_path=args.metrics, diag_dir=Path(args.out).parent)
    ckpt.save(args.out)
    print(f"saved {args.out}")


def cmd_predict(args):
    from .neural.checkpoint import Checkpoint
    from .pipeline import predict

    probs = predict(Checkpoint.load(args.checkpoint), _instance(args))
    _emit(json.dumps([round(float(p), 8) for p in probs]) + "\n", args.out)


def cmd_decode(args):
    from .bench import verify
    from .decode import decode

    inst = _instance(args)
    if args.probs:
        probs = np.asarray(json.loads(Path(args.probs).read_text()), float)
    else:
        from .neural.checkpoint import Checkpoint
        from .pipeline import predict

        probs = predict(Checkpoint.load(args.checkpoint), inst)
    res = decode(inst, probs, args.steps, not args.no_local_search)
    obj = verify(inst, res.selected)
    out = {"instance": inst.name, "kind": str(inst.kind), "objective": obj,
           "raw_objective": res.raw_objective, "selected": sorted(res.selected)}
    _emit(json.dumps(out) + "\n", args.out)


def cmd_bench(args):
    from .bench import BenchConfig, run_benchmark

    cfg = BenchConfig.from_dict({f.name: getattr(args, f.name) for f in fields(BenchConfig)
                                 if getattr(args, f.name, None) is not None})
    report = run_benchmark(cfg)
    if args.out:
        report.write(args.out)
    print(report.table())


def cmd_fetch(args):
    from .datasets import DatasetError, fetch_datasets

    try:
        rep = fetch_datasets(args.manifest, args.dest, offline=args.offline, retries=args.retries)
    except DatasetError as e:
        print(f"error: {e}", file=sys.stderr)
        if e.report is not None:
            print(json.dumps(e.report.to_dict(), indent=1), file=sys.stderr)
        return 1
    print(json.dumps(rep.to_dict(), indent=1))
    return 0


def cmd_gradcheck(args):
    from .graph import CoInstance, gen_erdos_renyi
    from .neural.gradcheck import check_linear, grad_check
    from .neural.model import init_params
    from .oracle import solve_exact
    from .reduce import build_bipartite, reduce_to_maxsat

    cfg = TrainConfig(d=args.d, n_layers=2, heads=2, d_head=4, frozen_layers=1, precision="float64",
                      seed=args.seed)
    print(f"linear: {check_linear(seed=args.seed):.3e}")

    def labeled(kind, s):
        inst = CoInstance(gen_erdos_renyi(args.nodes, 0.4, s), kind)
        f = reduce_to_maxsat(inst)
        return build_bipartite(f), solve_exact(f).assignment

    src = labeled(args.kind, args.seed)
    tgt = labeled(args.kind, args.seed + 1)
    params = init_params(cfg)
    worst = 0.0
    for loss in args.loss:
        err = grad_check(src, params, cfg, loss, target=tgt, max_entries=args.max_entries)
        worst = max(worst, err)
        print(f"{loss}: {err:.3e}")
    return 0 if worst < args.tol else 1


# parser ---------------------------------------------------------------------

def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="satbridge", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def command(name, fn, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", help="JSON/YAML file of default flag values")
        p.set_defaults(func=fn)
        return p

    p = command("gen", cmd_gen, "generate synthetic Max-SAT formulas")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--prefix", default="inst")
    _add_dataclass_flags(p, PretrainSampler)
    _add_dataclass_flags(p, GenSpec, skip=("seed", "k_min", "k_max", "var_exponent",
                                           "size_exponent", "hard_fraction"))

    p = command("reduce", cmd_reduce, "reduce a graph problem to WCNF")
    _graph_flags(p)
    p.add_argument("--mds-clause-mode", choices=["per-node", "per-edge"], default="per-node")
    p.add_argument("--out")

    p = command("oracle", cmd_oracle, "solve a WCNF exactly")
    p.add_argument("wcnf")
    p.add_argument("--budget", type=int, default=50_000_000)
    p.add_argument("--enumerate", action="store_true", help="brute force (<= 30 variables)")

    p = command("label", cmd_label, "oracle-label formulas into a dataset file")
    p.add_argument("--manifest", help="manifest.jsonl written by `gen`")
    p.add_argument("--wcnf", nargs="*")
    p.add_argument("--graphs", nargs="*", help="graph files to reduce and label")
    p.add_argument("--kind", choices=["maxcut", "mis", "mds"])
    p.add_argument("--format", choices=["gset", "dimacs"], default=None)
    p.add_argument("--budget", type=int, default=50_000_000)
    p.add_argument("--out", required=True)

    p = command("pretrain", cmd_pretrain, "pre-train on a labeled dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--metrics")
    p.add_argument("--preset", choices=["default", "desk"], default="default")
    _add_dataclass_flags(p, TrainConfig)

    p = command("finetune", cmd_finetune, "domain-adaptive fine-tuning")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--metrics")
    _add_dataclass_flags(p, TrainConfig)

    p = command("predict", cmd_predict, "per-node probabilities")
    p.add_argument("--checkpoint", required=True)
    _graph_flags(p)
    p.add_argument("--out")

    p = command("decode", cmd_decode, "feasible solution from a checkpoint or probabilities")
    p.add_argument("--checkpoint")
    p.add_argument("--probs", help="JSON list of probabilities")
    _graph_flags(p)
    p.add_argument("--steps", type=int, default=120)
    p.add_argument("--no-local-search", action="store_true")
    p.add_argument("--out")

    from .bench import BenchConfig

    p = command("bench", cmd_bench, "run a benchmark and write a report")
    p.add_argument("--out", help="report path (line-delimited JSON)")
    _add_dataclass_flags(p, BenchConfig, skip=("datasets", "files"))
    p.add_argument("--datasets", nargs="*")
    p.add_argument("--files", nargs="*")

    p = command("fetch", cmd_fetch, "download and verify benchmark graphs")
    p.add_argument("--manifest")
    p.add_argument("--dest")
    p.add_argument("--offline", action="store_true")
    p.add_argument("--retries", type=int, default=3)

    p = command("gradcheck", cmd_gradcheck, "finite-difference gradient check")
    p.add_argument("--kind", choices=["maxcut", "mis", "mds"], default="mis")
    p.add_argument("--loss", nargs="+", default=["bce", "domain", "finetune"])
    p.add_argument("--nodes", type=int, default=4)
    p.add_argument("--d", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-entries", type=int, default=8)
    p.add_argument("--tol", type=float, default=1e-4)
    return ap


def _config_path(argv):
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _apply_config_file(ap, argv):
    """Parse ``argv``, with values from a --config file installed as subcommand defaults."""
    argv = sys.argv[1:] if argv is None else list(argv)
    path = _config_path(argv)
    command = next((t for t in argv if not t.startswith("-")), None)
    sub = next(a for a in ap._actions if isinstance(a, argparse._SubParsersAction))
    if path and command in sub.choices:
        from .bench import read_structured

        p = sub.choices[command]
        values = {k.replace("-", "_"): v for k, v in read_structured(path).items()}
        unknown = set(values) - {a.dest for a in p._actions}
        if unknown:
            ap.error(f"unknown keys in {path}: {sorted(unknown)}")
        p.set_defaults(**values)
        for a in p._actions:
            if a.dest in values:
                a.required = False
    return ap.parse_args(argv)


def main(argv=None) -> int:
    ap = build_parser()
    args = _apply_config_file(ap, argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    rc = args.func(args)
    return int(rc or 0)


if __name__ == "__main__":
    sys.exit(main())
