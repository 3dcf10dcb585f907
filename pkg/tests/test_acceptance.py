"""Acceptance gate.  Each test prints one PASS/FAIL line for its criterion.

Run alone with ``pytest -m acceptance -s`` to see the lines inline; they are
also collected into the terminal summary.
"""

import json
import os
import time
from contextlib import contextmanager

import numpy as np
import pytest

from satbridge.bench import BenchConfig, p_value, run_benchmark, verify
from satbridge.datasets import entry, fetch_datasets
from satbridge.decode import complete_mis, greedy_mis, local_search_2improve
from satbridge.graph import CoInstance, Graph, ProblemKind, gen_erdos_renyi, gen_random_regular
from satbridge.maxsat import Clause, Formula, Literal, emit_wcnf, parse_wcnf
from satbridge.neural import Checkpoint, TrainConfig, forward, grad_check, init_params
from satbridge.oracle import label_dataset, solve_enumerate, solve_exact
from satbridge.pipeline import DomainBatch, accuracy, finetune, pretrain
from satbridge.reduce import build_bipartite, reduce_to_maxsat
from satbridge.satgen import PretrainSampler, generate_batch, split_seed

from conftest import ACCEPTANCE_LINES, brute_co, random_edges

pytestmark = pytest.mark.acceptance


@contextmanager
def criterion(num, title):
    box = {"ok": None, "detail": ""}
    t0 = time.perf_counter()

    def emit(ok, detail):
        line = f"criterion {num}: {'PASS' if ok else 'FAIL'}  {title}  [{detail}; {time.perf_counter() - t0:.1f}s]"
        ACCEPTANCE_LINES.append(line)
        print(line)

    try:
        yield box
    except Exception as e:
        emit(False, box["detail"] or f"{type(e).__name__}: {e}")
        raise
    emit(bool(box["ok"]), box["detail"])
    assert box["ok"], box["detail"]


TINY64 = TrainConfig(d=8, n_layers=2, heads=2, d_head=4, frozen_layers=1, precision="float64", lam=0.2)


def labeled_bip(kind, seed, n=5):
    f = reduce_to_maxsat(CoInstance(gen_erdos_renyi(n, 0.5, seed), kind))
    return build_bipartite(f), solve_exact(f).assignment.astype(float)


@pytest.fixture(scope="module")
def pretrained():
    data = label_dataset([f for _, f in generate_batch(PretrainSampler(n_min=8, n_max=20), 300, seed=0)])
    return pretrain(data, TrainConfig.desk(epochs_pretrain=30, epochs_finetune=20))


def test_c01_reduction_equivalence():
    with criterion(1, "reduction/objective equivalence on 3 x 200 graphs, exact") as c:
        rng = np.random.default_rng(1)
        bad = []
        for kind in ProblemKind:
            for t in range(200):
                n = int(rng.integers(2, 11))
                edges = random_edges(rng, n, float(rng.uniform(0.1, 0.9)))
                g = Graph(n, edges)
                soft = solve_enumerate(reduce_to_maxsat(CoInstance(g, kind))).soft_optimum
                co = brute_co(n, edges, str(kind))
                want = {ProblemKind.MIS: co, ProblemKind.MDS: n - co, ProblemKind.MAXCUT: g.n_edges + co}[kind]
                if soft != want:
                    bad.append((str(kind), t))
        c["ok"] = not bad
        c["detail"] = f"600 graphs, {len(bad)} mismatches"


def _random_formula(rng, n):
    cl = []
    for _ in range(int(rng.integers(1, 4 * n + 1))):
        k = int(rng.integers(1, min(n, 4) + 1))
        vs = rng.choice(n, size=k, replace=False)
        hard = bool(rng.random() < 0.15)
        cl.append(Clause(tuple(Literal(int(v), bool(rng.random() < .5)) for v in vs),
                         hard=hard, weight=1 if hard else int(rng.integers(1, 5))))
    return Formula(n, tuple(cl))


def test_c02_oracle_matches_enumeration():
    with criterion(2, "branch-and-bound == enumeration on 300 formulas (n_vars <= 16), exact") as c:
        rng = np.random.default_rng(2)
        bad = infeasible = 0
        for _ in range(300):
            f = _random_formula(rng, int(rng.integers(1, 17)))
            try:
                e = solve_enumerate(f)
            except Exception:
                infeasible += 1
                with pytest.raises(Exception):
                    solve_exact(f)
                continue
            b = solve_exact(f)
            if not (b.proven and b.soft_optimum == e.soft_optimum and np.array_equal(b.assignment, e.assignment)):
                bad += 1
        c["ok"] = bad == 0
        c["detail"] = f"{bad} mismatches, {infeasible} infeasible agreed"


def test_c03_gradient_fidelity():
    with criterion(3, "grad_check < 1e-4 (BCE and fine-tune with lam=0.2) on 5 instances, float64") as c:
        kinds = ["mis", "mds", "maxcut", "mis", "mds"]
        worst = {"bce": 0.0, "finetune": 0.0}
        for i, k in enumerate(kinds):
            params = init_params(TINY64.replace(seed=i))
            src = labeled_bip(k, i)
            tgt = labeled_bip(kinds[(i + 1) % 5], 100 + i)
            worst["bce"] = max(worst["bce"], grad_check(src, params, TINY64, "bce", max_entries=12, seed=i))
            worst["finetune"] = max(worst["finetune"], grad_check(src, params, TINY64, "finetune", target=tgt,
                                                                  max_entries=12, seed=i))
        c["ok"] = max(worst.values()) < 1e-4
        c["detail"] = f"max rel err bce={worst['bce']:.2e} finetune={worst['finetune']:.2e}"


def test_c04_structural_properties(tmp_path):
    with criterion(4, "attention rows sum to 1, permutation equivariance, deterministic training") as c:
        cfg = TINY64.replace(n_layers=3)
        params = init_params(cfg)
        rng = np.random.default_rng(4)
        row_err = perm_err = 0.0
        for s in range(10):
            f = generate_batch(PretrainSampler(n_min=6, n_max=14), 1, seed=s)[0][1]
            b = build_bipartite(f)
            trace = {}
            z, _ = forward(params, b, cfg, trace=trace)
            for key, idx, n in (("clause_attention", b.edge_clause, b.n_clauses),
                                ("var_attention", b.edge_var, b.n_vars)):
                for alpha in trace[key]:
                    sums = np.zeros((n, cfg.heads))
                    np.add.at(sums, idx, alpha)
                    live = np.bincount(idx, minlength=n) > 0
                    row_err = max(row_err, float(np.abs(sums[live] - 1).max()))
            perm = rng.permutation(f.n_vars)
            g = Formula(f.n_vars, tuple(Clause(tuple(Literal(int(perm[l.var]), l.negated) for l in cl.literals),
                                               hard=cl.hard, weight=cl.weight) for cl in f.clauses))
            z2, _ = forward(params, build_bipartite(g), cfg)
            perm_err = max(perm_err, float(np.abs(z2[perm] - z).max()))
        data = label_dataset([f for _, f in generate_batch(PretrainSampler(n_min=5, n_max=10), 16, seed=4)])
        small = TrainConfig.desk(d=16, n_layers=2, heads=2, d_head=8, frozen_layers=1, epochs_pretrain=3)
        pretrain(data, small, metrics_path=tmp_path / "a.jsonl")
        pretrain(data, small, metrics_path=tmp_path / "b.jsonl")
        same = (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
        c["ok"] = row_err <= 1e-6 and perm_err <= 1e-9 and same
        c["detail"] = f"row-sum err {row_err:.1e}, perm err {perm_err:.1e}, identical logs {same}"


def test_c05_training_progress():
    with criterion(5, "pretrain on 500 instances: BCE <= 50% of epoch 1 within 400 epochs, accuracy >= 70%") as c:
        data = label_dataset([f for _, f in generate_batch(PretrainSampler(n_min=8, n_max=20), 500, seed=0)])
        assert len(data) == 500 and max(x.formula.n_vars for x in data) <= 20
        losses = []

        def stop(rec):
            losses.append(rec["loss"])
            return rec["loss"] <= 0.5 * losses[0] and rec["accuracy"] >= 0.7

        ck = pretrain(data, TrainConfig.desk(epochs_pretrain=400), callback=stop)
        acc = accuracy(ck, data)
        ratio = losses[-1] / losses[0]
        c["ok"] = ratio <= 0.5 and acc >= 0.7 and len(losses) <= 400
        c["detail"] = f"{len(losses)} epochs, BCE {losses[0]:.3f} -> {losses[-1]:.3f} (ratio {ratio:.2f}), train acc {acc:.3f}"


def test_c06_adaptation_direction():
    with criterion(6, "toy transfer: fine-tuned held-out target accuracy >= pretrained-only, mean of 5 seeds") as c:
        pairs = []
        for seed in range(5):
            src = label_dataset([f for _, f in generate_batch(
                PretrainSampler(n_min=8, n_max=12, k_min=2, k_max=2), 100, seed=seed)])

            def mis(i):
                return reduce_to_maxsat(CoInstance(gen_erdos_renyi(10, 0.3, split_seed(seed, 1000 + i)), "mis"))

            tgt = label_dataset([mis(i) for i in range(20)])
            held = label_dataset([mis(100 + i) for i in range(20)])
            cfg = TrainConfig.desk(seed=seed, epochs_pretrain=30, epochs_finetune=30)
            pre = pretrain(src, cfg)
            ft = finetune(DomainBatch(src, tgt), pre, cfg)
            pairs.append((accuracy(pre, held, head="head"), accuracy(ft, held)))
        a0, a1 = np.mean(pairs, axis=0)
        c["ok"] = a1 >= a0
        c["detail"] = (f"pretrained {a0:.3f} vs fine-tuned {a1:.3f}; per seed "
                       + ", ".join(f"{x:.2f}->{y:.2f}" for x, y in pairs))


def test_c07_local_search():
    with criterion(7, "2-improvement: path move, and within 1 of optimum on >= 80% of 100 graphs") as c:
        assert os.environ.get("SATBRIDGE_CHECKS") == "1"   # per-pass feasibility/monotonicity asserts
        path_ok = local_search_2improve(CoInstance(Graph(3, [(0, 1), (1, 2)]), "mis"), {1}) == {0, 2}
        rng = np.random.default_rng(7)
        close = exceed = 0
        for _ in range(100):
            n = int(rng.integers(3, 13))
            edges = random_edges(rng, n, float(rng.uniform(0.1, 0.7)))
            g = Graph(n, edges)
            inst = CoInstance(g, "mis")
            start = complete_mis(inst, greedy_mis(g))
            trace = []
            out = local_search_2improve(inst, start, trace=trace)
            sizes = [len(start)] + trace
            assert all(a <= b for a, b in zip(sizes, sizes[1:]))
            assert ProblemKind.MIS.feasible(g, out)
            opt = brute_co(n, edges, "mis")
            exceed += len(out) > opt
            close += len(out) >= opt - 1
        c["ok"] = path_ok and exceed == 0 and close >= 80
        c["detail"] = f"path {path_ok}, within 1 of optimum {close}/100, exceeded {exceed}"


def test_c08_maxcut_end_to_end(pretrained, tmp_path):
    with criterion(8, "pretrain -> finetune -> decode on 20 3-regular n=100 graphs, mean p >= 0.55") as c:
        cfg = pretrained.config
        sizes = np.resize([10, 12, 14, 16], 40)
        tgt = label_dataset([reduce_to_maxsat(CoInstance(gen_random_regular(int(n), 3, split_seed(7, i)), "maxcut"))
                             for i, n in enumerate(sizes)])
        src = label_dataset([f for _, f in generate_batch(PretrainSampler(n_min=10, n_max=16, k_min=2, k_max=2),
                                                          40, seed=3)])
        ft = finetune(DomainBatch(src, tgt), pretrained, cfg)
        path = ft.save(tmp_path / "maxcut.ckpt")
        rep = run_benchmark(BenchConfig(kind="maxcut", n=100, gamma=3, count=20, seed=0, checkpoint=str(path)))
        mean_p = rep.summary["mean_p_value"]
        raw_p = np.mean([p_value(r["raw_objective"], 100, 3) for r in rep.records])
        c["ok"] = len(rep.records) == 20 and mean_p >= 0.55
        c["detail"] = (f"mean p {mean_p:.4f} (thresholded only {raw_p:.4f}); "
                       f"reference {rep.summary['reference_p_value']}")


def test_c09_benchmark_soundness(pretrained, tmp_path):
    with criterion(9, "G14 and frb30-15 (fetched): solutions re-verify, frb30-15 MIS <= 30, G14 vs 3052") as c:
        rep = fetch_datasets([entry("G14"), entry("frb30-15-1")],
                             strict=False, retries=1, timeout=15)
        missing = sorted(set(rep.errors) | set(rep.missing))
        if missing:
            c["ok"] = False
            c["detail"] = f"datasets unavailable: {missing} ({'; '.join(rep.errors.values())[:160]})"
            return
        path = pretrained.save(tmp_path / "pre.ckpt")
        out = run_benchmark(BenchConfig(source="dataset", datasets=["G14", "frb30-15-1"], checkpoint=str(path)))
        by = {r["instance"]: r for r in out.records}
        g14, frb = by["G14"], by["frb30-15-1"]
        c["ok"] = frb["objective"] <= 30
        c["detail"] = f"frb30-15-1 MIS {frb['objective']} (optimum 30), G14 cut {g14['objective']} (reference 3052)"


def test_c10_roundtrips(pretrained, tmp_path):
    with criterion(10, "WCNF emit/parse identity on 500 formulas, checkpoint save/load/save byte identity") as c:
        rng = np.random.default_rng(10)
        bad = 0
        for _ in range(500):
            f = _random_formula(rng, int(rng.integers(1, 30)))
            text = emit_wcnf(f)
            back = parse_wcnf(text)
            bad += not (back == f and emit_wcnf(back) == text)
        a = pretrained.save(tmp_path / "a.ckpt").read_bytes()
        b = Checkpoint.load(tmp_path / "a.ckpt").save(tmp_path / "b.ckpt").read_bytes()
        c["ok"] = bad == 0 and a == b and pretrained.opt.step > 0
        c["detail"] = f"{bad} WCNF mismatches, checkpoint identical {a == b} ({len(a)} bytes)"
