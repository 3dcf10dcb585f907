import itertools
import os

import numpy as np
import pytest

# feasibility / monotonicity assertions inside decode
os.environ.setdefault("SATBRIDGE_CHECKS", "1")


def brute_co(n, edges, kind):
    """Exhaustive CO optimum, written independently of the package."""
    adj = [set() for _ in range(n)]
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    best = None
    for bits in itertools.product((0, 1), repeat=n):
        s = {i for i in range(n) if bits[i]}
        if kind == "maxcut":
            val = sum(1 for u, v in edges if bits[u] != bits[v])
        elif kind == "mis":
            if any(bits[u] and bits[v] for u, v in edges):
                continue
            val = len(s)
        else:
            if any(i not in s and not (adj[i] & s) for i in range(n)):
                continue
            val = len(s)
        if best is None or (val < best if kind == "mds" else val > best):
            best = val
    return best


def brute_maxsat(n_vars, clauses):
    """clauses: list of (dimacs literals, hard, weight). Returns (best soft, lexicographically first argmax) or (None, None)."""
    best, arg = None, None
    for bits in itertools.product((False, True), repeat=n_vars):
        soft = 0
        ok = True
        for lits, hard, w in clauses:
            sat = any(bits[abs(l) - 1] != (l < 0) for l in lits)
            if hard and not sat:
                ok = False
                break
            if not hard and sat:
                soft += w
        if ok and (best is None or soft > best):
            best, arg = soft, bits
    return best, arg


def random_edges(rng, n, p):
    return [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
