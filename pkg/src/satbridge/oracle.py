"""Exact Max-SAT solving for labels and verification, plus an external-solver client."""

from __future__ import annotations

import logging
import os
import subprocess
import tempfile
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .maxsat import Formula, emit_wcnf, evaluate

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 50_000_000
ENUMERATE_LIMIT = 30


class InfeasibleError(RuntimeError):
    """The hard clauses admit no assignment."""


class BudgetExhausted(RuntimeError):
    """Search budget ran out before any feasible assignment was found."""


class ExternalSolverError(RuntimeError):
    def __init__(self, msg: str, output: str = ""):
        super().__init__(msg)
        self.output = output


class SolverTimeout(ExternalSolverError):
    pass


@dataclass(frozen=True)
class OracleResult:
    assignment: np.ndarray
    soft_optimum: int
    proven: bool
    nodes: int = 0

    def __eq__(self, other):
        return (isinstance(other, OracleResult) and self.soft_optimum == other.soft_optimum
                and self.proven == other.proven
                and np.array_equal(self.assignment, other.assignment))


def solve_exact(formula: Formula, budget: int = DEFAULT_BUDGET) -> OracleResult:
    """Branch-and-bound with unit propagation over hard clauses.

    Bound: soft weight not yet falsified.  Among optimal assignments the
    lexicographically smallest one is returned (False < True, variable 0
    most significant).
    """
    a = formula.arrays
    status, best, assign, nodes = kernels.maxsat_bnb(
        a.n_vars, a.lit_ptr, a.lit_var, a.lit_neg, a.hard, a.weight,
        a.var_ptr, a.var_clause, a.var_neg, int(budget))
    if status == kernels.INFEASIBLE:
        raise InfeasibleError("hard clauses are unsatisfiable")
    if status == kernels.BUDGET_NO_INCUMBENT:
        raise BudgetExhausted(f"no feasible assignment within {budget} nodes")
    return OracleResult(assign.astype(bool), int(best), status == kernels.PROVEN, int(nodes))


def solve_enumerate(formula: Formula) -> OracleResult:
    """Exhaustive enumeration in lexicographic order; the independent check on B&B."""
    if formula.n_vars > ENUMERATE_LIMIT:
        raise ValueError(f"enumeration limited to {ENUMERATE_LIMIT} variables")
    a = formula.arrays
    best, assign = kernels.maxsat_enumerate(a.n_vars, a.lit_ptr, a.lit_var, a.lit_neg, a.hard, a.weight)
    if best < 0:
        raise InfeasibleError("hard clauses are unsatisfiable")
    return OracleResult(np.asarray(assign).astype(bool), int(best), True, 1 << a.n_vars)


def label_dataset(formulas: Sequence[Formula], budget: int = DEFAULT_BUDGET, metas=None):
    """Oracle-label formulas; unproven or infeasible ones are dropped and counted."""
    from .pipeline import LabeledInstance
    from .reduce import build_bipartite

    out = []
    dropped = 0
    for i, f in enumerate(formulas):
        try:
            res = solve_exact(f, budget)
        except (InfeasibleError, BudgetExhausted):
            dropped += 1
            continue
        if not res.proven:
            dropped += 1
            continue
        meta = dict(metas[i]) if metas is not None else {}
        meta["proven"] = True
        out.append(LabeledInstance(f, build_bipartite(f), res.assignment.copy(), meta))
    if dropped:
        log.warning("label_dataset: dropped %d of %d formulas (budget or infeasible)", dropped, len(formulas))
    return out


def parse_solver_output(text: str, n_vars: int):
    """Return ``(status, assignment or None)`` from competition-style output.

    Accepts both ``v 1 -2 3 ...`` signed-literal lines and the newer
    ``v 0110...`` bitstring form.
    """
    status = None
    v_tokens: list[str] = []
    for line in text.splitlines():
        tok = line.split()
        if not tok:
            continue
        if tok[0] == "s":
            status = " ".join(tok[1:]).upper()
        elif tok[0] == "v":
            v_tokens.extend(tok[1:])
    if not v_tokens:
        return status, None
    values = np.zeros(n_vars, bool)
    if len(v_tokens) == 1 and set(v_tokens[0]) <= {"0", "1"} and len(v_tokens[0]) == n_vars:
        values[:] = [ch == "1" for ch in v_tokens[0]]
        return status, values
    for t in v_tokens:
        lit = int(t)
        if lit == 0:
            continue
        var = abs(lit) - 1
        if var >= n_vars:
            raise ValueError(f"literal {lit} out of range")
        values[var] = lit > 0
    return status, values


def external_solve(formula: Formula, solver_command: Sequence[str] | str, timeout: float = 60.0) -> OracleResult:
    """Run an external WCNF solver and re-evaluate its assignment locally."""
    cmd = solver_command.split() if isinstance(solver_command, str) else list(solver_command)
    fd, path = tempfile.mkstemp(suffix=".wcnf")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(emit_wcnf(formula))
        try:
            proc = subprocess.run(cmd + [path], capture_output=True, text=True, timeout=timeout)
        except subprocess.TimeoutExpired as exc:
            partial = (exc.stdout or b"")
            partial = partial.decode(errors="replace") if isinstance(partial, bytes) else partial
            raise SolverTimeout(f"solver timed out after {timeout}s", partial) from None
        except OSError as exc:
            raise ExternalSolverError(f"could not start solver: {exc}") from None
    finally:
        os.unlink(path)
    out = proc.stdout
    try:
        status, values = parse_solver_output(out, formula.n_vars)
    except ValueError as exc:
        raise ExternalSolverError(f"unparsable solver output: {exc}", out) from None
    if status is not None and "UNSAT" in status:
        raise InfeasibleError("external solver reports UNSATISFIABLE")
    if values is None:
        raise ExternalSolverError(f"no 'v' line in solver output (exit {proc.returncode})", out + proc.stderr)
    ev = evaluate(formula, values)
    if ev.hard_violations:
        raise ExternalSolverError(f"solver assignment violates {ev.hard_violations} hard clauses", out)
    proven = status is not None and status.startswith("OPTIMUM")
    return OracleResult(values, ev.soft_satisfied_weight, proven)
