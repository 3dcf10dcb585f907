"""Max-SAT formulas, assignment evaluation and DIMACS WCNF interchange."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np


class WcnfFormatError(ValueError):
    pass


class Literal(NamedTuple):
    var: int
    negated: bool = False

    def to_dimacs(self) -> int:
        return -(self.var + 1) if self.negated else self.var + 1

    @classmethod
    def from_dimacs(cls, lit: int) -> "Literal":
        if lit == 0:
            raise ValueError("0 is not a literal")
        return cls(abs(lit) - 1, lit < 0)

    def __invert__(self) -> "Literal":
        return Literal(self.var, not self.negated)


def pos(var: int) -> Literal:
    return Literal(var, False)


def neg(var: int) -> Literal:
    return Literal(var, True)


@dataclass(frozen=True)
class Clause:
    literals: tuple[Literal, ...]
    hard: bool = False
    weight: int = 1

    def __post_init__(self):
        lits = tuple(Literal(int(l[0]), bool(l[1])) for l in self.literals)
        object.__setattr__(self, "literals", lits)
        if not lits:
            raise ValueError("empty clause")
        vars_ = [l.var for l in lits]
        if len(set(lits)) != len(lits):
            raise ValueError(f"duplicate literal in clause {self}")
        if len(set(vars_)) != len(vars_):
            raise ValueError(f"tautological clause {self}")
        if self.hard:
            object.__setattr__(self, "weight", 1)
        elif int(self.weight) < 1:
            raise ValueError("soft clause weight must be >= 1")

    @classmethod
    def of(cls, *dimacs_lits: int, hard: bool = False, weight: int = 1) -> "Clause":
        return cls(tuple(Literal.from_dimacs(l) for l in dimacs_lits), hard=hard, weight=weight)

    def __len__(self):
        return len(self.literals)


class EvalResult(NamedTuple):
    hard_violations: int
    soft_satisfied_weight: int


@dataclass(frozen=True, eq=True)
class Formula:
    n_vars: int
    clauses: tuple[Clause, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(self.clauses))
        for c in self.clauses:
            for lit in c.literals:
                if not 0 <= lit.var < self.n_vars:
                    raise ValueError(f"literal {lit} out of range for {self.n_vars} variables")

    @property
    def m(self) -> int:
        return len(self.clauses)

    @property
    def hard_clauses(self) -> list[Clause]:
        return [c for c in self.clauses if c.hard]

    @property
    def soft_clauses(self) -> list[Clause]:
        return [c for c in self.clauses if not c.hard]

    @property
    def total_soft_weight(self) -> int:
        return sum(c.weight for c in self.clauses if not c.hard)

    @property
    def n_literals(self) -> int:
        return int(self.arrays.lit_ptr[-1])

    @cached_property
    def arrays(self) -> "ClauseArrays":
        return ClauseArrays.from_formula(self)

    def __hash__(self):
        return hash((self.n_vars, self.clauses))


class ClauseArrays(NamedTuple):
    """Flat CSR view of a formula consumed by the kernels."""

    n_vars: int
    lit_ptr: np.ndarray      # (m+1,) int64
    lit_var: np.ndarray      # (L,) int64
    lit_neg: np.ndarray      # (L,) uint8
    hard: np.ndarray         # (m,) bool
    weight: np.ndarray       # (m,) int64; 1 for hard clauses
    var_ptr: np.ndarray      # (n+1,) int64, occurrences grouped by variable
    var_clause: np.ndarray   # (L,) int64
    var_neg: np.ndarray      # (L,) uint8

    @classmethod
    def from_formula(cls, f: Formula) -> "ClauseArrays":
        sizes = np.fromiter((len(c) for c in f.clauses), np.int64, count=f.m)
        lit_ptr = np.zeros(f.m + 1, np.int64)
        np.cumsum(sizes, out=lit_ptr[1:])
        lit_var = np.fromiter((l.var for c in f.clauses for l in c.literals), np.int64)
        lit_neg = np.fromiter((l.negated for c in f.clauses for l in c.literals), np.uint8)
        hard = np.fromiter((c.hard for c in f.clauses), bool, count=f.m)
        weight = np.fromiter((c.weight for c in f.clauses), np.int64, count=f.m)
        clause_of = np.repeat(np.arange(f.m, dtype=np.int64), sizes)
        order = np.argsort(lit_var, kind="stable")
        var_ptr = np.zeros(f.n_vars + 1, np.int64)
        np.cumsum(np.bincount(lit_var, minlength=f.n_vars), out=var_ptr[1:])
        arrs = cls(f.n_vars, lit_ptr, lit_var, lit_neg, hard, weight,
                   var_ptr, clause_of[order], lit_neg[order])
        for a in arrs[1:]:
            a.setflags(write=False)
        return arrs

    def clause_satisfied(self, assignment: np.ndarray) -> np.ndarray:
        """Boolean per clause.  ``assignment`` is a length-n boolean array."""
        if len(self.lit_var) == 0:
            return np.zeros(len(self.hard), bool)
        lit_true = assignment[self.lit_var] != self.lit_neg.astype(bool)
        return np.logical_or.reduceat(lit_true, self.lit_ptr[:-1])


def as_assignment(values, n_vars: int | None = None) -> np.ndarray:
    a = np.asarray(values)
    if a.dtype != bool:
        a = a.astype(np.int64) != 0
    if a.ndim != 1:
        raise ValueError("assignment must be one-dimensional")
    if n_vars is not None and len(a) != n_vars:
        raise ValueError(f"assignment has length {len(a)}, formula has {n_vars} variables")
    return a


def evaluate(formula: Formula, assignment) -> EvalResult:
    a = as_assignment(assignment, formula.n_vars)
    arr = formula.arrays
    if formula.m == 0:
        return EvalResult(0, 0)
    sat = arr.clause_satisfied(a)
    hard_viol = int(np.count_nonzero(arr.hard & ~sat))
    soft = int(arr.weight[~arr.hard & sat].sum())
    return EvalResult(hard_viol, soft)


def formula_from_dimacs(n_vars: int, hard: Iterable[Sequence[int]] = (),
                        soft: Iterable[Sequence[int]] = ()) -> Formula:
    """Build a formula from signed 1-based literal lists (hard first, then soft)."""
    clauses = [Clause.of(*c, hard=True) for c in hard] + [Clause.of(*c) for c in soft]
    return Formula(n_vars, tuple(clauses))


def emit_wcnf(formula: Formula) -> str:
    """Serialize as pre-2022 DIMACS WCNF; hard clauses carry weight ``top``."""
    top = formula.total_soft_weight + 1
    out = [f"p wcnf {formula.n_vars} {formula.m} {top}"]
    for c in formula.clauses:
        w = top if c.hard else c.weight
        out.append(" ".join([str(w)] + [str(l.to_dimacs()) for l in c.literals] + ["0"]))
    return "\n".join(out)


def parse_wcnf(text: str) -> Formula:
    header = None
    clauses = []
    pending: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tok = raw.split()
        if not tok or tok[0] == "c":
            continue
        if tok[0] == "p":
            if header is not None:
                raise WcnfFormatError(f"line {lineno}: second header")
            if len(tok) != 5 or tok[1] != "wcnf":
                raise WcnfFormatError(f"line {lineno}: header must be 'p wcnf n m top' "
                                      "(top-less WCNF 2022 is not supported)")
            try:
                header = tuple(int(t) for t in tok[2:])
            except ValueError:
                raise WcnfFormatError(f"line {lineno}: non-integer header") from None
            continue
        if header is None:
            raise WcnfFormatError(f"line {lineno}: clause before 'p wcnf' header")
        try:
            nums = [int(t) for t in tok]
        except ValueError:
            raise WcnfFormatError(f"line {lineno}: non-integer token") from None
        pending.extend(nums)
        if pending[-1] != 0:
            # clause continues on the next line
            continue
        weight, body = pending[0], pending[1:-1]
        pending = []
        if 0 in body:
            raise WcnfFormatError(f"line {lineno}: literal 0 inside clause body")
        if not body:
            raise WcnfFormatError(f"line {lineno}: empty clause")
        n_vars, _, top = header
        if weight < 1 or weight > top:
            raise WcnfFormatError(f"line {lineno}: weight {weight} outside 1..top={top}")
        if any(abs(l) > n_vars for l in body):
            raise WcnfFormatError(f"line {lineno}: literal exceeds declared {n_vars} variables")
        hard = weight == top
        try:
            clauses.append(Clause.of(*body, hard=hard, weight=1 if hard else weight))
        except ValueError as exc:
            raise WcnfFormatError(f"line {lineno}: {exc}") from None
    if header is None:
        raise WcnfFormatError("missing 'p wcnf' header")
    if pending:
        raise WcnfFormatError("unterminated clause at end of input")
    if len(clauses) != header[1]:
        raise WcnfFormatError(f"header declares {header[1]} clauses, found {len(clauses)}")
    return Formula(header[0], tuple(clauses))
