"""Pure numpy / pure Python kernel implementations.

The sequential kernels (branch-and-bound, local-search passes) are written in
the subset of Python that numba's nopython mode accepts, so ``_jit`` compiles
the very same source.  Vectorizable kernels have dedicated numpy versions here
and loop versions in ``_jit``.
"""

import numpy as np

# status codes returned by maxsat_bnb
PROVEN = 0
INFEASIBLE = 1
BUDGET_WITH_INCUMBENT = 2
BUDGET_NO_INCUMBENT = 3


def maxsat_bnb(n_vars, lit_ptr, lit_var, lit_neg, hard, weight,
               var_ptr, var_clause, var_neg, budget):
    """Depth-first branch-and-bound over variables 0..n-1, False branch first.

    Returns ``(status, best_value, best_assignment, nodes)``.  Only strictly
    better incumbents are accepted, so the first optimum met in lexicographic
    order (False < True, variable 0 most significant) is the one kept.
    """
    m = lit_ptr.shape[0] - 1
    clen = np.empty(m, np.int64)
    total_soft = 0
    for c in range(m):
        clen[c] = lit_ptr[c + 1] - lit_ptr[c]
        if not hard[c]:
            total_soft += weight[c]

    assign = np.full(n_vars, -1, np.int8)
    n_sat = np.zeros(m, np.int64)
    n_false = np.zeros(m, np.int64)
    trail = np.empty(n_vars, np.int64)
    tlen = 0
    lv_start = np.empty(n_vars + 1, np.int64)
    lv_var = np.empty(n_vars + 1, np.int64)
    lv_val = np.empty(n_vars + 1, np.int8)
    nl = 0
    units = np.empty(lit_var.shape[0] + m + 1, np.int64)
    nu = 0
    for c in range(m):
        if hard[c] and clen[c] == 1:
            units[nu] = c
            nu += 1

    best = -1
    best_assign = np.zeros(n_vars, np.uint8)
    fals_w = 0
    n_viol = 0
    nodes = 0
    exhausted = False
    pv = -1
    pval = 0
    propagate = True

    while True:
        if propagate:
            while True:
                if pv >= 0:
                    v = pv
                    pv = -1
                    assign[v] = pval
                    trail[tlen] = v
                    tlen += 1
                    for p in range(var_ptr[v], var_ptr[v + 1]):
                        c = var_clause[p]
                        if (pval == 1) != (var_neg[p] != 0):
                            n_sat[c] += 1
                        else:
                            n_false[c] += 1
                            if n_false[c] == clen[c]:
                                if hard[c]:
                                    n_viol += 1
                                else:
                                    fals_w += weight[c]
                            elif hard[c] and n_sat[c] == 0 and n_false[c] == clen[c] - 1:
                                units[nu] = c
                                nu += 1
                if n_viol > 0:
                    break
                found = False
                while nu > 0:
                    nu -= 1
                    c = units[nu]
                    if n_sat[c] > 0 or n_false[c] != clen[c] - 1:
                        continue
                    for p in range(lit_ptr[c], lit_ptr[c + 1]):
                        u = lit_var[p]
                        if assign[u] < 0:
                            pv = u
                            pval = 0 if lit_neg[p] else 1
                            break
                    found = True
                    break
                if not found:
                    break
            nu = 0
            propagate = False

        if n_viol == 0 and total_soft - fals_w > best:
            v = -1
            for i in range(n_vars):
                if assign[i] < 0:
                    v = i
                    break
            if v >= 0:
                if nodes >= budget:
                    exhausted = True
                    break
                nodes += 1
                lv_start[nl] = tlen
                lv_var[nl] = v
                lv_val[nl] = 0
                nl += 1
                pv = v
                pval = 0
                propagate = True
                continue
            value = total_soft - fals_w
            if value > best:
                best = value
                for i in range(n_vars):
                    best_assign[i] = assign[i]

        # backtrack to the deepest level whose True branch is still open
        resumed = False
        while nl > 0:
            nl -= 1
            start = lv_start[nl]
            while tlen > start:
                tlen -= 1
                u = trail[tlen]
                val = assign[u]
                for p in range(var_ptr[u], var_ptr[u + 1]):
                    c = var_clause[p]
                    if (val == 1) != (var_neg[p] != 0):
                        n_sat[c] -= 1
                    else:
                        if n_false[c] == clen[c]:
                            if hard[c]:
                                n_viol -= 1
                            else:
                                fals_w -= weight[c]
                        n_false[c] -= 1
                assign[u] = -1
            if lv_val[nl] == 0:
                lv_val[nl] = 1
                pv = lv_var[nl]
                pval = 1
                nl += 1
                propagate = True
                resumed = True
                break
        if not resumed:
            break

    if exhausted:
        status = BUDGET_WITH_INCUMBENT if best >= 0 else BUDGET_NO_INCUMBENT
    else:
        status = PROVEN if best >= 0 else INFEASIBLE
    return status, best, best_assign, nodes


def maxsat_enumerate(n_vars, lit_ptr, lit_var, lit_neg, hard, weight, chunk=1 << 15):
    """Exhaustive search over all 2**n assignments in lexicographic order.

    Returns ``(best_value, best_assignment)``; ``best_value == -1`` means the
    hard clauses are unsatisfiable.
    """
    m = lit_ptr.shape[0] - 1
    if m == 0:
        return 0, np.zeros(n_vars, np.uint8)
    shifts = (n_vars - 1 - np.arange(n_vars)).astype(np.int64)
    starts = lit_ptr[:-1]
    hard = hard.astype(bool)
    soft_w = np.where(hard, 0, weight).astype(np.int64)
    neg = lit_neg.astype(bool)
    best, best_code = -1, 0
    total = 1 << n_vars
    for lo in range(0, total, chunk):
        codes = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        bits = ((codes[:, None] >> shifts[None, :]) & 1).astype(bool)
        lit_true = bits[:, lit_var] != neg[None, :]
        sat = np.logical_or.reduceat(lit_true, starts, axis=1)
        feasible = sat[:, hard].all(axis=1)
        value = np.where(feasible, sat.astype(np.int64) @ soft_w, -1)
        i = int(np.argmax(value))
        if value[i] > best:
            best, best_code = int(value[i]), int(codes[i])
    assign = ((best_code >> shifts) & 1).astype(np.uint8)
    return best, assign


def segment_sum(values, index, n_seg):
    out = np.zeros((n_seg, values.shape[1]), dtype=values.dtype)
    np.add.at(out, index, values)
    return out


def segment_max(values, index, n_seg):
    out = np.full((n_seg, values.shape[1]), -np.inf, dtype=values.dtype)
    np.maximum.at(out, index, values)
    return out


def mis_two_improve_pass(indptr, indices, selected, tight):
    """One index-order scan of 2-improvement moves; mutates ``selected``/``tight``.

    ``tight[u]`` is the number of selected neighbours of ``u``.  After each
    swap, neighbours of the removed node left with no selected neighbour are
    inserted (keeps the set maximal).  Returns the number of swaps applied.
    """
    n = indptr.shape[0] - 1
    mark = np.zeros(n, np.int64)
    stamp = 0
    moves = 0
    for v in range(n):
        if not selected[v]:
            continue
        fj = -1
        fk = -1
        for a in range(indptr[v], indptr[v + 1]):
            j = indices[a]
            if selected[j] or tight[j] != 1:
                continue
            stamp += 1
            for b in range(indptr[j], indptr[j + 1]):
                mark[indices[b]] = stamp
            for a2 in range(a + 1, indptr[v + 1]):
                k = indices[a2]
                if selected[k] or tight[k] != 1:
                    continue
                if mark[k] != stamp:
                    fj = j
                    fk = k
                    break
            if fj >= 0:
                break
        if fj < 0:
            continue
        selected[v] = 0
        for a in range(indptr[v], indptr[v + 1]):
            tight[indices[a]] -= 1
        for w in (fj, fk):
            selected[w] = 1
            for a in range(indptr[w], indptr[w + 1]):
                tight[indices[a]] += 1
        moves += 1
        for a in range(indptr[v], indptr[v + 1]):
            u = indices[a]
            if not selected[u] and tight[u] == 0:
                selected[u] = 1
                for b in range(indptr[u], indptr[u + 1]):
                    tight[indices[b]] += 1
    return moves


def maxcut_flip_pass(indptr, indices, side):
    """One index-order scan of improving single-node flips; mutates ``side``."""
    n = indptr.shape[0] - 1
    flips = 0
    for v in range(n):
        same = 0
        for a in range(indptr[v], indptr[v + 1]):
            if side[indices[a]] == side[v]:
                same += 1
        if 2 * same > indptr[v + 1] - indptr[v]:
            side[v] = 1 - side[v]
            flips += 1
    return flips
