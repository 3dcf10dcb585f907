"""numba-compiled kernels.  Imported only when numba is available."""

import numba
import numpy as np

from . import _reference

_njit = numba.njit(cache=True, nogil=True)

maxsat_bnb = _njit(_reference.maxsat_bnb)
mis_two_improve_pass = _njit(_reference.mis_two_improve_pass)
maxcut_flip_pass = _njit(_reference.maxcut_flip_pass)


@_njit
def _enumerate(n_vars, lit_ptr, lit_var, lit_neg, hard, weight):
    m = lit_ptr.shape[0] - 1
    best = -1
    best_code = 0
    for code in range(1 << n_vars):
        value = 0
        ok = True
        for c in range(m):
            sat = False
            for p in range(lit_ptr[c], lit_ptr[c + 1]):
                bit = (code >> (n_vars - 1 - lit_var[p])) & 1
                if bit != lit_neg[p]:
                    sat = True
                    break
            if sat:
                if not hard[c]:
                    value += weight[c]
            elif hard[c]:
                ok = False
                break
        if ok and value > best:
            best = value
            best_code = code
    assign = np.zeros(n_vars, np.uint8)
    for i in range(n_vars):
        assign[i] = (best_code >> (n_vars - 1 - i)) & 1
    return best, assign


def maxsat_enumerate(n_vars, lit_ptr, lit_var, lit_neg, hard, weight):
    return _enumerate(n_vars, lit_ptr, lit_var, lit_neg, hard, weight)


@_njit
def segment_sum(values, index, n_seg):
    out = np.zeros((n_seg, values.shape[1]), dtype=values.dtype)
    for e in range(values.shape[0]):
        s = index[e]
        for k in range(values.shape[1]):
            out[s, k] += values[e, k]
    return out


@_njit
def segment_max(values, index, n_seg):
    out = np.full((n_seg, values.shape[1]), -np.inf, dtype=values.dtype)
    for e in range(values.shape[0]):
        s = index[e]
        for k in range(values.shape[1]):
            if values[e, k] > out[s, k]:
                out[s, k] = values[e, k]
    return out
