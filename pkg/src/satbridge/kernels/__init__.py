"""Hot inner loops, with a numba path and a numpy / pure-Python fallback.

The backend is chosen once at import time.  Set ``SATBRIDGE_DISABLE_NUMBA=1``
to force the fallback (also used automatically when numba is missing).
Both implementations stay importable as ``kernels.reference`` and
``kernels.jit`` (the latter is ``None`` without numba) for benchmarking and
cross-checking.
"""

import logging
import os

from . import _reference as reference

log = logging.getLogger(__name__)

PROVEN = reference.PROVEN
INFEASIBLE = reference.INFEASIBLE
BUDGET_WITH_INCUMBENT = reference.BUDGET_WITH_INCUMBENT
BUDGET_NO_INCUMBENT = reference.BUDGET_NO_INCUMBENT

try:
    from . import _jit as jit
except ImportError:  # pragma: no cover - numba is a declared dependency
    jit = None

_disabled = os.environ.get("SATBRIDGE_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}
USE_NUMBA = jit is not None and not _disabled
BACKEND = "numba" if USE_NUMBA else "numpy"
_impl = jit if USE_NUMBA else reference
log.debug("kernel backend: %s", BACKEND)

maxsat_bnb = _impl.maxsat_bnb
maxsat_enumerate = _impl.maxsat_enumerate
segment_sum = _impl.segment_sum
segment_max = _impl.segment_max
mis_two_improve_pass = _impl.mis_two_improve_pass
maxcut_flip_pass = _impl.maxcut_flip_pass

__all__ = [
    "BACKEND", "USE_NUMBA", "reference", "jit",
    "maxsat_bnb", "maxsat_enumerate", "segment_sum", "segment_max",
    "mis_two_improve_pass", "maxcut_flip_pass",
]
