"""Backend selection for the numeric kernels.

Kernels are written once as plain numpy-compatible Python.  When numba is
importable and ``DP3_BACKEND`` is not ``numpy``, the batch drivers are
compiled with ``@njit``; otherwise the broadcasting numpy drivers are used.
``DP3_THREADS`` caps the numba thread pool.
"""

import logging
import os

logger = logging.getLogger(__name__)

_requested = os.environ.get("DP3_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ValueError(f"DP3_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

try:
    if _requested == "numpy":
        raise ImportError("numpy backend requested")
    import numba

    # the system TBB is often too old for numba; prefer the other layers
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    njit = numba.njit
    prange = numba.prange
    HAS_NUMBA = True
except ImportError as exc:
    logger.debug("numba disabled: %s", exc)
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(func):
            return func

        return wrap

    prange = range

BACKEND = "numba" if HAS_NUMBA else "numpy"


def thread_cap():
    """Number of worker threads allowed by ``DP3_THREADS`` (None if unset)."""
    raw = os.environ.get("DP3_THREADS")
    if not raw:
        return None
    n = int(raw)
    if n < 1:
        raise ValueError("DP3_THREADS must be >= 1")
    return n


if HAS_NUMBA:
    _cap = thread_cap()
    if _cap is not None:
        numba.set_num_threads(min(_cap, numba.config.NUMBA_NUM_THREADS))
