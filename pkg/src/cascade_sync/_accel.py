"""JIT plumbing: numba when available, pure-Python fallback otherwise.

Hot loops in this package (embedded-chain stepping, event simulation,
drift scans) are written as scalar numpy code and decorated with
``@njit``.  Setting the environment variable ``CASCADE_SYNC_NO_NUMBA=1``
before import replaces the decorator with a transparent wrapper, so the
exact same code runs interpreted.  Both paths consume the same random
stream and produce bit-identical results; only the speed differs (see
benchmarks/bench_accel.py).
"""

import functools
import os

import numpy as np

NUMBA_DISABLED = os.environ.get("CASCADE_SYNC_NO_NUMBA", "").strip() not in ("", "0")

if not NUMBA_DISABLED:
    from numba import njit as _numba_njit

    USING_NUMBA = True

    def njit(func=None, **kwargs):
        kwargs.setdefault("cache", True)
        if func is None:
            return _numba_njit(**kwargs)
        return _numba_njit(**kwargs)(func)

else:
    USING_NUMBA = False

    def njit(func=None, **kwargs):
        # Interpreted fallback.  uint64 wraparound is intended in the RNG,
        # so integer-overflow warnings are silenced for the wrapped call.
        def decorate(f):
            @functools.wraps(f)
            def wrapper(*args, **kw):
                with np.errstate(over="ignore"):
                    return f(*args, **kw)

            wrapper.py_func = f
            return wrapper

        if func is None:
            return decorate
        return decorate(func)
