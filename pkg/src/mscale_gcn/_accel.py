"""Numba switch.

Set ``MSCALE_GCN_NO_NUMBA=1`` to force the pure-numpy kernels. The flag is
read once at import time.
"""

import os

_disabled = os.environ.get("MSCALE_GCN_NO_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _disabled:
        raise ImportError
    from numba import njit
    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f

USE_NUMBA = HAS_NUMBA and not _disabled

