"""Select the compiled kernels when available, else the pure-Python ones.

Set ``NONLOCAL_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

if os.environ.get("NONLOCAL_PURE_PYTHON", "") not in ("", "0"):
    kernels = _pykernels
else:
    try:
        from . import _ckernels as kernels
    except ImportError:
        kernels = _pykernels

BACKEND = kernels.NAME


def worker_count():
    """Worker processes allowed for batch work, capped by NONLOCAL_THREADS."""
    cap = os.environ.get("NONLOCAL_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return n
