"""Pick the batch kernel at import time.

``TWOSTAGE_BACKEND=python`` forces the pure-Python kernel; ``cython``
makes a missing extension an error; anything else (default ``auto``)
prefers the compiled kernel when it imports.
"""

import os

from . import _pykernels

_requested = os.environ.get("TWOSTAGE_BACKEND", "auto").lower()

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None
    if _requested == "cython":
        raise

if _requested == "python" or _ckernels is None:
    kernel = _pykernels
else:
    kernel = _ckernels

BACKEND = kernel.BACKEND
estimate_batch = kernel.estimate_batch


def get_kernel(name=None):
    """Return a kernel module by name (``python``/``cython``), or the active one."""
    if name is None:
        return kernel
    if name == "python":
        return _pykernels
    if name == "cython":
        if _ckernels is None:
            raise ImportError("compiled kernel not available")
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


def available():
    return ["python"] + (["cython"] if _ckernels is not None else [])
