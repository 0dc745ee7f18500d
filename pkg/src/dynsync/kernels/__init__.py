"""Hot-loop kernels with a compiled (Cython) backend and a pure-Python fallback.

The compiled backend is used when the extension was built and
``DYNSYNC_PURE_PYTHON`` is not set to a truthy value.
"""

from __future__ import annotations

import os

from . import _pykernels
from ._pykernels import NO_JUMP_CHANNEL, NORM_UNDERFLOW, OK, OUT_OF_RANDOMS

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["cython"] = _ckernels


def _select():
    if os.environ.get("DYNSYNC_PURE_PYTHON", "").lower() in {"1", "true", "yes"}:
        return "python"
    return "cython" if "cython" in BACKENDS else "python"


BACKEND = _select()


def get_backend(name: str | None = None):
    """Kernel module by name (``"cython"`` or ``"python"``); default is the active one."""
    return BACKENDS[name or BACKEND]


def run_trajectory(*args, backend: str | None = None):
    return get_backend(backend).run_trajectory(*args)


def rolling_pearson(*args, backend: str | None = None):
    return get_backend(backend).rolling_pearson(*args)


__all__ = [
    "BACKEND", "BACKENDS", "get_backend", "run_trajectory", "rolling_pearson",
    "OK", "OUT_OF_RANDOMS", "NO_JUMP_CHANNEL", "NORM_UNDERFLOW",
]
