"""Central numerical tolerances and resource caps."""

from __future__ import annotations

import os
from dataclasses import dataclass

DENSE_CAP_ENV = "DYNSYNC_DENSE_CAP"
DEFAULT_DENSE_CAP = 4096


@dataclass(frozen=True)
class Tolerances:
    atol: float = 1e-10
    hermitian: float = 1e-12
    # relative to spectral radius when classifying Liouvillian eigenvalues
    zero_eig_rel: float = 1e-8
    null_product: float = 1e-12
    positivity: float = -1e-7
    trace: float = 1e-9
    expm: float = 1e-12


DEFAULT_TOL = Tolerances()


def dense_cap() -> int:
    """Largest superoperator (block) dimension that may be densified."""
    raw = os.environ.get(DENSE_CAP_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_DENSE_CAP
    return int(raw)
