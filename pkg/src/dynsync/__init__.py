"""Synchronisation from strong dynamical symmetries in open quantum systems.

Exact (dense) and stochastic (trajectory) Lindblad dynamics for dephased spin-1
chains and the charge-dephased Hubbard model, Liouvillian spectra, symmetry
checks and synchronisation witnesses.
"""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    ConfigError,
    DenseCapError,
    DimensionError,
    DynsyncError,
    NumericalError,
    TrackingAmbiguityError,
)
from .hilbert import Operator, SpaceDescriptor, StateVector  # noqa: E402
from .models import (  # noqa: E402
    HubbardParams,
    LindbladModel,
    SpinChainParams,
    build_hubbard,
    build_spin1_chain,
    local_observable,
    product_state,
    random_product_state,
)
from .liouville import (  # noqa: E402
    asymptotic_projection,
    build_superoperator,
    first_order_shift,
    shift_scan,
    spectrum,
)
from .symmetry import discover_symmetries, verify_dynamical_symmetry  # noqa: E402
from .dynamics import (  # noqa: E402
    TimeGrid,
    TimeSeries,
    TrajectoryConfig,
    evolve_dense,
    evolve_trajectories,
    expectation,
    reduced_correlator,
)
from .analysis import (  # noqa: E402
    WindowSpec,
    coherence,
    fourier_amplitude,
    negativity,
    pearson,
    turning_point_prevalence,
)

__all__ = [
    "__version__",
    "DynsyncError", "ConfigError", "DenseCapError", "DimensionError", "NumericalError",
    "TrackingAmbiguityError",
    "Operator", "SpaceDescriptor", "StateVector",
    "SpinChainParams", "HubbardParams", "LindbladModel", "build_spin1_chain", "build_hubbard",
    "local_observable", "product_state", "random_product_state",
    "build_superoperator", "spectrum", "asymptotic_projection", "first_order_shift", "shift_scan",
    "verify_dynamical_symmetry", "discover_symmetries",
    "TimeGrid", "TimeSeries", "TrajectoryConfig", "evolve_dense", "evolve_trajectories",
    "expectation", "reduced_correlator",
    "WindowSpec", "pearson", "negativity", "coherence", "fourier_amplitude",
    "turning_point_prevalence",
]
