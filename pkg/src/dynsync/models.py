"""Model builders: dephased spin-1 XXZ chain and charge-dephased Hubbard chain.

Both chains use open boundary conditions. Fermions are represented with
Jordan-Wigner strings over modes ordered (site 0 up, site 0 down, site 1 up, ...),
so each Hubbard site is a 4-dimensional tensor factor.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from ._config import DEFAULT_TOL
from .exceptions import ConfigError, DimensionError
from .hilbert import (
    Operator,
    SpaceDescriptor,
    StateVector,
    commutator,
    embed_local,
)

SQRT2 = math.sqrt(2.0)

# spin-1, local basis (up, 0, down)
SZ = np.diag([1.0, 0.0, -1.0]).astype(complex)
SPLUS = np.array([[0, SQRT2, 0], [0, 0, SQRT2], [0, 0, 0]], dtype=complex)
SMINUS = SPLUS.conj().T
SX = 0.5 * (SPLUS + SMINUS)
SY = 0.5j * (SMINUS - SPLUS)
SPIN1_KETS = {
    "↑": np.array([1, 0, 0], dtype=complex),
    "0": np.array([0, 1, 0], dtype=complex),
    "↓": np.array([0, 0, 1], dtype=complex),
    "→": np.array([1, 0, 1], dtype=complex) / SQRT2,
    "←": np.array([1, 0, -1], dtype=complex) / SQRT2,
}
_ASCII_LABELS = {
    "up": "↑", "u": "↑", "down": "↓", "d": "↓", "dn": "↓", "zero": "0", "0": "0",
    "right": "→", "r": "→", "+x": "→", "left": "←", "l": "←", "-x": "←",
    "empty": "empty", "e": "empty", "vac": "empty", "double": "double", "ud": "double",
}


def _canonical_label(label: str) -> str:
    return _ASCII_LABELS.get(label, label)


@dataclass(frozen=True)
class SpinChainParams:
    n_sites: int
    omegas: tuple[float, ...]
    hopping: float = 1.0
    anisotropy: float = 0.5
    dephasing_rate: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "omegas", tuple(float(w) for w in self.omegas))
        if self.n_sites < 1:
            raise ConfigError("n_sites must be positive")
        if len(self.omegas) != self.n_sites:
            raise ConfigError(f"expected {self.n_sites} omegas, got {len(self.omegas)}")
        if self.dephasing_rate < 0:
            raise ConfigError("dephasing_rate must be >= 0")

    @classmethod
    def homogeneous(cls, n_sites: int, omega: float = 1.0, **kw) -> "SpinChainParams":
        return cls(n_sites, (omega,) * n_sites, **kw)


@dataclass(frozen=True)
class HubbardParams:
    n_sites: int
    omegas: tuple[float, ...]
    chem_potentials: tuple[float, ...]
    tunneling: float = 1.0
    interaction: float = 1.0
    dephasing_rate: float = 2.5

    def __post_init__(self):
        object.__setattr__(self, "omegas", tuple(float(w) for w in self.omegas))
        object.__setattr__(self, "chem_potentials", tuple(float(m) for m in self.chem_potentials))
        if self.n_sites < 1:
            raise ConfigError("n_sites must be positive")
        if len(self.omegas) != self.n_sites or len(self.chem_potentials) != self.n_sites:
            raise ConfigError("omegas and chem_potentials need one entry per site")
        if self.dephasing_rate < 0:
            raise ConfigError("dephasing_rate must be >= 0")


@dataclass(frozen=True, eq=False)
class LindbladModel:
    space: SpaceDescriptor
    hamiltonian: Operator
    jumps: tuple[tuple[Operator, float], ...]
    kind: str = "generic"
    params: object = None

    def __post_init__(self):
        object.__setattr__(self, "jumps", tuple((op, float(rate)) for op, rate in self.jumps))
        if not self.hamiltonian.is_hermitian(DEFAULT_TOL.hermitian):
            raise ConfigError("Hamiltonian must be Hermitian")
        if any(rate < 0 for _, rate in self.jumps):
            raise ConfigError("jump rates must be >= 0")

    @property
    def dim(self) -> int:
        return self.space.total_dim

    def with_hamiltonian(self, h: Operator) -> "LindbladModel":
        return LindbladModel(self.space, h, self.jumps, self.kind, self.params)


# --------------------------------------------------------------------------------------
# spin-1 chain
# --------------------------------------------------------------------------------------

def spin1_space(n_sites: int) -> SpaceDescriptor:
    return SpaceDescriptor.uniform(n_sites, 3)


def spin1_local(name: str) -> np.ndarray:
    table = {
        "Sz": SZ, "S+": SPLUS, "S-": SMINUS, "Sx": SX, "Sy": SY,
        "Sx2": SX @ SX, "Sy2": SY @ SY, "Sz2": SZ @ SZ,
    }
    try:
        return table[name]
    except KeyError:
        raise ConfigError(f"unknown spin-1 operator {name!r}") from None


def build_spin1_chain(params: SpinChainParams) -> LindbladModel:
    n = params.n_sites
    space = spin1_space(n)
    sz = [embed_local(SZ, j, space) for j in range(n)]
    splus = [embed_local(SPLUS, j, space) for j in range(n)]
    sminus = [embed_local(SMINUS, j, space) for j in range(n)]
    h = Operator.zeros(space)
    for j in range(n):
        h = h + params.omegas[j] * sz[j]
    for j in range(n - 1):
        h = h + params.hopping * (splus[j] @ sminus[j + 1] + sminus[j] @ splus[j + 1])
        h = h + params.anisotropy * (sz[j] @ sz[j + 1])
    jumps = [(s @ s, params.dephasing_rate) for s in sz]
    return LindbladModel(space, h, jumps, kind="spin1", params=params)


def spin1_magnetizations(n_sites: int) -> np.ndarray:
    """Total S^z of every basis state in the configuration ordering."""
    digits = np.array(list(itertools.product(range(3), repeat=n_sites)), dtype=int)
    return (1 - digits).sum(axis=1)


def spin_flip_index(n_sites: int) -> np.ndarray:
    """Basis permutation implementing the global spin flip (up <-> down, 0 fixed)."""
    d = 3 ** n_sites
    return d - 1 - np.arange(d)


def sector_counts(n_sites: int) -> dict[int, int]:
    """Number of configurations per total magnetisation m (closed form)."""
    counts = {}
    for m in range(-n_sites, n_sites + 1):
        g = 0
        for s in range(n_sites + 1):
            k2 = n_sites - s + m
            if k2 % 2 or k2 < 0 or k2 // 2 > n_sites - s:
                continue
            g += math.comb(n_sites, s) * math.comb(n_sites - s, k2 // 2)
        counts[m] = g
    return counts


@dataclass(frozen=True)
class SteadyStateSpec:
    n_sites: int
    lambdas: dict
    lambda0_prime: float = 0.0
    sector_counts: dict = field(default=None)

    def __post_init__(self):
        lam = {int(m): float(self.lambdas.get(m, 0.0)) for m in range(-self.n_sites, self.n_sites + 1)}
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "sector_counts", sector_counts(self.n_sites))

    def normalization(self) -> float:
        return self.lambda0_prime + sum(self.lambdas[m] * self.sector_counts[m] for m in self.lambdas)

    def is_normalized(self, tol: float = 1e-12) -> bool:
        return abs(self.normalization() - 1.0) <= tol

    @classmethod
    def maximally_mixed(cls, n_sites: int) -> "SteadyStateSpec":
        return cls(n_sites, {m: 3.0 ** -n_sites for m in range(-n_sites, n_sites + 1)})

    @classmethod
    def random(cls, n_sites: int, seed: int = 0, with_prime: bool = True) -> "SteadyStateSpec":
        """Random admissible spec, rescaled to satisfy the trace condition."""
        rng = np.random.default_rng(seed)
        lam = {m: float(rng.uniform(0.1, 1.0)) for m in range(-n_sites, n_sites + 1)}
        prime = float(rng.uniform(-0.05, 0.05)) if with_prime else 0.0
        raw = cls(n_sites, lam, prime)
        scale = raw.normalization()
        return cls(n_sites, {m: v / scale for m, v in lam.items()}, prime / scale)


def spin1_steady_state(n_sites: int, spec: SteadyStateSpec) -> Operator:
    if spec.n_sites != n_sites:
        raise ConfigError("spec was built for a different chain length")
    if not spec.is_normalized():
        raise ConfigError(f"steady-state spec is not normalized (sum = {spec.normalization():.15g})")
    space = spin1_space(n_sites)
    mags = spin1_magnetizations(n_sites)
    d = space.total_dim
    diag = np.array([spec.lambdas[int(m)] for m in mags], dtype=complex)
    data = sp.diags(diag, format="csr")
    if spec.lambda0_prime != 0.0:
        zero = np.flatnonzero(mags == 0)
        flip = spin_flip_index(n_sites)[zero]
        data = data + sp.csr_matrix(
            (np.full(zero.size, spec.lambda0_prime, dtype=complex), (zero, flip)), shape=(d, d)
        )
    return Operator(space, data)


def spin1_symmetry(n_sites: int, m: int) -> Operator:
    """Sum of dyads |m_i><SF m_i| over the magnetisation-m sector."""
    if m == 0 or abs(m) > n_sites:
        raise ConfigError(f"need 1 <= |m| <= N, got m={m}")
    space = spin1_space(n_sites)
    rows = np.flatnonzero(spin1_magnetizations(n_sites) == m)
    cols = spin_flip_index(n_sites)[rows]
    d = space.total_dim
    return Operator(space, sp.csr_matrix((np.ones(rows.size, dtype=complex), (rows, cols)), shape=(d, d)))


def sm_extra_symmetry_B(n_sites: int) -> Operator:
    """Staggered single-flip coherence out of the fully polarised state.

    Returns sum_i (-1)^i |up...up><up..down_i..up| (sites counted from 1). It
    commutes with every (S^z_j)^2 and is an eigenoperator of the Hamiltonian
    only when the ZZ coupling vanishes.
    """
    space = spin1_space(n_sites)
    d = space.total_dim
    ket_allup = np.zeros(d, dtype=complex)
    ket_allup[0] = 1.0
    top = sp.csr_matrix(np.outer(ket_allup, ket_allup))
    flip_down = np.zeros((3, 3), dtype=complex)
    flip_down[0, 2] = 1.0  # |up><down| = (S+)^2 / 2
    out = Operator.zeros(space)
    for j in range(n_sites):
        sign = (-1) ** (j + 1)
        out = out + sign * (Operator(space, top) @ embed_local(flip_down, j, space))
    return out


# --------------------------------------------------------------------------------------
# Hubbard chain
# --------------------------------------------------------------------------------------

_C = np.array([[0, 1], [0, 0]], dtype=complex)  # annihilator in (empty, occupied)
_PARITY = np.diag([1.0, -1.0]).astype(complex)
SPIN_INDEX = {"up": 0, "↑": 0, "down": 1, "dn": 1, "↓": 1}


def hubbard_space(n_sites: int) -> SpaceDescriptor:
    return SpaceDescriptor.uniform(n_sites, 4)


@lru_cache(maxsize=16)
def _annihilators(n_sites: int) -> tuple:
    n_modes = 2 * n_sites
    ops = []
    for k in range(n_modes):
        factors = [_PARITY] * k + [_C] + [np.eye(2, dtype=complex)] * (n_modes - k - 1)
        m = sp.csr_matrix(np.array([[1.0]], dtype=complex))
        for f in factors:
            m = sp.kron(m, sp.csr_matrix(f), format="csr")
        ops.append(m)
    return tuple(ops)


def fermion_annihilator(n_sites: int, site: int, spin: str | int) -> Operator:
    space = hubbard_space(n_sites)
    space.check_site(site)
    s = SPIN_INDEX[spin] if isinstance(spin, str) else int(spin)
    return Operator(space, _annihilators(n_sites)[2 * site + s])


def fermion_creator(n_sites: int, site: int, spin: str | int) -> Operator:
    return fermion_annihilator(n_sites, site, spin).dag()


def number_op(n_sites: int, site: int, spin: str | int | None = None) -> Operator:
    if spin is None:
        return number_op(n_sites, site, 0) + number_op(n_sites, site, 1)
    c = fermion_annihilator(n_sites, site, spin)
    return c.dag() @ c


def build_hubbard(params: HubbardParams) -> LindbladModel:
    n = params.n_sites
    space = hubbard_space(n)
    h = Operator.zeros(space)
    for j in range(n - 1):
        for s in (0, 1):
            hop = fermion_creator(n, j, s) @ fermion_annihilator(n, j + 1, s)
            h = h - params.tunneling * (hop + hop.dag())
    for j in range(n):
        nu, nd = number_op(n, j, 0), number_op(n, j, 1)
        h = h + params.interaction * (nu @ nd)
        h = h + 0.5 * params.omegas[j] * (nu - nd)
        h = h + params.chem_potentials[j] * (nu + nd)
    jumps = [(number_op(n, j), params.dephasing_rate) for j in range(n)]
    return LindbladModel(space, h, jumps, kind="hubbard", params=params)


def hubbard_spin_raising(n_sites: int) -> Operator:
    space = hubbard_space(n_sites)
    out = Operator.zeros(space)
    for j in range(n_sites):
        out = out + fermion_creator(n_sites, j, 0) @ fermion_annihilator(n_sites, j, 1)
    return out


def hubbard_local(name: str, site: int, n_sites: int) -> Operator:
    cu_d = fermion_creator(n_sites, site, 0)
    cd = fermion_annihilator(n_sites, site, 1)
    splus = cu_d @ cd
    nu, nd = number_op(n_sites, site, 0), number_op(n_sites, site, 1)
    if name == "Sx":
        return 0.5 * (splus + splus.dag())
    if name == "Sy":
        return -0.5j * (splus - splus.dag())
    if name == "Sz":
        return 0.5 * (nu - nd)
    if name == "n":
        return nu + nd
    if name == "n_up":
        return nu
    if name == "n_dn":
        return nd
    if name == "double":
        return nu @ nd
    raise ConfigError(f"unknown Hubbard operator {name!r}")


def single_occupancy_projector(n_sites: int) -> Operator:
    space = hubbard_space(n_sites)
    out = Operator.identity(space)
    for j in range(n_sites):
        nj = number_op(n_sites, j)
        out = out @ (nj @ (2 * Operator.identity(space) - nj))  # 1 on n_j=1, 0 on n_j in {0,2}
    return out


# --------------------------------------------------------------------------------------
# named local observables and states
# --------------------------------------------------------------------------------------

def local_observable(kind: str, name: str, site: int, n_sites: int) -> Operator:
    if kind == "spin1":
        return embed_local(spin1_local(name), site, spin1_space(n_sites))
    if kind == "hubbard":
        return hubbard_local(name, site, n_sites)
    raise ConfigError(f"unknown model kind {kind!r}")


def _hubbard_site_creator(label: str, site: int, n_sites: int) -> Operator:
    cu = fermion_creator(n_sites, site, 0)
    cd = fermion_creator(n_sites, site, 1)
    space = hubbard_space(n_sites)
    table = {
        "↑": lambda: cu,
        "↓": lambda: cd,
        "→": lambda: (cu + cd) / SQRT2,
        "←": lambda: (cu - cd) / SQRT2,
        "empty": lambda: Operator.identity(space),
        "double": lambda: cu @ cd,
    }
    try:
        return table[label]()
    except KeyError:
        raise ConfigError(f"label {label!r} is not a Hubbard site state") from None


def product_state(labels: Sequence[str], kind: str = "spin1") -> StateVector:
    """Tensor-product state from per-site labels (↑ ↓ 0 → ← for spin-1;
    ↑ ↓ → ← empty double for Hubbard). ASCII aliases such as ``up``/``right`` work."""
    labels = [_canonical_label(x) for x in labels]
    n = len(labels)
    if kind == "spin1":
        vec = np.array([1.0 + 0j])
        for lab in labels:
            if lab not in SPIN1_KETS:
                raise ConfigError(f"label {lab!r} is not a spin-1 state")
            vec = np.kron(vec, SPIN1_KETS[lab])
        return StateVector(spin1_space(n), vec)
    if kind == "hubbard":
        space = hubbard_space(n)
        vac = np.zeros(space.total_dim, dtype=complex)
        vac[0] = 1.0
        op = Operator.identity(space)
        for j, lab in enumerate(labels):
            op = op @ _hubbard_site_creator(lab, j, n)
        return StateVector(space, op.data @ vac)
    raise ConfigError(f"unknown model kind {kind!r}")


def _random_spin1_local(rng: np.random.Generator, zero_mean_sx: bool) -> np.ndarray:
    v = rng.normal(size=3) + 1j * rng.normal(size=3)
    if zero_mean_sx:
        # <Sx> ∝ Re(conj(a) b + conj(b) c) vanishes for real b and Re(c) = -Re(a)
        v[1] = abs(v[1])
        v[2] = -v[0].real + 1j * v[2].imag
    return v / np.linalg.norm(v)


def random_product_state(
    n_sites: int, seed: int, kind: str = "spin1", zero_mean_sx: bool = False
) -> StateVector:
    """Seeded product of Gaussian-random local states.

    For Hubbard the local state is a random single-occupancy spinor.
    """
    rng = np.random.default_rng(seed)
    if kind == "spin1":
        vec = np.array([1.0 + 0j])
        for _ in range(n_sites):
            vec = np.kron(vec, _random_spin1_local(rng, zero_mean_sx))
        return StateVector(spin1_space(n_sites), vec)
    if kind == "hubbard":
        space = hubbard_space(n_sites)
        vac = np.zeros(space.total_dim, dtype=complex)
        vac[0] = 1.0
        op = Operator.identity(space)
        for j in range(n_sites):
            a = rng.normal(size=2) + 1j * rng.normal(size=2)
            a /= np.linalg.norm(a)
            op = op @ (a[0] * fermion_creator(n_sites, j, 0) + a[1] * fermion_creator(n_sites, j, 1))
        return StateVector(space, op.data @ vac)
    raise ConfigError(f"unknown model kind {kind!r}")


# --------------------------------------------------------------------------------------
# detuning
# --------------------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DetuningProfile:
    field_ops: tuple[Operator, ...]
    detunings: tuple[float, ...]
    mean_frequency: float
    mean_detuning: float

    @property
    def epsilon(self) -> float:
        return self.mean_detuning / self.mean_frequency

    def field(self) -> Operator:
        """Unscaled inhomogeneous part sum_j delta_j f_j."""
        return sum(d * f for d, f in zip(self.detunings, self.field_ops))


def detuning_profile(field_ops: Iterable[Operator], omegas: Sequence[float]) -> DetuningProfile:
    """Split natural frequencies into mean plus zero-sum detunings.

    The detuning scale is the mean absolute detuning; the signed mean is zero
    by construction and cannot serve as a scale.
    """
    ops = tuple(field_ops)
    w = np.asarray(omegas, dtype=float)
    if len(ops) != w.size:
        raise DimensionError("need one field operator per frequency")
    mean = float(w.mean())
    delta = w - mean
    delta -= delta.mean()
    return DetuningProfile(ops, tuple(float(x) for x in delta), mean, float(np.abs(delta).mean()))


def spin1_field_ops(n_sites: int) -> list[Operator]:
    space = spin1_space(n_sites)
    return [embed_local(SZ, j, space) for j in range(n_sites)]


def hubbard_field_ops(n_sites: int) -> list[Operator]:
    return [hubbard_local("Sz", j, n_sites) for j in range(n_sites)]


def detuned_omegas(delta: float, n_sites: int, center: float = 1.0) -> list[float]:
    """Evenly spaced natural frequencies spanning [center - delta, center + delta]."""
    if n_sites == 1:
        return [center]
    return list(center + delta * np.linspace(-1.0, 1.0, n_sites))


__all__ = [
    "SpinChainParams", "HubbardParams", "LindbladModel", "SteadyStateSpec", "DetuningProfile",
    "build_spin1_chain", "build_hubbard", "spin1_steady_state", "spin1_symmetry",
    "hubbard_spin_raising", "sm_extra_symmetry_B", "product_state", "random_product_state",
    "detuning_profile", "sector_counts", "local_observable", "commutator",
]
