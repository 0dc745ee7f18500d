"""Composite Hilbert spaces and the operator algebra used throughout the package.

Basis states are ordered lexicographically over site-major tensor indices, so
``kron(a, b)`` places site 0 in the most significant position. For spin-1 sites
the local order is (up, 0, down), which puts |up up ...> first and
|down down ...> last.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence, Union

import numpy as np
import scipy.sparse as sp

from ._config import DEFAULT_TOL
from .exceptions import DimensionError

ArrayLike = Union[np.ndarray, sp.spmatrix]


@dataclass(frozen=True)
class SpaceDescriptor:
    local_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.local_dims)
        if len(dims) == 0:
            raise DimensionError("a space needs at least one site")
        if any(d < 2 for d in dims):
            raise DimensionError(f"local dimensions must be >= 2, got {dims}")
        object.__setattr__(self, "local_dims", dims)

    @classmethod
    def uniform(cls, n_sites: int, local_dim: int) -> "SpaceDescriptor":
        return cls((local_dim,) * n_sites)

    @property
    def n_sites(self) -> int:
        return len(self.local_dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.local_dims))

    def check_site(self, site: int) -> int:
        if not 0 <= site < self.n_sites:
            raise DimensionError(f"site {site} out of range for {self.n_sites} sites")
        return site

    def __add__(self, other: "SpaceDescriptor") -> "SpaceDescriptor":
        return SpaceDescriptor(self.local_dims + other.local_dims)


def _is_sparse(x) -> bool:
    return sp.issparse(x)


@dataclass(frozen=True, eq=False)
class Operator:
    """A (dense or sparse) complex matrix acting on ``space``.

    Arithmetic keeps sparse storage when both operands are sparse. Values are
    treated as immutable; methods always return new operators.
    """

    space: SpaceDescriptor
    data: ArrayLike = field(repr=False)

    def __post_init__(self):
        data = self.data
        if _is_sparse(data):
            data = sp.csr_matrix(data, dtype=complex)
        else:
            data = np.asarray(data, dtype=complex)
        d = self.space.total_dim
        if data.shape != (d, d):
            raise DimensionError(f"operator shape {data.shape} does not match dimension {d}")
        object.__setattr__(self, "data", data)

    # -- constructors -----------------------------------------------------------------
    @classmethod
    def identity(cls, space: SpaceDescriptor, sparse: bool = True) -> "Operator":
        d = space.total_dim
        return cls(space, sp.identity(d, dtype=complex, format="csr") if sparse else np.eye(d, dtype=complex))

    @classmethod
    def zeros(cls, space: SpaceDescriptor) -> "Operator":
        d = space.total_dim
        return cls(space, sp.csr_matrix((d, d), dtype=complex))

    @classmethod
    def projector(cls, psi: "StateVector") -> "Operator":
        v = psi.amplitudes
        return cls(psi.space, np.outer(v, v.conj()))

    # -- views --------------------------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.space.total_dim

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def is_sparse(self) -> bool:
        return _is_sparse(self.data)

    def dense(self) -> np.ndarray:
        return self.data.toarray() if self.is_sparse else self.data

    def sparse(self) -> sp.csr_matrix:
        return self.data if self.is_sparse else sp.csr_matrix(self.data)

    def to_dense(self) -> "Operator":
        return self if not self.is_sparse else Operator(self.space, self.dense())

    # -- algebra ------------------------------------------------------------------------
    def dag(self) -> "Operator":
        return Operator(self.space, self.data.conj().T)

    def trace(self) -> complex:
        return complex(self.data.diagonal().sum())

    def frobenius_norm(self) -> float:
        if self.is_sparse:
            return float(np.sqrt(np.sum(np.abs(self.data.data) ** 2)))
        return float(np.linalg.norm(self.data))

    def is_hermitian(self, tol: float = DEFAULT_TOL.hermitian) -> bool:
        return (self - self.dag()).frobenius_norm() <= tol

    def expect(self, psi: "StateVector") -> complex:
        v = psi.amplitudes
        return complex(np.vdot(v, self.data @ v))

    def _coerce(self, other) -> ArrayLike:
        if isinstance(other, Operator):
            if other.space.total_dim != self.space.total_dim:
                raise DimensionError("operators act on different spaces")
            return other.data
        return other

    def __add__(self, other):
        return Operator(self.space, self.data + self._coerce(other))

    def __radd__(self, other):
        if isinstance(other, (int, float)) and other == 0:
            return self  # lets builtin sum() work
        return NotImplemented

    def __sub__(self, other):
        return Operator(self.space, self.data - self._coerce(other))

    def __neg__(self):
        return Operator(self.space, -self.data)

    def __mul__(self, scalar):
        if isinstance(scalar, Operator):
            return NotImplemented
        return Operator(self.space, self.data * complex(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return Operator(self.space, self.data / complex(scalar))

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            return StateVector(other.space, self.data @ other.amplitudes, normalize=False)
        return Operator(self.space, self.data @ self._coerce(other))

    def __pow__(self, n: int):
        out = Operator.identity(self.space, sparse=self.is_sparse)
        for _ in range(int(n)):
            out = out @ self
        return out

    # -- serialization ------------------------------------------------------------------
    def to_json(self) -> str:
        """Debug dump ``{dims, triplets: [(row, col, re, im), ...]}``."""
        coo = self.sparse().tocoo()
        trip = [
            [int(r), int(c), float(v.real), float(v.imag)]
            for r, c, v in zip(coo.row, coo.col, coo.data)
            if v != 0
        ]
        trip.sort()
        return json.dumps({"dims": list(self.space.local_dims), "triplets": trip})

    @classmethod
    def from_json(cls, text: str) -> "Operator":
        obj = json.loads(text)
        space = SpaceDescriptor(tuple(obj["dims"]))
        d = space.total_dim
        trip = obj["triplets"]
        if trip:
            rows, cols, re, im = (np.array(x) for x in zip(*trip))
            data = sp.csr_matrix((re + 1j * im, (rows.astype(int), cols.astype(int))), shape=(d, d))
        else:
            data = sp.csr_matrix((d, d), dtype=complex)
        return cls(space, data)


class StateVector:
    """Normalized pure state on a composite space."""

    __slots__ = ("space", "amplitudes")

    def __init__(self, space: SpaceDescriptor, amplitudes, normalize: bool = True):
        amps = np.array(amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != space.total_dim:
            raise DimensionError(f"state length {amps.shape[0]} != {space.total_dim}")
        if normalize:
            nrm = np.linalg.norm(amps)
            if nrm == 0:
                raise ValueError("cannot normalize the zero vector")
            amps = amps / nrm
        self.space = space
        self.amplitudes = amps

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def density_matrix(self) -> Operator:
        return Operator.projector(self)

    def __repr__(self):
        return f"StateVector(dims={self.space.local_dims})"


def _data(x) -> ArrayLike:
    return x.data if isinstance(x, Operator) else x


def kron(a: Operator, b: Operator) -> Operator:
    if a.is_sparse or b.is_sparse:
        data = sp.kron(a.sparse(), b.sparse(), format="csr")
    else:
        data = np.kron(a.data, b.data)
    return Operator(a.space + b.space, data)


def kron_all(ops: Sequence[Operator]) -> Operator:
    return reduce(kron, ops)


def embed_local(op_local: Operator | np.ndarray, site: int, space: SpaceDescriptor) -> Operator:
    """Place a single-site operator on ``site``, identity elsewhere."""
    space.check_site(site)
    local = sp.csr_matrix(_data(op_local), dtype=complex)
    if local.shape != (space.local_dims[site],) * 2:
        raise DimensionError(
            f"local operator of shape {local.shape} does not fit site {site} "
            f"(dim {space.local_dims[site]})"
        )
    left = int(np.prod(space.local_dims[:site], dtype=int))
    right = int(np.prod(space.local_dims[site + 1:], dtype=int))
    data = sp.kron(sp.identity(left, dtype=complex, format="csr"), local, format="csr")
    data = sp.kron(data, sp.identity(right, dtype=complex, format="csr"), format="csr")
    return Operator(space, data)


def commutator(a: Operator, b: Operator) -> Operator:
    return a @ b - b @ a


def anticommutator(a: Operator, b: Operator) -> Operator:
    return a @ b + b @ a


def partial_transpose(rho: Operator, site: int) -> Operator:
    """Transpose the tensor factor belonging to ``site``."""
    space = rho.space
    space.check_site(site)
    n = space.n_sites
    dims = space.local_dims
    t = rho.dense().reshape(dims + dims)
    axes = list(range(2 * n))
    axes[site], axes[n + site] = axes[n + site], axes[site]
    out = t.transpose(axes).reshape(rho.shape)
    return Operator(space, out)


def trace_norm(a: Operator | np.ndarray, herm_tol: float = DEFAULT_TOL.hermitian) -> float:
    """Sum of singular values. Hermitian inputs use the cheaper eigensolve."""
    m = a.dense() if isinstance(a, Operator) else np.asarray(a, dtype=complex)
    if np.linalg.norm(m - m.conj().T) <= herm_tol:
        herm = 0.5 * (m + m.conj().T)
        return float(np.sum(np.abs(np.linalg.eigvalsh(herm))))
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def swap_permutation(space: SpaceDescriptor, j: int, l: int) -> np.ndarray:
    """Index permutation of the basis that exchanges sites ``j`` and ``l``."""
    if space.local_dims[j] != space.local_dims[l]:
        raise DimensionError("can only swap sites of equal dimension")
    idx = np.arange(space.total_dim).reshape(space.local_dims)
    return np.swapaxes(idx, j, l).reshape(-1)
