"""Vectorised Lindblad generators and their spectra.

Vectorisation is column-stacking throughout: entry (r, c) of a d x d matrix
lands at index c*d + r, so that vec(A X B) = (B^T kron A) vec(X).

Lindblad generators built from block-structured models (conserved charges,
diagonal dephasing) decompose into independent blocks once the basis is
permuted. Dense work (eigensolves, exponentials) is done block by block; the
dimension cap applies to the largest block.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.optimize import linear_sum_assignment
from scipy.sparse.csgraph import connected_components

from ._config import DEFAULT_TOL, dense_cap
from .exceptions import DenseCapError, DimensionError, NumericalError, TrackingAmbiguityError
from .hilbert import Operator, SpaceDescriptor, commutator
from .models import (
    DetuningProfile,
    LindbladModel,
    SpinChainParams,
    build_spin1_chain,
    detuned_omegas,
    spin1_magnetizations,
    spin1_space,
    spin_flip_index,
)

log = logging.getLogger(__name__)

COLUMN_STACKING = "column-stacking"


def vectorize(rho: Operator | np.ndarray) -> np.ndarray:
    m = rho.dense() if isinstance(rho, Operator) else np.asarray(rho)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    return np.asarray(m, dtype=complex).reshape(-1, order="F")


def devectorize(v: np.ndarray, space: SpaceDescriptor) -> Operator:
    d = space.total_dim
    v = np.asarray(v, dtype=complex)
    if v.shape != (d * d,):
        raise DimensionError(f"vector of length {v.shape} cannot be a {d}x{d} matrix")
    return Operator(space, v.reshape(d, d, order="F"))


@dataclass(frozen=True, eq=False)
class Superoperator:
    space: SpaceDescriptor
    matrix: sp.csr_matrix = field(repr=False)
    convention: str = COLUMN_STACKING

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, rho: Operator) -> Operator:
        return devectorize(self.matrix @ vectorize(rho), self.space)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def blocks(self) -> list[np.ndarray]:
        """Index sets of the invariant blocks of the generator."""
        pattern = abs(self.matrix)
        pattern = (pattern + pattern.T).tocsr()
        pattern.eliminate_zeros()
        n, labels = connected_components(pattern, directed=False)
        order = np.argsort(labels, kind="stable")
        splits = np.flatnonzero(np.diff(labels[order])) + 1
        return np.split(order, splits)


def build_superoperator(model: LindbladModel) -> Superoperator:
    d = model.dim
    eye = sp.identity(d, dtype=complex, format="csr")
    h = model.hamiltonian.sparse()
    mat = -1j * (sp.kron(eye, h) - sp.kron(h.T, eye))
    for op, rate in model.jumps:
        if rate == 0.0:
            continue
        l = op.sparse()
        ldl = (l.conj().T @ l).tocsr()
        mat = mat + rate * (sp.kron(l.conj(), l) - 0.5 * sp.kron(eye, ldl) - 0.5 * sp.kron(ldl.T, eye))
    mat = sp.csr_matrix(mat)
    mat.eliminate_zeros()
    return Superoperator(model.space, mat)


def lindblad_rhs(model: LindbladModel, rho: Operator) -> Operator:
    """Direct (non-vectorised) evaluation of the master-equation right-hand side."""
    h = model.hamiltonian
    out = -1j * commutator(h, rho)
    for op, rate in model.jumps:
        ldl = op.dag() @ op
        out = out + rate * (op @ rho @ op.dag() - 0.5 * (ldl @ rho + rho @ ldl))
    return out


def _check_cap(blocks: Sequence[np.ndarray], cap: int | None) -> None:
    cap = dense_cap() if cap is None else cap
    biggest = max(len(b) for b in blocks)
    if biggest > cap:
        raise DenseCapError(f"largest generator block has dimension {biggest} > dense cap {cap}")


# --------------------------------------------------------------------------------------
# spectrum
# --------------------------------------------------------------------------------------

ZERO, IMAGINARY, DECAYING = "zero", "imaginary", "decaying"


@dataclass(eq=False)
class _Block:
    index: np.ndarray
    right: np.ndarray  # columns: normalised right eigenvectors restricted to the block
    left: np.ndarray  # rows: inverse of ``right``; left vector i is conj(left[i])


class SpectralDecomposition:
    """Eigenvalues of a Liouvillian with biorthogonal right/left eigen-operators.

    Modes are materialised lazily from per-block eigenvector matrices.
    """

    def __init__(self, space: SpaceDescriptor, eigenvalues, blocks, owner, classes, tol_zero):
        self.space = space
        self.eigenvalues = np.asarray(eigenvalues)
        self._blocks = blocks
        self._owner = owner  # (block id, column) per eigenvalue
        self.classes = np.asarray(classes)
        self.tol_zero = tol_zero

    def __len__(self) -> int:
        return self.eigenvalues.size

    def _vec(self, i: int, left: bool) -> np.ndarray:
        b, k = self._owner[i]
        blk = self._blocks[b]
        d2 = self.space.total_dim ** 2
        v = np.zeros(d2, dtype=complex)
        v[blk.index] = blk.left[k].conj() if left else blk.right[:, k]
        return v

    def right_mode(self, i: int) -> Operator:
        return devectorize(self._vec(i, False), self.space)

    def left_mode(self, i: int) -> Operator:
        return devectorize(self._vec(i, True), self.space)

    @property
    def right_modes(self) -> list[Operator]:
        return [self.right_mode(i) for i in range(len(self))]

    @property
    def left_modes(self) -> list[Operator]:
        return [self.left_mode(i) for i in range(len(self))]

    def indices(self, *classes: str) -> np.ndarray:
        return np.flatnonzero(np.isin(self.classes, classes))

    def count(self, cls: str) -> int:
        return int(np.sum(self.classes == cls))

    def imaginary_values(self) -> np.ndarray:
        return np.sort(self.eigenvalues[self.indices(IMAGINARY)].imag)

    def biorthogonality_residual(self, idx: Sequence[int] | None = None) -> float:
        idx = self.indices(ZERO, IMAGINARY) if idx is None else np.asarray(idx)
        r = np.array([self._vec(i, False) for i in idx]).T
        l = np.array([self._vec(i, True) for i in idx]).T
        gram = l.conj().T @ r
        return float(np.max(np.abs(gram - np.eye(len(idx))))) if len(idx) else 0.0

    def to_csv(self) -> str:
        lines = ["index,re_lambda,im_lambda,class"]
        for i, (lam, c) in enumerate(zip(self.eigenvalues, self.classes)):
            lines.append(f"{i},{lam.real!r},{lam.imag!r},{c}")
        return "\n".join(lines) + "\n"


def _fix_phase(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    mags = np.abs(v)
    lead = int(np.flatnonzero(mags >= mags.max() * (1 - 1e-9))[0])
    return v * (np.conj(v[lead]) / mags[lead])


def classify(eigenvalues: np.ndarray, tol_zero: float) -> np.ndarray:
    ev = np.asarray(eigenvalues)
    out = np.full(ev.shape, DECAYING, dtype=object)
    flat = np.abs(ev.real) < tol_zero
    out[flat & (np.abs(ev) >= tol_zero)] = IMAGINARY
    out[np.abs(ev) < tol_zero] = ZERO
    return out


def _block_eig(dense_block: np.ndarray, vectors: bool):
    try:
        if vectors:
            return la.eig(dense_block)
        return la.eigvals(dense_block), None
    except la.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc


def spectrum(
    superop: Superoperator,
    tol_zero: float | None = None,
    cap: int | None = None,
    vectors: bool = True,
) -> SpectralDecomposition:
    """Full eigendecomposition of the generator.

    ``tol_zero`` defaults to 1e-8 times the spectral radius.
    """
    blocks_idx = superop.blocks()
    _check_cap(blocks_idx, cap)
    mat = superop.matrix
    values, owner, blocks = [], [], []
    for b, idx in enumerate(blocks_idx):
        sub = mat[idx][:, idx].toarray()
        ev, vecs = _block_eig(sub, vectors)
        if vectors:
            vecs = np.column_stack([_fix_phase(vecs[:, k]) for k in range(vecs.shape[1])])
            try:
                inv = la.inv(vecs)
            except la.LinAlgError as exc:
                raise NumericalError("generator block is not diagonalisable") from exc
            blocks.append(_Block(idx, vecs, inv))
        values.append(ev)
        owner.extend((b, k) for k in range(ev.size))
    eigenvalues = np.concatenate(values)
    if tol_zero is None:
        tol_zero = DEFAULT_TOL.zero_eig_rel * max(1.0, float(np.max(np.abs(eigenvalues))))
    if np.max(eigenvalues.real) > 1e-8:
        raise NumericalError(f"eigenvalue with positive real part {np.max(eigenvalues.real):.3e}")
    return SpectralDecomposition(
        superop.space, eigenvalues, blocks, owner, classify(eigenvalues, tol_zero), tol_zero
    )


def eigenvalues(superop: Superoperator, cap: int | None = None) -> np.ndarray:
    blocks_idx = superop.blocks()
    _check_cap(blocks_idx, cap)
    mat = superop.matrix
    return np.concatenate([_block_eig(mat[idx][:, idx].toarray(), False)[0] for idx in blocks_idx])


def principal_angles(a: Sequence[Operator], b: Sequence[Operator]) -> np.ndarray:
    ma = np.column_stack([vectorize(x) for x in a])
    mb = np.column_stack([vectorize(x) for x in b])
    return la.subspace_angles(ma, mb)


def spin1_kernel_reference(n_sites: int) -> list[Operator]:
    """Analytic steady-state family: one sector projector per m plus the
    zero-magnetisation spin-flip coherence."""
    space = spin1_space(n_sites)
    d = space.total_dim
    mags = spin1_magnetizations(n_sites)
    out = []
    for m in range(-n_sites, n_sites + 1):
        rows = np.flatnonzero(mags == m)
        out.append(Operator(space, sp.csr_matrix((np.ones(rows.size), (rows, rows)), shape=(d, d))))
    zero = np.flatnonzero(mags == 0)
    flip = spin_flip_index(n_sites)[zero]
    out.append(Operator(space, sp.csr_matrix((np.ones(zero.size), (zero, flip)), shape=(d, d))))
    return out


def align_kernel(spec: SpectralDecomposition, references: Sequence[Operator]):
    """Re-express the numerical kernel in a physical reference basis.

    Returns the references projected onto the numerical kernel together with the
    principal angles between the two spans; the spans agree when all angles are
    small.
    """
    zero = spec.indices(ZERO)
    kernel = [spec.right_mode(i) for i in zero]
    angles = principal_angles(kernel, references)
    projected = []
    for ref in references:
        acc = Operator.zeros(spec.space).to_dense()
        for i in zero:
            coef = np.vdot(vectorize(spec.left_mode(i)), vectorize(ref))
            acc = acc + coef * spec.right_mode(i)
        projected.append(acc)
    return projected, angles


# --------------------------------------------------------------------------------------
# asymptotic projection
# --------------------------------------------------------------------------------------

@dataclass(eq=False)
class AsymptoticDecomposition:
    space: SpaceDescriptor
    coefficients: np.ndarray
    frequencies: np.ndarray
    modes: list[Operator]

    @property
    def terms(self) -> list[tuple[complex, float, Operator]]:
        return list(zip(self.coefficients, self.frequencies, self.modes))

    def state(self, t: float) -> Operator:
        acc = np.zeros((self.space.total_dim,) * 2, dtype=complex)
        for c, w, m in self.terms:
            acc += c * np.exp(1j * w * t) * m.dense()
        return Operator(self.space, acc)

    def expectation(self, x: Operator, times) -> np.ndarray:
        """Predicted Re Tr(rho_inf(t) X) on an array of times."""
        times = np.asarray(times, dtype=float)
        xd = x.dense()
        amps = np.array([c * np.sum(xd.T * m.dense()) for c, _, m in self.terms])
        phase = np.exp(1j * np.outer(times, self.frequencies))
        return (phase @ amps).real

    def captured_weight(self) -> float:
        """Frobenius norm of the projected initial state."""
        return self.state(0.0).frobenius_norm()


def asymptotic_projection(rho0: Operator, spec: SpectralDecomposition) -> AsymptoticDecomposition:
    idx = spec.indices(ZERO, IMAGINARY)
    if len(idx) == 0:
        raise NumericalError("no zero or imaginary modes in the spectrum")
    v0 = vectorize(rho0)
    coefs, freqs, modes = [], [], []
    for i in idx:
        left = spec._vec(i, True)
        coefs.append(np.vdot(left, v0))
        freqs.append(spec.eigenvalues[i].imag)
        modes.append(spec.right_mode(i))
    return AsymptoticDecomposition(spec.space, np.array(coefs), np.array(freqs), modes)


# --------------------------------------------------------------------------------------
# perturbation theory
# --------------------------------------------------------------------------------------

def first_order_shift(mode: Operator, profile: DetuningProfile) -> complex:
    """First-order eigenvalue shift Tr(mode^† L1(mode)) under a detuning profile.

    L1 = -i[sum_j (delta_j / mean_detuning) f_j, .]. With zero detuning scale
    the unscaled commutator form is returned.
    """
    nrm = mode.frobenius_norm()
    if abs(nrm - 1.0) > 1e-8:
        raise ValueError(f"mode must have unit Frobenius norm, got {nrm:.12g}")
    f = profile.field()
    if profile.mean_detuning != 0.0:
        f = f / profile.mean_detuning
    pert = -1j * commutator(f, mode)
    return complex(np.vdot(vectorize(mode), vectorize(pert)))


@dataclass
class ShiftScan:
    deltas: np.ndarray
    mode_ids: np.ndarray
    reference: np.ndarray  # eigenvalues at delta = 0
    tracked: np.ndarray  # (n_delta, n_modes)

    @property
    def displacements(self) -> np.ndarray:
        return np.abs(self.tracked - self.reference[None, :])

    def rows(self) -> list[tuple[float, int, float]]:
        disp = self.displacements
        return [
            (float(d), int(m), float(disp[i, k]))
            for i, d in enumerate(self.deltas)
            for k, m in enumerate(self.mode_ids)
        ]

    def exponents(self, lo: float = 0.0, hi: float = np.inf, floor: float = 1e-10) -> dict[int, float]:
        """Log-log least-squares slope of displacement versus delta per mode.

        Modes whose displacement stays below ``floor`` are omitted.
        """
        sel = (self.deltas > 0) & (self.deltas >= lo) & (self.deltas <= hi)
        out = {}
        for k, m in enumerate(self.mode_ids):
            y = self.displacements[sel, k]
            if np.all(y > floor) and sel.sum() >= 2:
                slope, _ = np.polyfit(np.log(self.deltas[sel]), np.log(y), 1)
                out[int(m)] = float(slope)
        return out

    def to_csv(self) -> str:
        lines = ["delta,mode_id,displacement,re_lambda,im_lambda"]
        disp = self.displacements
        for i, d in enumerate(self.deltas):
            for k, m in enumerate(self.mode_ids):
                lam = self.tracked[i, k]
                lines.append(f"{d!r},{m},{disp[i, k]!r},{lam.real!r},{lam.imag!r}")
        return "\n".join(lines) + "\n"


def _detuned_chain(base: SpinChainParams, delta: float) -> Superoperator:
    center = float(np.mean(base.omegas))
    params = SpinChainParams(
        base.n_sites,
        tuple(detuned_omegas(delta, base.n_sites, center)),
        base.hopping,
        base.anisotropy,
        base.dephasing_rate,
    )
    return build_superoperator(build_spin1_chain(params))


def _track_step(prev: np.ndarray, ev: np.ndarray):
    cost = np.abs(prev[:, None] - ev[None, :])
    rows, cols = linear_sum_assignment(cost)
    moved = cost[rows, cols]
    new = ev[cols]
    free = np.ones(ev.size, dtype=bool)
    free[cols] = False
    ambiguous = False
    if free.any():
        nearest_free = cost[:, free].min(axis=1)
        ambiguous = bool(np.any((moved > 1e-12) & (nearest_free < 2.0 * moved)))
    return new, ambiguous


def shift_scan(
    base: SpinChainParams,
    deltas: Sequence[float],
    max_refine: int = 8,
    cap: int | None = None,
) -> ShiftScan:
    """Track the zero and imaginary eigenvalues of the homogeneous chain as the
    natural frequencies spread to {w - delta, ..., w + delta}."""
    deltas = np.asarray(sorted(float(d) for d in deltas))
    if deltas.size == 0 or deltas[0] < 0:
        raise ValueError("deltas must be non-negative")
    ev0 = eigenvalues(_detuned_chain(base, 0.0), cap)
    tol = DEFAULT_TOL.zero_eig_rel * max(1.0, np.max(np.abs(ev0)))
    mode_ids = np.flatnonzero(np.abs(ev0.real) < tol)
    reference = ev0[mode_ids]

    def advance(prev, d_from, d_to, depth):
        ev = eigenvalues(_detuned_chain(base, d_to), cap)
        new, ambiguous = _track_step(prev, ev)
        if not ambiguous:
            return new
        if depth >= max_refine:
            raise TrackingAmbiguityError(
                f"cannot track eigenvalues between delta={d_from} and delta={d_to}"
            )
        mid = 0.5 * (d_from + d_to)
        log.debug("refining eigenvalue tracking at delta=%g", mid)
        prev_mid = advance(prev, d_from, mid, depth + 1)
        return advance(prev_mid, mid, d_to, depth + 1)

    tracked = []
    prev, d_prev = reference.copy(), 0.0
    for d in deltas:
        cur = prev if d == d_prev else advance(prev, d_prev, d, 0)
        tracked.append(cur)
        prev, d_prev = cur, d
    return ShiftScan(deltas, mode_ids, reference, np.array(tracked))
