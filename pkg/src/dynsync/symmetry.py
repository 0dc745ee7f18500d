"""Strong dynamical symmetries: verification, mode ladders, swap invariance, discovery."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from ._config import dense_cap
from .exceptions import DenseCapError, DimensionError
from .hilbert import Operator, SpaceDescriptor, commutator, swap_permutation
from .liouville import vectorize, devectorize
from .models import LindbladModel


@dataclass(frozen=True)
class SymmetryReport:
    frequency: float
    hamiltonian_residual: float
    jump_residuals: tuple[float, ...]
    passes: bool

    def to_json(self) -> str:
        return json.dumps(
            {
                "omega": self.frequency,
                "h_residual": self.hamiltonian_residual,
                "jump_residuals": list(self.jump_residuals),
                "passes": self.passes,
            }
        )


def verify_dynamical_symmetry(model: LindbladModel, a: Operator, tol: float = 1e-10) -> SymmetryReport:
    """Check [H, A] = w A and [L_j, A] = [L_j^†, A] = 0, estimating w by least squares.

    Residuals are Frobenius norms relative to ||A||_F.
    """
    norm = a.frobenius_norm()
    if norm == 0.0:
        raise ValueError("the zero operator is not a symmetry candidate")
    ad_h = commutator(model.hamiltonian, a)
    va = vectorize(a)
    omega = float((np.vdot(va, vectorize(ad_h)) / np.vdot(va, va)).real)
    h_res = (ad_h - omega * a).frobenius_norm() / norm
    jump_res = []
    for op, _ in model.jumps:
        jump_res.append(commutator(op, a).frobenius_norm() / norm)
        jump_res.append(commutator(op.dag(), a).frobenius_norm() / norm)
    passes = h_res < tol and all(r < tol for r in jump_res)
    return SymmetryReport(omega, float(h_res), tuple(float(r) for r in jump_res), bool(passes))


def ladder_modes(a: Operator, rho_ss: Operator, n_max: int, zero_tol: float = 1e-12):
    """Normalised A^n rho_ss (A^†)^m for 0 <= n, m <= n_max, numerically zero products dropped."""
    a_dag = a.dag()
    left = [Operator.identity(a.space)]
    for _ in range(n_max):
        left.append(left[-1] @ a)
    out = []
    for n in range(n_max + 1):
        lhs = left[n] @ rho_ss
        for m in range(n_max + 1):
            prod = lhs
            for _ in range(m):
                prod = prod @ a_dag
            nrm = prod.frobenius_norm()
            if nrm < zero_tol:
                continue
            out.append((n, m, prod / nrm))
    return out


def swap_invariance(op: Operator, space: SpaceDescriptor | None = None, tol: float = 1e-10) -> bool:
    """True when P op P = op for every adjacent site transposition P."""
    space = op.space if space is None else space
    if len(set(space.local_dims)) != 1:
        raise DimensionError("swap invariance needs identical local dimensions")
    m = op.dense()
    for j in range(space.n_sites - 1):
        perm = swap_permutation(space, j, j + 1)
        if np.linalg.norm(m[np.ix_(perm, perm)] - m) > tol:
            return False
    return True


def _commutator_superop(op: Operator) -> sp.csr_matrix:
    d = op.dim
    eye = sp.identity(d, dtype=complex, format="csr")
    x = op.sparse()
    return (sp.kron(eye, x) - sp.kron(x.T, eye)).tocsr()


def _null_space(mat: np.ndarray, rtol: float) -> np.ndarray:
    if mat.shape[0] == 0:
        return np.eye(mat.shape[1], dtype=complex)
    _, s, vh = la.svd(mat, full_matrices=True)
    if s.size == 0:
        return np.eye(mat.shape[1], dtype=complex)
    thresh = rtol * max(s[0], 1.0)
    rank = int(np.sum(s > thresh))
    return vh[rank:].conj().T


def commutant(model: LindbladModel, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (columns, vectorised) of operators commuting with all L_j, L_j^†."""
    d2 = model.dim ** 2
    if d2 > dense_cap():
        raise DenseCapError(f"operator space of dimension {d2} exceeds dense cap {dense_cap()}")
    rows = []
    for op, _ in model.jumps:
        rows.append(_commutator_superop(op))
        if not op.is_hermitian():
            rows.append(_commutator_superop(op.dag()))
    if not rows:
        return np.eye(d2, dtype=complex)
    stacked = sp.vstack(rows).toarray()
    # the Gram matrix shares the null space and keeps the SVD square
    return _null_space(stacked.conj().T @ stacked, tol)


def discover_symmetries(model: LindbladModel, tol: float = 1e-10) -> list[tuple[float, Operator]]:
    """Find strong dynamical symmetries from scratch.

    Restricts [H, .] to its largest invariant subspace inside the commutant of the
    jump operators, diagonalises it there and keeps eigenoperators with nonzero
    frequency that pass :func:`verify_dynamical_symmetry`.
    """
    basis = commutant(model, tol)
    if basis.shape[1] == 0:
        return []
    ad_h = _commutator_superop(model.hamiltonian).toarray()
    for _ in range(basis.shape[1] + 1):
        image = ad_h @ basis
        leak = image - basis @ (basis.conj().T @ image)
        keep = _null_space(leak, 1e-9)
        if keep.shape[1] == basis.shape[1]:
            break
        if keep.shape[1] == 0:
            return []
        basis, _ = la.qr(basis @ keep, mode="economic")
    restricted = basis.conj().T @ ad_h @ basis
    restricted = 0.5 * (restricted + restricted.conj().T)
    freqs, vecs = la.eigh(restricted)
    scale = max(1.0, float(np.max(np.abs(freqs)))) if freqs.size else 1.0
    out = []
    for w, y in zip(freqs, vecs.T):
        if abs(w) < 1e-8 * scale:
            continue
        cand = devectorize(basis @ y, model.space)
        report = verify_dynamical_symmetry(model, cand, tol=1e-8 * scale)
        if report.passes:
            out.append((report.frequency, cand))
    out.sort(key=lambda item: item[0])
    return out


def swap_invariant_span(ops: list[Operator], tol: float = 1e-9) -> list[Operator]:
    """Basis of the subspace of span(ops) that is invariant under adjacent site swaps."""
    if not ops:
        return []
    space = ops[0].space
    mat = np.column_stack([vectorize(o) for o in ops])
    q, r = la.qr(mat, mode="economic")
    q = q[:, np.abs(np.diag(r)) > tol]
    constraints = []
    d = space.total_dim
    for j in range(space.n_sites - 1):
        perm = swap_permutation(space, j, j + 1)
        moved = []
        for col in q.T:
            m = col.reshape(d, d, order="F")
            moved.append((m[np.ix_(perm, perm)] - m).reshape(-1, order="F"))
        constraints.append(np.column_stack(moved))
    coeffs = _null_space(np.vstack(constraints), tol)
    return [devectorize(q @ c, space) for c in coeffs.T]
