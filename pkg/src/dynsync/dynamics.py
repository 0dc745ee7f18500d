"""Time evolution: dense propagation of density matrices and quantum trajectories."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.linalg as la

from . import kernels
from ._config import DEFAULT_TOL, dense_cap
from .exceptions import ConfigError, DenseCapError, NumericalError
from .hilbert import Operator, StateVector
from .liouville import build_superoperator, vectorize
from .models import LindbladModel

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    t_end: float
    n_steps: int

    def __post_init__(self):
        if self.n_steps < 1:
            raise ConfigError("n_steps must be positive")
        if not self.t_end > self.t_start:
            raise ConfigError("t_end must exceed t_start")

    @classmethod
    def from_dt(cls, t_start: float, t_end: float, dt: float) -> "TimeGrid":
        return cls(t_start, t_end, int(round((t_end - t_start) / dt)))

    @property
    def dt(self) -> float:
        return (self.t_end - self.t_start) / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.n_steps + 1)


@dataclass
class TimeSeries:
    grid: TimeGrid
    labels: list[str]
    values: np.ndarray
    stderr: np.ndarray | None = None

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def column(self, label: str) -> np.ndarray:
        return self.values[:, self.labels.index(label)]

    def stderr_column(self, label: str) -> np.ndarray:
        if self.stderr is None:
            raise ValueError("series has no standard errors (deterministic origin)")
        return self.stderr[:, self.labels.index(label)]

    def to_csv(self) -> str:
        head = ["t"]
        for lab in self.labels:
            head.append(lab)
            if self.stderr is not None:
                head.append(f"{lab}_stderr")
        lines = [",".join(head)]
        for k, t in enumerate(self.times):
            row = [repr(float(t))]
            for o in range(len(self.labels)):
                row.append(repr(float(self.values[k, o])))
                if self.stderr is not None:
                    row.append(repr(float(self.stderr[k, o])))
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class TrajectoryConfig:
    n_traj: int = 1000
    seed: int = 0
    jump_bisection_tol: float = 1e-10

    def __post_init__(self):
        if self.n_traj < 1:
            raise ConfigError("n_traj must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")


def _labelled(observables) -> tuple[list[str], list[Operator]]:
    if observables is None:
        return [], []
    if isinstance(observables, Mapping):
        return list(observables.keys()), list(observables.values())
    obs = list(observables)
    return [f"obs{i}" for i in range(len(obs))], obs


def expectation(rho: Operator, x: Operator) -> complex:
    if rho.shape != x.shape:
        raise ValueError("shape mismatch between state and observable")
    return complex(np.sum(rho.dense() * x.dense().T))


def reduced_correlator(rho: Operator, x_j: Operator, x_l: Operator) -> float:
    """<x_j x_l> - <x_j><x_l>."""
    val = expectation(rho, x_j @ x_l) - expectation(rho, x_j) * expectation(rho, x_l)
    return float(val.real)


def check_state(rho: Operator, tol=DEFAULT_TOL, where: str = "") -> None:
    m = rho.dense()
    tr = np.trace(m)
    if abs(tr - 1.0) > tol.trace:
        raise NumericalError(f"trace deviates from 1 by {abs(tr - 1):.3e} {where}")
    herm = np.linalg.norm(m - m.conj().T)
    if herm > tol.atol:
        raise NumericalError(f"state is not Hermitian (residual {herm:.3e}) {where}")
    lo = np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0]
    if lo < tol.positivity:
        raise NumericalError(f"state has negative eigenvalue {lo:.3e} {where}")


class DensePropagator:
    """exp(L dt) applied block by block to a vectorised density matrix.

    Only blocks on which the initial state has support are exponentiated.
    """

    def __init__(self, model: LindbladModel, dt: float, support: np.ndarray | None = None,
                 cap: int | None = None):
        self.space = model.space
        self.superop = build_superoperator(model)
        cap = dense_cap() if cap is None else cap
        mat = self.superop.matrix
        self.blocks = []
        for idx in self.superop.blocks():
            if support is not None and not np.any(support[idx]):
                continue
            if len(idx) > cap:
                raise DenseCapError(f"generator block of dimension {len(idx)} exceeds dense cap {cap}")
            self.blocks.append((idx, la.expm(mat[idx][:, idx].toarray() * dt)))

    def step(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros_like(v)
        for idx, prop in self.blocks:
            out[idx] = prop @ v[idx]
        return out


def evolve_dense(
    model: LindbladModel,
    rho0: Operator,
    grid: TimeGrid,
    observables=None,
    witnesses: Mapping[str, Callable[[Operator], float]] | None = None,
    return_final: bool = False,
    check_invariants: bool = True,
    cap: int | None = None,
):
    """Propagate rho0 on a uniform grid with a single precomputed propagator.

    Records Re Tr(rho X) for every observable plus any scalar ``witnesses``
    (functions of the full state). With ``check_invariants`` the trace,
    Hermiticity and positivity are verified at every recorded time.
    """
    labels, ops = _labelled(observables)
    witnesses = dict(witnesses or {})
    if check_invariants:
        check_state(rho0, where="in the initial state")
    v = vectorize(rho0)
    prop = DensePropagator(model, grid.dt, support=np.abs(v) > 0, cap=cap)
    obs_rows = np.array([vectorize(x.dense().T) for x in ops]) if ops else np.zeros((0, v.size))
    n_cols = len(labels) + len(witnesses)
    values = np.zeros((grid.n_steps + 1, n_cols))
    need_state = check_invariants or bool(witnesses)
    d = model.dim
    times = grid.times
    for k in range(grid.n_steps + 1):
        if k:
            v = prop.step(v)
        if ops:
            values[k, : len(ops)] = (obs_rows @ v).real
        if need_state:
            rho = Operator(model.space, v.reshape(d, d, order="F"))
            if check_invariants:
                check_state(rho, where=f"at t={times[k]:g}")
            for w, fn in enumerate(witnesses.values()):
                values[k, len(ops) + w] = fn(rho)
    series = TimeSeries(grid, labels + list(witnesses), values)
    if return_final:
        return series, Operator(model.space, v.reshape(d, d, order="F"))
    return series


# --------------------------------------------------------------------------------------
# trajectories
# --------------------------------------------------------------------------------------

def _effective_hamiltonian(model: LindbladModel):
    h_eff = model.hamiltonian.dense().copy()
    dissipative = False
    for op, rate in model.jumps:
        if rate > 0:
            dissipative = True
            l = op.dense()
            h_eff = h_eff - 0.5j * rate * (l.conj().T @ l)
    if not dissipative:
        evals, vecs = la.eigh(h_eff)
        return evals.astype(complex), vecs.astype(complex), vecs.conj().T.astype(complex)
    evals, vecs = la.eig(h_eff)
    vecs_inv = la.inv(vecs)
    recon = vecs @ np.diag(evals) @ vecs_inv
    err = np.linalg.norm(recon - h_eff) / max(1.0, np.linalg.norm(h_eff))
    if err > 1e-9:
        raise NumericalError(f"effective Hamiltonian is badly conditioned (reconstruction error {err:.2e})")
    return evals, np.ascontiguousarray(vecs), np.ascontiguousarray(vecs_inv)


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based per-trajectory stream, independent of scheduling order."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


class _Ensemble:
    """Mergeable running mean and sum of squared deviations (Chan et al. update).

    Unlike raw sums of squares this keeps the variance of identical samples at
    exactly zero.
    """

    def __init__(self, n_t: int, n_obs: int):
        self.n = 0
        self.mean = np.zeros((n_t, n_obs))
        self.m2 = np.zeros((n_t, n_obs))
        self.jumps = 0

    def add(self, values: np.ndarray, n_jumps: int) -> None:
        self.n += 1
        delta = values - self.mean
        self.mean += delta / self.n
        self.m2 += delta * (values - self.mean)
        self.jumps += n_jumps

    def merge(self, other: "_Ensemble") -> None:
        if other.n == 0:
            return
        n = self.n + other.n
        delta = other.mean - self.mean
        self.mean = self.mean + delta * (other.n / n)
        self.m2 = self.m2 + other.m2 + delta * delta * (self.n * other.n / n)
        self.n = n
        self.jumps += other.jumps


def evolve_trajectories(
    model: LindbladModel,
    psi0: StateVector,
    grid: TimeGrid,
    observables,
    cfg: TrajectoryConfig,
    threads: int = 1,
    backend: str | None = None,
) -> TimeSeries:
    """Monte Carlo wave-function unravelling; returns ensemble means and standard errors."""
    if abs(psi0.norm() - 1.0) > 1e-12:
        raise ConfigError("initial state must be normalised")
    labels, ops = _labelled(observables)
    evals, vecs, vecs_inv = _effective_hamiltonian(model)
    jumps = np.array(
        [np.sqrt(rate) * op.dense() for op, rate in model.jumps if rate > 0], dtype=complex
    ).reshape(-1, model.dim, model.dim)
    obs = np.array([x.dense() for x in ops], dtype=complex).reshape(-1, model.dim, model.dim)
    times = np.ascontiguousarray(grid.times, dtype=float)
    psi = np.ascontiguousarray(psi0.amplitudes, dtype=complex)
    # upper bound on the jump rate sets the initial random-number budget
    rate_bound = sum(np.linalg.norm(j, 2) ** 2 for j in jumps)
    budget = int(2 * rate_bound * (times[-1] - times[0])) + 16
    kern = kernels.get_backend(backend)

    def one(index: int):
        rng = trajectory_rng(cfg.seed, index)
        n_u = budget
        while True:
            uniforms = 1.0 - rng.random(n_u)  # in (0, 1]
            values, _, n_jumps, status = kern.run_trajectory(
                evals, vecs, vecs_inv, jumps, obs, times, psi, uniforms, cfg.jump_bisection_tol
            )
            if status == kernels.OK:
                return values, n_jumps
            if status == kernels.OUT_OF_RANDOMS:
                rng = trajectory_rng(cfg.seed, index)  # replay the same stream, longer
                n_u *= 2
                continue
            if status == kernels.NORM_UNDERFLOW:
                raise NumericalError(f"norm underflow in trajectory {index}")
            raise NumericalError(f"no jump channel available in trajectory {index}")

    def chunk(indices) -> _Ensemble:
        acc = _Ensemble(times.size, len(ops))
        for i in indices:
            acc.add(*one(i))
        return acc

    n_workers = max(1, min(int(threads), cfg.n_traj))
    splits = np.array_split(np.arange(cfg.n_traj), n_workers)
    if n_workers == 1:
        parts = [chunk(splits[0])]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(chunk, splits))
    total = _Ensemble(times.size, len(ops))
    for part in parts:  # fixed merge order keeps the reduction deterministic
        total.merge(part)
    n = total.n
    mean = total.mean
    stderr = np.sqrt(total.m2 / (n - 1) / n) if n > 1 else np.zeros_like(mean)
    log.debug("trajectories: %d runs, %d jumps", n, total.jumps)
    return TimeSeries(grid, labels, mean, stderr)


def evolve_unitary_reference(model: LindbladModel, psi0: StateVector, grid: TimeGrid, observables):
    """Exact Schrodinger evolution (ignores jump operators), for closed-system checks."""
    labels, ops = _labelled(observables)
    e, u = la.eigh(model.hamiltonian.dense())
    c0 = u.conj().T @ psi0.amplitudes
    values = np.zeros((grid.n_steps + 1, len(ops)))
    for k, t in enumerate(grid.times):
        psi = u @ (np.exp(-1j * e * (t - grid.t_start)) * c0)
        for o, x in enumerate(ops):
            values[k, o] = np.vdot(psi, x.dense() @ psi).real
    return TimeSeries(grid, labels, values)
