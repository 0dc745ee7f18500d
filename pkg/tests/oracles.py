"""Independent reference implementations used to cross-check the package.

None of these import dynsync internals beyond plain matrices, so agreement with
them is a genuine second opinion.
"""

from __future__ import annotations

import numpy as np


def lindblad_rhs(h: np.ndarray, jumps, rho: np.ndarray) -> np.ndarray:
    """Master-equation right-hand side from dense matrices; ``jumps`` is [(L, rate)]."""
    out = -1j * (h @ rho - rho @ h)
    for l, rate in jumps:
        ld = l.conj().T
        out = out + rate * (l @ rho @ ld - 0.5 * (ld @ l @ rho + rho @ ld @ l))
    return out


def _rk4(f, y, dt):
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_step_doubling(f, y0: np.ndarray, t_total: float, tol: float = 1e-10) -> np.ndarray:
    """Adaptive RK4 with step doubling and Richardson extrapolation."""
    y = y0.copy()
    t = 0.0
    h = t_total / 16
    while t < t_total - 1e-15:
        h = min(h, t_total - t)
        big = _rk4(f, y, h)
        half = _rk4(f, _rk4(f, y, 0.5 * h), 0.5 * h)
        err = np.linalg.norm(half - big) / 15.0
        if err <= tol or h < 1e-8:
            y = half + (half - big) / 15.0
            t += h
            h *= min(2.0, 0.9 * (tol / max(err, 1e-300)) ** 0.2)
        else:
            h *= max(0.2, 0.9 * (tol / err) ** 0.2)
    return y


def partial_transpose(rho: np.ndarray, dims, site: int) -> np.ndarray:
    """Partial transpose by explicit index enumeration."""
    dims = list(dims)
    d = int(np.prod(dims))
    out = np.zeros_like(rho)
    for i in range(d):
        a = list(np.unravel_index(i, dims))
        for j in range(d):
            b = list(np.unravel_index(j, dims))
            a2, b2 = a.copy(), b.copy()
            a2[site], b2[site] = b[site], a[site]
            out[np.ravel_multi_index(a2, dims), np.ravel_multi_index(b2, dims)] = rho[i, j]
    return out


def windowed_pearson(f, g, dt: float, center: int, half: int) -> float:
    """Pearson coefficient with numpy's trapezoid rule on one window."""
    fs = np.asarray(f[center - half:center + half + 1], dtype=float)
    gs = np.asarray(g[center - half:center + half + 1], dtype=float)
    width = 2 * half * dt
    fm = np.trapezoid(fs, dx=dt) / width
    gm = np.trapezoid(gs, dx=dt) / width
    cov = np.trapezoid((fs - fm) * (gs - gm), dx=dt)
    vf = np.trapezoid((fs - fm) ** 2, dx=dt)
    vg = np.trapezoid((gs - gm) ** 2, dx=dt)
    return float(cov / np.sqrt(vf * vg))


def spin1_dyad_eigenvalue(a: int, b: int, omega: float, gamma: float) -> complex:
    """Generator eigenvalue of |a><b| for one spin-1 with H = w Sz, L = Sz^2."""
    return -1j * omega * (a - b) - 0.5 * gamma * (a * a - b * b) ** 2


def random_density_matrix(d: int, rng: np.random.Generator) -> np.ndarray:
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = x @ x.conj().T
    return rho / np.trace(rho)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(x)
    return q * (np.diag(r) / np.abs(np.diag(r)))
