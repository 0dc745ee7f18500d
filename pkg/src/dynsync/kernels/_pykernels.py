"""Pure-Python/NumPy reference implementations of the hot loops.

The compiled module ``_ckernels`` mirrors these signatures exactly and must
produce the same results up to floating-point reassociation.
"""

from __future__ import annotations

import numpy as np

# status codes shared with the compiled kernels
OK = 0
OUT_OF_RANDOMS = 1
NO_JUMP_CHANNEL = 2
NORM_UNDERFLOW = 3

_MAX_BISECT = 200


def run_trajectory(evals, vecs, vecs_inv, jumps, observables, times, psi0, uniforms, tol):
    """Waiting-time (norm-decay) unravelling of one trajectory.

    ``evals``/``vecs``/``vecs_inv`` diagonalise the effective Hamiltonian, so the
    no-jump propagator for any duration s is ``vecs @ diag(exp(-i evals s)) @ vecs_inv``.
    ``jumps`` already include the square-root rates.

    Returns ``(values, n_used, n_jumps, status)`` where ``values[k, o]`` is the
    normalised expectation of observable ``o`` at ``times[k]``.
    """
    n_t = times.shape[0]
    n_obs = observables.shape[0]
    n_jumps_ch = jumps.shape[0]
    values = np.zeros((n_t, n_obs))
    n_u = uniforms.shape[0]

    def record(k, psi, n2):
        for o in range(n_obs):
            values[k, o] = np.vdot(psi, observables[o] @ psi).real / n2

    psi = psi0.astype(complex)
    n2 = float(np.vdot(psi, psi).real)
    record(0, psi, n2)
    c = vecs_inv @ psi
    t_cur = float(times[0])
    if n_u < 1:
        return values, 0, 0, OUT_OF_RANDOMS
    used = 1
    thresh = float(uniforms[0])
    n_jumps = 0

    for k in range(1, n_t):
        target = float(times[k])
        while True:
            c_t = np.exp(-1j * evals * (target - t_cur)) * c
            psi = vecs @ c_t
            n2 = float(np.vdot(psi, psi).real)
            if n2 > thresh:
                c = c_t
                t_cur = target
                break
            # bisection for the time at which the squared norm crosses thresh
            lo, hi = t_cur, target
            n2_hi = n2
            for _ in range(_MAX_BISECT):
                if abs(n2_hi - thresh) <= tol * thresh:
                    break
                mid = 0.5 * (lo + hi)
                if mid == lo or mid == hi:
                    break
                psi_mid = vecs @ (np.exp(-1j * evals * (mid - t_cur)) * c)
                n2_mid = float(np.vdot(psi_mid, psi_mid).real)
                if n2_mid > thresh:
                    lo = mid
                else:
                    hi, n2_hi = mid, n2_mid
            t_jump = hi
            psi_j = vecs @ (np.exp(-1j * evals * (t_jump - t_cur)) * c)
            weights = np.empty(n_jumps_ch)
            outs = []
            for j in range(n_jumps_ch):
                out = jumps[j] @ psi_j
                outs.append(out)
                weights[j] = np.vdot(out, out).real
            total = weights.sum()
            if total <= 0.0:
                return values, used, n_jumps, NO_JUMP_CHANNEL
            if used + 2 > n_u:
                return values, used, n_jumps, OUT_OF_RANDOMS
            pick = uniforms[used] * total
            used += 1
            acc = 0.0
            chan = n_jumps_ch - 1
            for j in range(n_jumps_ch):
                acc += weights[j]
                if pick < acc:
                    chan = j
                    break
            new = outs[chan] / np.sqrt(weights[chan])
            c = vecs_inv @ new
            t_cur = t_jump
            thresh = float(uniforms[used])
            used += 1
            n_jumps += 1
            if thresh < 1e-300:
                return values, used, n_jumps, NORM_UNDERFLOW
        record(k, psi, n2)
    return values, used, n_jumps, OK


def rolling_pearson(f, g, dt, half_width_steps, rel_var_floor):
    """Trapezoidal Pearson coefficient on windows centred at each sample.

    Near the ends the window shrinks symmetrically. Windows with fewer than one
    step on either side, or with (numerically) zero variance, give NaN.
    """
    n = f.shape[0]
    out = np.full(n, np.nan)
    for i in range(n):
        m = min(half_width_steps, i, n - 1 - i)
        if m < 1:
            continue
        fs = f[i - m:i + m + 1]
        gs = g[i - m:i + m + 1]
        w = np.full(2 * m + 1, dt)
        w[0] = w[-1] = 0.5 * dt
        width = 2 * m * dt
        fm = np.dot(w, fs) / width
        gm = np.dot(w, gs) / width
        df = fs - fm
        dg = gs - gm
        vf = np.dot(w, df * df)
        vg = np.dot(w, dg * dg)
        if vf <= rel_var_floor * np.dot(w, fs * fs) or vg <= rel_var_floor * np.dot(w, gs * gs):
            continue
        r = np.dot(w, df * dg) / np.sqrt(vf * vg)
        out[i] = min(1.0, max(-1.0, r))
    return out
