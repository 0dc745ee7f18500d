# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops in ``_pykernels``; same signatures."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, cos, sin, sqrt, fabs

cnp.import_array()

cdef enum:
    OK = 0
    OUT_OF_RANDOMS = 1
    NO_JUMP_CHANNEL = 2
    NORM_UNDERFLOW = 3
    MAX_BISECT = 200


cdef inline double complex _cexp_minus_i(double complex lam, double s) nogil:
    # exp(-i * lam * s) for lam = a + ib is exp(b s) * (cos(a s) - i sin(a s))
    cdef double mag = exp(lam.imag * s)
    cdef double ph = lam.real * s
    return mag * cos(ph) - 1j * mag * sin(ph)


cdef double _propagate(const double complex[:] evals, const double complex[:, :] vecs,
                       const double complex[:] c, double s,
                       double complex[:] work, double complex[:] out) nogil:
    """out = vecs @ (exp(-i evals s) * c); returns ||out||^2."""
    cdef Py_ssize_t d = evals.shape[0]
    cdef Py_ssize_t a, b
    cdef double complex acc
    cdef double n2 = 0.0
    for b in range(d):
        work[b] = _cexp_minus_i(evals[b], s) * c[b]
    for a in range(d):
        acc = 0.0
        for b in range(d):
            acc = acc + vecs[a, b] * work[b]
        out[a] = acc
        n2 += acc.real * acc.real + acc.imag * acc.imag
    return n2


cdef void _matvec(const double complex[:, :] m, const double complex[:] x,
                  double complex[:] out) nogil:
    cdef Py_ssize_t d = x.shape[0]
    cdef Py_ssize_t a, b
    cdef double complex acc
    for a in range(d):
        acc = 0.0
        for b in range(d):
            acc = acc + m[a, b] * x[b]
        out[a] = acc


cdef double _expect(const double complex[:, :] op, const double complex[:] psi,
                    double complex[:] tmp) nogil:
    cdef Py_ssize_t d = psi.shape[0]
    cdef Py_ssize_t a
    cdef double acc = 0.0
    _matvec(op, psi, tmp)
    for a in range(d):
        acc += (psi[a].conjugate() * tmp[a]).real
    return acc


def run_trajectory(double complex[:] evals, double complex[:, :] vecs,
                   double complex[:, :] vecs_inv, double complex[:, :, :] jumps,
                   double complex[:, :, :] observables, double[:] times,
                   double complex[:] psi0, double[:] uniforms, double tol):
    cdef Py_ssize_t d = evals.shape[0]
    cdef Py_ssize_t n_t = times.shape[0]
    cdef Py_ssize_t n_obs = observables.shape[0]
    cdef Py_ssize_t n_ch = jumps.shape[0]
    cdef Py_ssize_t n_u = uniforms.shape[0]
    values_arr = np.zeros((n_t, n_obs))
    cdef double[:, :] values = values_arr
    c_arr = np.empty(d, dtype=complex)
    cdef double complex[:] c = c_arr
    cdef double complex[:] psi = np.array(psi0, dtype=complex)
    cdef double complex[:] work = np.empty(d, dtype=complex)
    cdef double complex[:] tmp = np.empty(d, dtype=complex)
    cdef double complex[:] c_t = np.empty(d, dtype=complex)
    cdef double complex[:, :] outs = np.empty((n_ch, d), dtype=complex)
    cdef double[:] weights = np.empty(n_ch)
    cdef Py_ssize_t k, o, j, a, it, chan
    cdef Py_ssize_t used = 0
    cdef Py_ssize_t n_jumps = 0
    cdef int status = OK
    cdef double t_cur, target, n2, thresh, lo, hi, mid, n2_hi, n2_mid, t_jump
    cdef double total, pick, acc, nrm

    with nogil:
        n2 = 0.0
        for a in range(d):
            n2 += psi[a].real * psi[a].real + psi[a].imag * psi[a].imag
        for o in range(n_obs):
            values[0, o] = _expect(observables[o], psi, tmp) / n2
        _matvec(vecs_inv, psi, c)
        t_cur = times[0]
        if n_u < 1:
            status = OUT_OF_RANDOMS
        else:
            thresh = uniforms[0]
            used = 1
        k = 1
        while status == OK and k < n_t:
            target = times[k]
            while True:
                n2 = _propagate(evals, vecs, c, target - t_cur, work, psi)
                if n2 > thresh:
                    for a in range(d):
                        c[a] = _cexp_minus_i(evals[a], target - t_cur) * c[a]
                    t_cur = target
                    break
                lo = t_cur
                hi = target
                n2_hi = n2
                for it in range(MAX_BISECT):
                    if fabs(n2_hi - thresh) <= tol * thresh:
                        break
                    mid = 0.5 * (lo + hi)
                    if mid == lo or mid == hi:
                        break
                    n2_mid = _propagate(evals, vecs, c, mid - t_cur, work, tmp)
                    if n2_mid > thresh:
                        lo = mid
                    else:
                        hi = mid
                        n2_hi = n2_mid
                t_jump = hi
                _propagate(evals, vecs, c, t_jump - t_cur, work, c_t)
                total = 0.0
                for j in range(n_ch):
                    _matvec(jumps[j], c_t, outs[j])
                    weights[j] = 0.0
                    for a in range(d):
                        weights[j] += outs[j, a].real * outs[j, a].real + outs[j, a].imag * outs[j, a].imag
                    total += weights[j]
                if total <= 0.0:
                    status = NO_JUMP_CHANNEL
                    break
                if used + 2 > n_u:
                    status = OUT_OF_RANDOMS
                    break
                pick = uniforms[used] * total
                used += 1
                acc = 0.0
                chan = n_ch - 1
                for j in range(n_ch):
                    acc += weights[j]
                    if pick < acc:
                        chan = j
                        break
                nrm = sqrt(weights[chan])
                for a in range(d):
                    tmp[a] = outs[chan, a] / nrm
                _matvec(vecs_inv, tmp, c)
                t_cur = t_jump
                thresh = uniforms[used]
                used += 1
                n_jumps += 1
                if thresh < 1e-300:
                    status = NORM_UNDERFLOW
                    break
            if status != OK:
                break
            for o in range(n_obs):
                values[k, o] = _expect(observables[o], psi, tmp) / n2
            k += 1
    return values_arr, used, n_jumps, status


def rolling_pearson(double[:] f, double[:] g, double dt, Py_ssize_t half_width_steps,
                    double rel_var_floor):
    cdef Py_ssize_t n = f.shape[0]
    out_arr = np.full(n, np.nan)
    cdef double[:] out = out_arr
    cdef Py_ssize_t i, j, m
    cdef double w, width, fm, gm, vf, vg, cov, sf2, sg2, df, dg, r
    with nogil:
        for i in range(n):
            m = half_width_steps
            if i < m:
                m = i
            if n - 1 - i < m:
                m = n - 1 - i
            if m < 1:
                continue
            width = 2 * m * dt
            fm = 0.0
            gm = 0.0
            for j in range(i - m, i + m + 1):
                w = 0.5 * dt if (j == i - m or j == i + m) else dt
                fm += w * f[j]
                gm += w * g[j]
            fm /= width
            gm /= width
            vf = 0.0
            vg = 0.0
            cov = 0.0
            sf2 = 0.0
            sg2 = 0.0
            for j in range(i - m, i + m + 1):
                w = 0.5 * dt if (j == i - m or j == i + m) else dt
                df = f[j] - fm
                dg = g[j] - gm
                vf += w * df * df
                vg += w * dg * dg
                cov += w * df * dg
                sf2 += w * f[j] * f[j]
                sg2 += w * g[j] * g[j]
            if vf <= rel_var_floor * sf2 or vg <= rel_var_floor * sg2:
                continue
            r = cov / sqrt(vf * vg)
            if r > 1.0:
                r = 1.0
            elif r < -1.0:
                r = -1.0
            out[i] = r
    return out_arr
