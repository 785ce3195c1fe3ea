# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the particle engine and the periodic field solve.

Every kernel mirrors a function in ``_fallback.py``; both consume the same
counter-based random stream (see ``rng.py``) so they produce the same
trajectories.
"""
from cython.parallel cimport prange, threadid
from libc.math cimport tanh, sqrt, fabs, sin, cos
from libc.stdint cimport uint64_t, int64_t, uint8_t

import numpy as np

# counter purposes; keep in sync with rng.py
cdef enum:
    STRIDE = 4
    DECIDE = 0
    VELOCITY = 1
    BIRTH_X = 2
    INIT_X = 3

cdef double TWO_PI = 6.283185307179586
cdef double INV_2_53 = 1.0 / 9007199254740992.0
cdef double INV_2_32 = 1.0 / 4294967296.0


cdef inline uint64_t _mix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline double _uniform(uint64_t key, uint64_t counter) noexcept nogil:
    return <double>(_mix(key + counter * <uint64_t>0x9E3779B97F4A7C15) >> 11) * INV_2_53


cdef inline uint64_t _bits(uint64_t key, uint64_t counter) noexcept nogil:
    return _mix(key + counter * <uint64_t>0x9E3779B97F4A7C15)


cdef inline double _hi(uint64_t h) noexcept nogil:
    return <double>(h >> 32) * INV_2_32


cdef inline double _lo(uint64_t h) noexcept nogil:
    return <double>(h & <uint64_t>0xFFFFFFFF) * INV_2_32


cdef inline void _new_velocity(uint64_t h, double* vx, double* vy,
                               double* vz) noexcept nogil:
    cdef double c = 1.0 - 2.0 * _hi(h)
    cdef double s = sqrt(1.0 - c * c)
    cdef double a = TWO_PI * _lo(h)
    vx[0] = c
    # separate sin and cos: glibc's sincos can differ from them in the last bit
    vy[0] = s * cos(a)
    vz[0] = s * sin(a)


def uniform(uint64_t key, uint64_t[::1] counters):
    """Vectorised counter-based uniforms (for cross-checking the fallback)."""
    cdef Py_ssize_t i, n = counters.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    for i in range(n):
        o[i] = _uniform(key, counters[i])
    return out


def tridiag_solve(const double[::1] lower, const double[::1] diag,
                  const double[::1] upper, const double[::1] rhs, double[::1] out):
    """Thomas algorithm; ``lower[0]`` and ``upper[n-1]`` are ignored."""
    cdef Py_ssize_t n = diag.shape[0], i
    cdef double[::1] cp = np.empty(n, dtype=np.float64)
    cdef double m
    with nogil:
        cp[0] = upper[0] / diag[0]
        out[0] = rhs[0] / diag[0]
        for i in range(1, n):
            m = diag[i] - lower[i] * cp[i - 1]
            cp[i] = upper[i] / m if i < n - 1 else 0.0
            out[i] = (rhs[i] - lower[i] * out[i - 1]) / m
        for i in range(n - 2, -1, -1):
            out[i] = out[i] - cp[i] * out[i + 1]


def init_particles(double[::1] x, double[::1] vx, double[::1] vy, double[::1] vz,
                   double[::1] prev, Py_ssize_t I, Py_ssize_t M, double dx, uint64_t key):
    """M particles per site, uniform within the site, isotropic velocities."""
    cdef Py_ssize_t i, site, n = I * M
    cdef double xi
    with nogil:
        for i in range(n):
            site = i // M
            xi = (<double>site + _uniform(key, i * STRIDE + INIT_X)) * dx
            if xi >= (site + 1) * dx:
                xi = site * dx
            x[i] = xi
            _new_velocity(_bits(key, i * STRIDE + VELOCITY), &vx[i], &vy[i], &vz[i])
            prev[i] = 0.0
    return n


def move_count(double[::1] x, const double[::1] vx, Py_ssize_t n, double dt, double L,
               double dx, int64_t[::1] counts, int64_t[:, ::1] hist, int nthreads):
    """Free flight with periodic wrap, then per-site particle counts."""
    cdef Py_ssize_t i, j, site, I = counts.shape[0]
    cdef int t, tid
    cdef double xn, inv_dx = 1.0 / dx
    with nogil:
        for t in range(nthreads):
            for j in range(I):
                hist[t, j] = 0
        for i in prange(n, num_threads=nthreads, schedule="static"):
            tid = threadid()
            xn = x[i] + vx[i] * dt
            if xn >= L:
                xn = xn - L
            elif xn < 0.0:
                xn = xn + L
            if xn >= L:
                xn = 0.0
            x[i] = xn
            site = <Py_ssize_t>(xn * inv_dx)
            if site >= I:
                site = I - 1
            hist[tid, site] += 1
        for j in range(I):
            counts[j] = 0
            for t in range(nthreads):
                counts[j] += hist[t, j]


def sense_tumble_grow(const double[::1] x, double[::1] vx, double[::1] vy, double[::1] vz,
                      double[::1] prev, Py_ssize_t n, const double[::1] logS,
                      const double[::1] slope, const double[::1] rho, double dx, double dt,
                      double tumble_rate, double chi, double delta, bint has_history,
                      bint do_sense, bint do_tumble, bint do_growth, uint64_t key,
                      uint8_t[::1] events, int nthreads):
    """Sense log S, tumble, and flag divisions/deaths.

    With ``do_sense`` false the carried log S is left alone and tumbling sees
    D = 0.  Returns ``(n_tumbles, n_births, n_deaths)``.
    """
    cdef Py_ssize_t i, site, I = logS.shape[0]
    cdef double cur, D, K, P, u, inv_dx = 1.0 / dx
    cdef double lo = tumble_rate * (1.0 - chi), hi = tumble_rate * (1.0 + chi)
    cdef uint64_t h
    cdef int hit
    cdef Py_ssize_t n_tumble = 0, n_birth = 0, n_death = 0
    with nogil:
        for i in prange(n, num_threads=nthreads, schedule="static"):
            site = <Py_ssize_t>(x[i] * inv_dx)
            if site >= I:
                site = I - 1
            D = 0.0
            if do_sense:
                cur = logS[site] + slope[site] * (x[i] - (<double>site + 0.5) * dx)
                if has_history:
                    D = (cur - prev[i]) / dt
                prev[i] = cur
            events[i] = 0
            h = _bits(key, i * STRIDE + DECIDE)
            if do_tumble:
                # K lies in [1-chi, 1+chi]: tanh only decides draws inside that band
                u = _hi(h)
                if u < lo:
                    hit = 1
                elif u >= hi:
                    hit = 0
                else:
                    K = 1.0 - chi * tanh(D / delta)
                    hit = u < tumble_rate * K
                if hit:
                    _new_velocity(_bits(key, i * STRIDE + VELOCITY), &vx[i], &vy[i], &vz[i])
                    n_tumble += 1
            if do_growth:
                P = 1.0 - rho[site]
                if _lo(h) < fabs(P) * dt:
                    if P > 0.0:
                        events[i] = 1
                        n_birth += 1
                    else:
                        events[i] = 2
                        n_death += 1
    return n_tumble, n_birth, n_death


def apply_events(double[::1] x, double[::1] vx, double[::1] vy, double[::1] vz,
                 double[::1] prev, Py_ssize_t n, const uint8_t[::1] events,
                 Py_ssize_t n_birth, Py_ssize_t n_death, uint64_t key, double dx,
                 int64_t[::1] counts):
    """Append newborns after the live block, then fill death holes from the tail.

    Arrays must have capacity for ``n + n_birth`` particles.  Returns the new
    particle count.
    """
    cdef Py_ssize_t i, j, site, I = counts.shape[0]
    cdef Py_ssize_t total = n + n_birth, new_n = n + n_birth - n_death
    cdef Py_ssize_t nd = 0, q, t, top
    cdef double xb, inv_dx = 1.0 / dx
    cdef int64_t[::1] dead = np.empty(max(n_death, 1), dtype=np.int64)
    with nogil:
        j = n
        for i in range(n):
            if events[i] == 0:
                continue
            site = <Py_ssize_t>(x[i] * inv_dx)
            if site >= I:
                site = I - 1
            if events[i] == 1:
                xb = (<double>site + _uniform(key, i * STRIDE + BIRTH_X)) * dx
                if xb >= (site + 1) * dx:
                    xb = site * dx
                x[j] = xb
                vx[j] = vx[i]
                vy[j] = vy[i]
                vz[j] = vz[i]
                prev[j] = prev[i]
                counts[site] += 1
                j += 1
            else:
                dead[nd] = i
                nd += 1
                counts[site] -= 1
        # holes below new_n ascending, filled by live tail entries descending
        t = total - 1
        top = nd - 1
        for q in range(nd):
            if dead[q] >= new_n:
                break
            while top >= q and t == dead[top]:
                t -= 1
                top -= 1
            x[dead[q]] = x[t]
            vx[dead[q]] = vx[t]
            vy[dead[q]] = vy[t]
            vz[dead[q]] = vz[t]
            prev[dead[q]] = prev[t]
            t -= 1
    return new_n
