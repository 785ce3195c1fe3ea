"""Pure numpy versions of the kernels in ``_core.pyx``.

Same signatures and same random stream; selected automatically when the
compiled extension is not importable.  ``nthreads`` is accepted and ignored.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

from . import rng as _rng

TWO_PI = 6.283185307179586


def uniform(key, counters):
    return _rng.uniform_from_counters(key, np.asarray(counters, dtype=np.uint64))


def _counters(idx, purpose):
    return idx.astype(np.uint64) * np.uint64(_rng.STRIDE) + np.uint64(purpose)


def _pair(key, idx, purpose):
    return _rng.uniform_pair_from_counters(key, _counters(idx, purpose))


def _new_velocity(key, idx):
    u1, u2 = _pair(key, idx, _rng.VELOCITY)
    c = 1.0 - 2.0 * u1
    s = np.sqrt(1.0 - c * c)
    return c, s * np.cos(TWO_PI * u2), s * np.sin(TWO_PI * u2)


def _site(x, dx, I):
    return np.minimum((x * (1.0 / dx)).astype(np.int64), I - 1)


def tridiag_solve(lower, diag, upper, rhs, out):
    n = diag.shape[0]
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    out[:] = solve_banded((1, 1), ab, rhs)


def init_particles(x, vx, vy, vz, prev, I, M, dx, key):
    n = I * M
    idx = np.arange(n, dtype=np.int64)
    site = idx // M
    xi = (site + uniform(key, _counters(idx, _rng.INIT_X))) * dx
    over = xi >= (site + 1) * dx
    xi[over] = site[over] * dx
    x[:n] = xi
    vx[:n], vy[:n], vz[:n] = _new_velocity(key, idx)
    prev[:n] = 0.0
    return n


def move_count(x, vx, n, dt, L, dx, counts, hist, nthreads):
    xn = x[:n] + vx[:n] * dt
    xn[xn >= L] -= L
    xn[xn < 0.0] += L
    xn[xn >= L] = 0.0
    x[:n] = xn
    counts[:] = np.bincount(_site(xn, dx, counts.shape[0]), minlength=counts.shape[0])


def sense_tumble_grow(x, vx, vy, vz, prev, n, logS, slope, rho, dx, dt, tumble_rate, chi,
                      delta, has_history, do_sense, do_tumble, do_growth, key, events,
                      nthreads):
    I = logS.shape[0]
    xs = x[:n]
    site = _site(xs, dx, I)
    D = np.zeros(n)
    if do_sense:
        cur = logS[site] + slope[site] * (xs - (site + 0.5) * dx)
        if has_history:
            D = (cur - prev[:n]) / dt
        prev[:n] = cur
    ev = np.zeros(n, dtype=np.uint8)
    idx = np.arange(n, dtype=np.int64)
    n_tumble = n_birth = n_death = 0
    u_tumble, u_growth = _pair(key, idx, _rng.DECIDE)
    if do_tumble:
        K = 1.0 - chi * np.tanh(D / delta)
        hit = np.flatnonzero(u_tumble < tumble_rate * K)
        if hit.size:
            vx[hit], vy[hit], vz[hit] = _new_velocity(key, hit)
        n_tumble = int(hit.size)
    if do_growth:
        P = 1.0 - rho[site]
        hit = u_growth < np.abs(P) * dt
        ev[hit & (P > 0)] = 1
        ev[hit & ~(P > 0)] = 2
        n_birth = int(np.count_nonzero(ev == 1))
        n_death = int(np.count_nonzero(ev == 2))
    events[:n] = ev
    return n_tumble, n_birth, n_death


def apply_events(x, vx, vy, vz, prev, n, events, n_birth, n_death, key, dx, counts):
    I = counts.shape[0]
    ev = events[:n]
    parents = np.flatnonzero(ev == 1)
    dead = np.flatnonzero(ev == 2)
    if parents.size:
        site = _site(x[parents], dx, I)
        xb = (site + uniform(key, _counters(parents, _rng.BIRTH_X))) * dx
        over = xb >= (site + 1) * dx
        xb[over] = site[over] * dx
        j = slice(n, n + parents.size)
        x[j] = xb
        vx[j], vy[j], vz[j], prev[j] = vx[parents], vy[parents], vz[parents], prev[parents]
        np.add.at(counts, site, 1)
    if dead.size:
        np.add.at(counts, _site(x[dead], dx, I), -1)
    total = n + parents.size
    new_n = total - dead.size
    holes = dead[dead < new_n]
    tail = np.arange(new_n, total)
    tail = tail[~np.isin(tail, dead)][::-1]
    for arr in (x, vx, vy, vz, prev):
        arr[holes] = arr[tail]
    return new_n
