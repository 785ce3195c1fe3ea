"""Monte Carlo particle engine for the kinetic chemotaxis equation.

Particles live on the periodic interval [0, L) cut into I sites.  Only the
x coordinate is tracked (the field depends on x alone) but velocities are
full unit 3-vectors.  One time step is

1. free flight ``x += vx*dt`` with periodic wrap,
2. density ``rho_i = M_i / M`` and chemoattractant from the screened Poisson solve,
3. tumbling with probability ``(dt/k) K[D_t log S]``,
4. division/death with probability ``|1 - rho_i| dt``.

``D_t log S`` is a forward difference along each trajectory: every particle
carries the log S it sensed at the previous step.  On the first step no
history exists and ``D_t log S = 0``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from ._backend import backend_name, get_backend
from .field import CyclicScreenedPoisson, FieldGrid
from .model import ModelParams, ResponseFunction
from .rng import CounterRNG
from .snapshots import Snapshot

log = logging.getLogger(__name__)

__all__ = [
    "McAbort",
    "McConfig",
    "McSimulation",
    "ParticleEnsemble",
    "compute_density",
    "init_uniform",
    "interpolate_logS",
    "log_field",
    "random_unit_velocity",
    "run",
    "sensed_material_derivative",
    "step_growth",
    "step_move",
    "step_tumble",
]


class McAbort(RuntimeError):
    """Run stopped on a runaway or extinct population."""


@dataclass(frozen=True)
class McConfig:
    params: ModelParams
    L: float = 100.0
    I: int = 2000
    dt: float = 5e-3
    M: int = 500
    t_end: float = 200.0
    seed: int = 0
    snapshot_every: float = 2.0
    growth: bool = True
    tumble: bool = True
    threads: int = 1
    max_growth: float = 10.0

    def __post_init__(self):
        p = self.params
        if self.I < 4 or self.M < 1:
            raise ValueError("need I >= 4 and M >= 1")
        if not (self.L > 0 and self.dt > 0 and self.t_end >= 0):
            raise ValueError("L, dt must be positive and t_end non-negative")
        if self.dt * (1.0 + p.chi) / p.k > 1.0:
            raise ValueError(f"tumble probability dt*(1+chi)/k = "
                             f"{self.dt * (1 + p.chi) / p.k:.3g} exceeds 1")
        if self.dt > 1.0:
            raise ValueError("dt must be <= 1 so that |P| dt stays a probability")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.snapshot_every <= 0:
            raise ValueError("snapshot_every must be positive")
        ratio = self.snapshot_every / self.dt
        if abs(ratio - round(ratio)) > 1e-6 * ratio:
            raise ValueError("snapshot_every must be a multiple of dt")

    @property
    def dx(self) -> float:
        return self.L / self.I

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def snapshot_stride(self) -> int:
        return int(round(self.snapshot_every / self.dt))

    def grid(self) -> FieldGrid:
        return FieldGrid(self.I, self.dx)


@dataclass
class ParticleEnsemble:
    """Particle arrays with spare capacity; the first ``count`` entries are live.

    ``logS_prev`` is the log chemoattractant each particle sensed at the
    previous step.
    """

    x_buf: np.ndarray
    v_buf: np.ndarray  # shape (3, capacity)
    logS_prev_buf: np.ndarray
    count: int
    L: float
    has_history: bool = False

    @classmethod
    def empty(cls, capacity: int, L: float) -> "ParticleEnsemble":
        return cls(np.zeros(capacity), np.zeros((3, capacity)), np.zeros(capacity), 0, L)

    @classmethod
    def from_arrays(cls, x, v, L: float, logS_prev=None, capacity: int | None = None):
        """Build from positions ``x`` (n,) and velocities ``v`` (3, n)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        v = np.asarray(v, dtype=float).reshape(3, -1)
        n = x.size
        ens = cls.empty(max(capacity or 0, 2 * n, 16), L)
        ens.x_buf[:n] = x
        ens.v_buf[:, :n] = v
        if logS_prev is not None:
            ens.logS_prev_buf[:n] = logS_prev
            ens.has_history = True
        ens.count = n
        return ens

    @property
    def capacity(self) -> int:
        return self.x_buf.size

    @property
    def x(self) -> np.ndarray:
        return self.x_buf[: self.count]

    @property
    def v(self) -> np.ndarray:
        return self.v_buf[:, : self.count]

    @property
    def logS_prev(self) -> np.ndarray:
        return self.logS_prev_buf[: self.count]

    def reserve(self, n: int) -> None:
        if n <= self.capacity:
            return
        cap = max(n, 2 * self.capacity)
        x = np.zeros(cap)
        v = np.zeros((3, cap))
        s = np.zeros(cap)
        x[: self.count] = self.x
        v[:, : self.count] = self.v
        s[: self.count] = self.logS_prev
        self.x_buf, self.v_buf, self.logS_prev_buf = x, v, s

    def copy(self) -> "ParticleEnsemble":
        return replace(self, x_buf=self.x_buf.copy(), v_buf=self.v_buf.copy(),
                       logS_prev_buf=self.logS_prev_buf.copy())


def random_unit_velocity(u1, u2):
    """Isotropic unit vector from two uniforms: vx = 1 - 2 u1, azimuth 2 pi u2."""
    vx = 1.0 - 2.0 * np.asarray(u1, dtype=float)
    s = np.sqrt(1.0 - vx * vx)
    a = 2.0 * np.pi * np.asarray(u2, dtype=float)
    return np.stack([vx, s * np.cos(a), s * np.sin(a)])


def init_uniform(cfg: McConfig, backend=None) -> ParticleEnsemble:
    """Exactly M particles per site, uniform in the site, isotropic velocities."""
    kern = get_backend(backend)
    n = cfg.M * cfg.I
    ens = ParticleEnsemble.empty(2 * n, cfg.L)
    key = CounterRNG(cfg.seed).key(0)
    ens.count = kern.init_particles(ens.x_buf, ens.v_buf[0], ens.v_buf[1], ens.v_buf[2],
                                    ens.logS_prev_buf, cfg.I, cfg.M, cfg.dx, key)
    return ens


def step_move(ens: ParticleEnsemble, dt: float, L: float) -> ParticleEnsemble:
    """Free flight with periodic wrap (in place); velocities and count untouched."""
    x = ens.x + ens.v[0] * dt
    x[x >= L] -= L
    x[x < 0.0] += L
    x[x >= L] = 0.0
    ens.x_buf[: ens.count] = x
    return ens


def _sites(x, dx, I):
    return np.minimum((np.asarray(x) * (1.0 / dx)).astype(np.int64), I - 1)


def compute_density(ens: ParticleEnsemble, grid: FieldGrid, M: int) -> np.ndarray:
    """rho_i = (particles in site i) / M."""
    counts = np.bincount(_sites(ens.x, grid.dx, grid.I), minlength=grid.I)
    return counts / M


def log_field(S, dx: float) -> tuple[np.ndarray, np.ndarray]:
    """log S per site and its centred periodic slope."""
    S = np.asarray(S, dtype=float)
    if np.any(S <= 0):
        raise ValueError("chemoattractant must be positive to take its log")
    logS = np.log(S)
    slope = (np.roll(logS, -1) - np.roll(logS, 1)) / (2.0 * dx)
    return logS, slope


def interpolate_logS(S, x, grid: FieldGrid):
    """Linear reconstruction of log S at ``x`` using the centred slope of its site."""
    logS, slope = log_field(S, grid.dx)
    i = _sites(x, grid.dx, grid.I)
    out = logS[i] + slope[i] * (np.asarray(x) - (i + 0.5) * grid.dx)
    return out if np.ndim(out) else float(out)


def sensed_material_derivative(logS_now, logS_prev_sensed, dt: float):
    return (np.asarray(logS_now) - np.asarray(logS_prev_sensed)) / dt


def step_tumble(ens: ParticleEnsemble, S, dx: float, dt: float, k: float,
                rf: ResponseFunction, key: int, backend=None) -> ParticleEnsemble:
    """Sense log S and tumble each particle with probability (dt/k) K[D_t log S].

    ``key`` is a per-step stream key from :meth:`CounterRNG.key`.
    """
    kern = get_backend(backend)
    logS, slope = log_field(S, dx)
    events = np.zeros(ens.count, dtype=np.uint8)
    kern.sense_tumble_grow(ens.x_buf, ens.v_buf[0], ens.v_buf[1], ens.v_buf[2],
                           ens.logS_prev_buf, ens.count, logS, slope, logS, dx, dt, dt / k,
                           rf.chi, rf.delta, ens.has_history, True, True, False, key,
                           events, 1)
    ens.has_history = True
    return ens


def step_growth(ens: ParticleEnsemble, rho, dx: float, dt: float, key: int,
                backend=None) -> ParticleEnsemble:
    """Divide (P > 0) or kill (P < 0) each particle with probability |P[rho_i]| dt.

    A daughter copies the parent's velocity and sensing memory and is placed
    uniformly in the parent's site.
    """
    kern = get_backend(backend)
    rho = np.ascontiguousarray(rho, dtype=float)
    dummy = np.zeros_like(rho)
    events = np.zeros(ens.count, dtype=np.uint8)
    _, nb, nd = kern.sense_tumble_grow(
        ens.x_buf, ens.v_buf[0], ens.v_buf[1], ens.v_buf[2], ens.logS_prev_buf, ens.count,
        dummy, dummy, rho, dx, dt, 0.0, 0.0, 1.0, False, False, False, True, key, events, 1)
    ens.reserve(ens.count + nb)
    counts = np.zeros(rho.size, dtype=np.int64)
    ens.count = kern.apply_events(ens.x_buf, ens.v_buf[0], ens.v_buf[1], ens.v_buf[2],
                                  ens.logS_prev_buf, ens.count, events, nb, nd, key, dx, counts)
    return ens


class McSimulation:
    """Stateful driver of the per-step pipeline; see the module docstring."""

    def __init__(self, cfg: McConfig, backend=None):
        self.cfg = cfg
        self.kern = get_backend(backend)
        self.backend = backend_name(self.kern)
        self.rng = CounterRNG(cfg.seed)
        self.ens = init_uniform(cfg, backend=backend)
        self.n0 = self.ens.count
        self.solver = CyclicScreenedPoisson(cfg.I, cfg.params.d, cfg.dx, backend=backend)
        self.counts = np.full(cfg.I, cfg.M, dtype=np.int64)
        self._hist = np.zeros((cfg.threads, cfg.I), dtype=np.int64)
        self._events = np.zeros(self.ens.capacity, dtype=np.uint8)
        self.step_index = 0
        self.n_tumbles = 0

    @property
    def t(self) -> float:
        return self.step_index * self.cfg.dt

    def density(self) -> np.ndarray:
        return self.counts / self.cfg.M

    def step(self) -> None:
        cfg, ens, kern = self.cfg, self.ens, self.kern
        p = cfg.params
        self.step_index += 1
        key = self.rng.key(self.step_index)
        kern.move_count(ens.x_buf, ens.v_buf[0], ens.count, cfg.dt, cfg.L, cfg.dx,
                        self.counts, self._hist, cfg.threads)
        rho = self.counts / cfg.M
        S = self.solver.solve(rho)
        logS, slope = log_field(S, cfg.dx)
        if self._events.size < ens.count:
            self._events = np.zeros(ens.capacity, dtype=np.uint8)
        nt, nb, nd = kern.sense_tumble_grow(
            ens.x_buf, ens.v_buf[0], ens.v_buf[1], ens.v_buf[2], ens.logS_prev_buf, ens.count,
            logS, slope, rho, cfg.dx, cfg.dt, cfg.dt / p.k, p.chi, p.delta, ens.has_history,
            True, cfg.tumble, cfg.growth, key, self._events, cfg.threads)
        ens.has_history = True
        self.n_tumbles += nt
        if nb or nd:
            ens.reserve(ens.count + nb)
            ens.count = kern.apply_events(ens.x_buf, ens.v_buf[0], ens.v_buf[1], ens.v_buf[2],
                                          ens.logS_prev_buf, ens.count, self._events, nb, nd,
                                          key, cfg.dx, self.counts)
        if ens.count > cfg.max_growth * self.n0:
            raise McAbort(f"particle count {ens.count} exceeds {cfg.max_growth:g}x the "
                          f"initial {self.n0} at t={self.t:.4g}")
        if ens.count == 0:
            raise McAbort(f"population extinct at t={self.t:.4g}")

    def snapshot(self) -> Snapshot:
        return Snapshot(self.t, self.density(), count=self.ens.count)

    def iter_snapshots(self, progress=None):
        yield self.snapshot()
        stride = self.cfg.snapshot_stride
        for _ in range(self.cfg.n_steps):
            self.step()
            if self.step_index % stride == 0:
                snap = self.snapshot()
                if progress is not None:
                    progress(snap)
                yield snap


def run(cfg: McConfig, backend=None, progress=None) -> list[Snapshot]:
    """Run the simulation from the uniform state; returns density snapshots."""
    sim = McSimulation(cfg, backend=backend)
    log.info("mc run: %d particles, %d steps, backend=%s", sim.n0, cfg.n_steps, sim.backend)
    return list(sim.iter_snapshots(progress))
