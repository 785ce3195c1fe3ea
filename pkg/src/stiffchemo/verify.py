"""Fast self-checks behind ``stiffchemo verify``.

Each check returns a :class:`CheckResult`; :func:`run_checks` runs them all.
``mutations`` perturbs a model constant for the duration of the run so the
checks can be shown to catch it (e.g. ``{"diffusion": 0.3}``).
"""
from __future__ import annotations

import contextlib
import math
import time
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from . import ks as _ks
from .continuum import ContinuumParams, continuum_growth_rate
from .field import CyclicScreenedPoisson, mass_identity_check
from .kinetic import (
    case_oracle,
    critical_stiffness,
    dispersion_aux,
    growth_rate,
    is_unstable_mode,
    residual_I1,
    residual_I2,
)
from .model import TABLE1, TABLE1_CLASSIFICATION, ModelParams, params_from_table1, stiffness_ratio

__all__ = ["CHECKS", "CheckResult", "mutated", "run_checks"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict} {self.name}: {self.detail} ({self.seconds:.2f}s)"


_MUTABLE = {"diffusion": (_ks, "DIFFUSION")}


@contextlib.contextmanager
def mutated(mutations: dict | None):
    """Temporarily override model constants by name."""
    saved = []
    try:
        for name, value in (mutations or {}).items():
            if name not in _MUTABLE:
                raise ValueError(f"unknown mutation {name!r}; known: {sorted(_MUTABLE)}")
            mod, attr = _MUTABLE[name]
            saved.append((mod, attr, getattr(mod, attr)))
            setattr(mod, attr, float(value))
        yield
    finally:
        for mod, attr, old in reversed(saved):
            setattr(mod, attr, old)


def check_table1() -> CheckResult:
    bad = []
    for (name, k), expected in TABLE1_CLASSIFICATION.items():
        p = params_from_table1(*TABLE1[name], k=k)
        got = stiffness_ratio(p) > critical_stiffness(p.k, p.d).critical_stiffness
        if got != expected:
            bad.append(f"{name}/k={k:g}")
    n = len(TABLE1_CLASSIFICATION)
    return CheckResult("table1", not bad, f"{n - len(bad)}/{n} classifications match"
                       + (f"; mismatched {bad}" if bad else ""))


def check_field_solver(seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst_cos = worst_mass = 0.0
    for _ in range(5):
        I = int(rng.integers(8, 400))
        dx, d = rng.uniform(0.01, 1.0), rng.uniform(0.0, 5.0)
        solver = CyclicScreenedPoisson(I, d, dx)
        m = int(rng.integers(0, I // 2 + 1))
        j = np.arange(I)
        rho = np.cos(2 * math.pi * m * j / I)
        symbol = 1.0 + 4.0 * d / dx**2 * math.sin(math.pi * m / I) ** 2
        worst_cos = max(worst_cos, float(np.max(np.abs(solver.solve(rho) - rho / symbol))))
        r = rng.uniform(0.0, 3.0, I)
        worst_mass = max(worst_mass, mass_identity_check(r, solver.solve(r)))
    ok = worst_cos < 1e-12 and worst_mass < 1e-10
    return CheckResult("field_solver", ok,
                       f"cosine err {worst_cos:.1e} (<1e-12), mass err {worst_mass:.1e} (<1e-10)")


def _random_params(rng) -> tuple[ModelParams, float]:
    k = float(np.exp(rng.uniform(np.log(0.05), np.log(5.0))))
    d = float(np.exp(rng.uniform(np.log(0.05), np.log(5.0))))
    chi = float(rng.uniform(0.05, 0.95))
    # stiffness spread around the critical line
    delta = chi / float(np.exp(rng.uniform(np.log(0.5), np.log(60.0))) * k)
    lam = float(np.exp(rng.uniform(np.log(0.05), np.log(20.0))))
    return ModelParams(k, d, chi, delta), lam


def check_dispersion(n_draws: int = 300, n_quad: int = 30, seed: int = 1) -> CheckResult:
    rng = np.random.default_rng(seed)
    disagree = 0
    worst_root = 0.0
    for _ in range(n_draws):
        p, lam = _random_params(rng)
        r = growth_rate(lam, p)
        a = is_unstable_mode(lam, p)
        c = case_oracle(dispersion_aux(lam, p), p.k * lam)
        if not (a == r.unstable == c):
            disagree += 1
        if r.xi_root is not None:
            worst_root = max(worst_root, abs(residual_I1(r.mu1, 0.0, lam, p)))
    worst_q = 0.0
    for _ in range(n_quad):
        p, lam = _random_params(rng)
        # draw a = 1 + k mu1 > 0 directly; the integrals need it positive
        mu1 = (float(rng.uniform(0.05, 3.0)) - 1.0) / p.k
        mu2 = float(rng.uniform(-1.5, 1.5))
        q1, q2 = _quad_I(mu1, mu2, lam, p)
        worst_q = max(worst_q, abs(q1 - 2.0 - residual_I1(mu1, mu2, lam, p)),
                      abs(q2 - residual_I2(mu1, mu2, lam, p)))
    ok = disagree == 0 and worst_root < 1e-8 and worst_q < 1e-8
    return CheckResult("dispersion", ok, f"{disagree}/{n_draws} disagreements, root residual "
                       f"{worst_root:.1e}, quadrature gap {worst_q:.1e} (<1e-8)")


def _quad_I(mu1, mu2, lam, p):
    """Adaptive quadrature of the two velocity integrals of the dispersion relation."""
    k, d, F = p.k, p.d, p.stiffness
    a = 1.0 + k * mu1
    g = F / (1.0 + d * lam * lam)

    def den(v):
        return a * a + (k * lam * (mu2 + v)) ** 2

    with warnings.catch_warnings():
        # tolerances sit near round-off; the achieved error is what is compared
        warnings.simplefilter("ignore", IntegrationWarning)
        return _quad_pair(k, lam, mu2, a, g, den)


def _quad_pair(k, lam, mu2, a, g, den):
    i1 = quad(lambda v: ((1 - k) * a + g * k * lam * lam * v * (mu2 + v)) / den(v), -1, 1,
              epsabs=1e-13, epsrel=1e-13, limit=200)[0]
    i2 = quad(lambda v: ((1 - k) * k * lam * (mu2 + v) - g * lam * v * a) / den(v), -1, 1,
              epsabs=1e-13, epsrel=1e-13, limit=200)[0]
    return i1, i2


def check_continuum_dispersion(tol: float = 0.05) -> CheckResult:
    """Single-mode continuum runs against the closed-form growth rate."""
    L, I = 20 * math.pi, 320
    worst = 0.0
    for name in ("B", "D"):
        kp = _ks.KsParams(*TABLE1[name])
        cp = ContinuumParams(kp.d_hat, kp.Fp_hat)
        for n in (6, 12, 14):
            cfg = _ks.KsConfig(kp, L=L, I=I, t_end=8.0, init="mode", mode=n, snapshot_every=0.5)
            rate = _ks.mode_growth_rate(_ks.ks_run(cfg), n, t_min=1.0)
            exact = continuum_growth_rate(2 * math.pi * n / L, cp)
            worst = max(worst, abs(rate / exact - 1.0))
    return CheckResult("continuum_dispersion", worst < tol,
                       f"worst relative rate error {worst:.2e} (<{tol:g})")


CHECKS = {
    "table1": check_table1,
    "field_solver": check_field_solver,
    "dispersion": check_dispersion,
    "continuum_dispersion": check_continuum_dispersion,
}


def run_checks(names=None, mutations: dict | None = None) -> list[CheckResult]:
    names = list(CHECKS) if names is None else list(names)
    out = []
    with mutated(mutations):
        for name in names:
            t0 = time.perf_counter()
            res = CHECKS[name]()
            res.seconds = time.perf_counter() - t0
            out.append(res)
    return out
