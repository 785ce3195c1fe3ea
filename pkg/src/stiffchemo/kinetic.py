"""Linear stability of the uniform state of the kinetic chemotaxis model.

A perturbation ``exp(mu t + i lambda x)`` of the state ``f = S = rho = 1``
has eigenvalue ``mu = mu1 + i*mu2*lambda``.  With the auxiliary variables

    alpha = (1 - k) / (k lambda)
    beta  = F'[0] / (k (1 + d lambda^2))
    xi    = k lambda / (1 + k mu1)

the real branch ``mu2 = 0`` reduces to ``(alpha xi - beta) phi(xi) = 1 - beta``
with ``phi(xi) = arctan(xi)/xi``, and ``mu1 = lambda/xi - 1/k``.  A mode is
unstable iff that equation has a root in ``0 < xi < k lambda``, which is
equivalent to the closed-form test in :func:`instability_rhs`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .model import ModelParams, stiffness_ratio

__all__ = [
    "CriticalCurvePoint",
    "DispersionAux",
    "DispersionPole",
    "DispersionResult",
    "case_oracle",
    "critical_stiffness",
    "dispersion_aux",
    "growth_rate",
    "instability_rhs",
    "is_unstable_mode",
    "most_unstable_mode",
    "phi",
    "psi",
    "residual_I1",
    "residual_I2",
    "stability_diagram",
    "unstable_band",
]

# below this argument phi uses its Taylor series
SERIES_SWITCH = 1e-4
# z/arctan(z) - 1 cancels like eps/z^2 in closed form; the 5-term series is
# good to ~1e-17 below this switch, the closed form to ~7e-12 above it
DENOM_SWITCH = 1e-2


class DispersionPole(ArithmeticError):
    """Raised when psi is evaluated on its pole xi = beta/alpha."""


@dataclass(frozen=True)
class DispersionAux:
    alpha: float
    beta: float
    xi: float | None = None


@dataclass(frozen=True)
class DispersionResult:
    lam: float
    xi_root: float | None
    mu1: float | None
    mu2: float
    unstable: bool


@dataclass(frozen=True)
class CriticalCurvePoint:
    k: float
    d: float
    critical_stiffness: float
    argmin_lambda: float


def dispersion_aux(lam: float, p: ModelParams, mu1: float | None = None) -> DispersionAux:
    alpha = (1.0 - p.k) / (p.k * lam)
    beta = p.stiffness / (p.k * (1.0 + p.d * lam * lam))
    xi = None if mu1 is None else p.k * lam / (1.0 + p.k * mu1)
    return DispersionAux(alpha, beta, xi)


def phi(xi):
    """arctan(xi)/xi, continuous at 0."""
    x = np.asarray(xi, dtype=float)
    if np.any(x < 0):
        raise ValueError("phi is defined for xi >= 0 only")
    small = x < SERIES_SWITCH
    x2 = x * x
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(small, 1.0 - x2 / 3.0 + x2 * x2 / 5.0, np.arctan(x) / x)
    return out if out.ndim else float(out)


def psi(xi, aux: DispersionAux):
    """(1 - beta)/(alpha xi - beta); raises :class:`DispersionPole` on the pole."""
    den = aux.alpha * np.asarray(xi, dtype=float) - aux.beta
    if np.any(den == 0.0):
        raise DispersionPole(f"psi has a pole at xi = beta/alpha = {aux.beta / aux.alpha}")
    out = (1.0 - aux.beta) / den
    return out if np.ndim(out) else float(out)


def _z_over_arctan_minus_one(z):
    z = np.asarray(z, dtype=float)
    z2 = z * z
    series = z2 * (1.0 / 3.0 + z2 * (-4.0 / 45.0 + z2 * (44.0 / 945.0 + z2 * (
        -428.0 / 14175.0 + z2 * 10196.0 / 467775.0))))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(z < DENOM_SWITCH, series, z / np.arctan(z) - 1.0)


def instability_rhs(lam, k: float, d: float):
    """Right-hand side of the per-mode instability test ``F'[0]/k > rhs``."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("lambda must be positive")
    den = _z_over_arctan_minus_one(k * lam)
    out = (1.0 + k / den) * (1.0 + d * lam * lam)
    return out if out.ndim else float(out)


def critical_stiffness(k: float, d: float, n_grid: int = 4001) -> CriticalCurvePoint:
    """Minimum over lambda of :func:`instability_rhs` and where it is attained."""
    if not k > 0:
        raise ValueError("k must be positive")
    if not d > 0:
        raise ValueError("critical_stiffness needs d > 0; the infimum degenerates at d = 0")
    lam = np.geomspace(1e-3, 1e3, max(n_grid, 2000))
    rhs = instability_rhs(lam, k, d)
    j = int(np.argmin(rhs))
    if j == 0 or j == lam.size - 1:
        raise RuntimeError(f"minimum at the edge of the lambda grid (k={k}, d={d})")
    res = optimize.minimize_scalar(
        lambda t: instability_rhs(t, k, d),
        bracket=(lam[j - 1], lam[j], lam[j + 1]),
        method="golden",
        tol=1e-10,
    )
    lam_star = float(res.x)
    return CriticalCurvePoint(k, d, float(instability_rhs(lam_star, k, d)), lam_star)


def is_unstable_mode(lam: float, p: ModelParams) -> bool:
    return bool(stiffness_ratio(p) > instability_rhs(lam, p.k, p.d))


def _real_branch(xi, alpha, beta):
    # (alpha xi - beta) phi(xi) - (1 - beta); equals -1 at xi -> 0
    return (alpha * xi - beta) * phi(xi) - (1.0 - beta)


def growth_rate(lam: float, p: ModelParams, n_grid: int = 3000) -> DispersionResult:
    """Dominant real eigenvalue mu1 of mode ``lam`` on the mu2 = 0 branch."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    aux = dispersion_aux(lam, p)
    alpha, beta = aux.alpha, aux.beta
    if beta == 1.0:
        return DispersionResult(lam, None, -1.0, 0.0, False)

    xi = np.geomspace(1e-8, max(1e3, 10.0 * p.k * lam), n_grid)
    h = _real_branch(xi, alpha, beta)
    s = np.sign(h)
    hits = np.flatnonzero(s[:-1] * s[1:] <= 0)
    if hits.size == 0:
        return DispersionResult(lam, None, None, 0.0, False)
    j = hits[0]
    if h[j] == 0.0:
        root = float(xi[j])
    else:
        root = optimize.brentq(_real_branch, xi[j], xi[j + 1], args=(alpha, beta),
                               xtol=1e-300, rtol=1e-12)
    mu1 = lam / root - 1.0 / p.k
    return DispersionResult(lam, root, mu1, 0.0, mu1 > 0)


def _xi_or_raise(mu1, lam, p):
    den = 1.0 + p.k * mu1
    if not den > 0:
        raise ValueError("need 1 + k*mu1 > 0")
    xi = p.k * lam / den
    if not math.isfinite(xi):
        raise OverflowError("xi overflows as mu1 approaches -1/k")
    return xi


def _arctan_gap(xi, mu2):
    return math.atan(xi * (mu2 + 1.0)) - math.atan(xi * (mu2 - 1.0))


def _log_ratio(xi, mu2):
    # log[(xi^-2 + (mu2+1)^2) / (xi^-2 + (mu2-1)^2)], written to survive large xi
    return math.log1p((xi * (mu2 + 1.0)) ** 2) - math.log1p((xi * (mu2 - 1.0)) ** 2)


def residual_I1(mu1: float, mu2: float, lam: float, p: ModelParams) -> float:
    """Real-part dispersion condition, returned as LHS - RHS.

    Equals ``int_{-1}^{1} Re(...) dv - 2`` exactly; the log term carries the
    factor 1/2 that comes out of integrating ``w/(1 + xi^2 w^2)``.
    """
    xi = _xi_or_raise(mu1, lam, p)
    aux = dispersion_aux(lam, p)
    lhs = (aux.alpha - aux.beta / xi) * _arctan_gap(xi, mu2) \
        - 0.5 * mu2 * aux.beta * _log_ratio(xi, mu2)
    return lhs - (2.0 - 2.0 * aux.beta)


def residual_I2(mu1: float, mu2: float, lam: float, p: ModelParams) -> float:
    """Imaginary-part dispersion condition (zero at eigenvalues)."""
    xi = _xi_or_raise(mu1, lam, p)
    aux = dispersion_aux(lam, p)
    arg = 1.0 + 4.0 * mu2 / (xi ** -2 + (mu2 - 1.0) ** 2)
    if not arg > 0:
        raise ValueError(f"log argument {arg} is not positive")
    return mu2 * aux.beta * _arctan_gap(xi, mu2) \
        + 0.5 * (aux.alpha - aux.beta / xi) * _log_ratio(xi, mu2)


def case_oracle(aux: DispersionAux, k_lambda: float, n: int = 100_001) -> bool:
    """Brute-force test for an intersection of phi and psi in (0, k_lambda).

    Samples ``phi - psi`` on a dense mixed linear/geometric grid and reports
    any sign change, ignoring the spurious one across the pole of psi.
    """
    lin = np.linspace(0.0, k_lambda, n)[1:-1]
    geo = np.geomspace(k_lambda * 1e-9, k_lambda * (1.0 - 1e-12), n // 4)
    xi = np.unique(np.concatenate([lin, geo]))
    with np.errstate(divide="ignore", invalid="ignore"):
        den = aux.alpha * xi - aux.beta
        f = phi(xi) - (1.0 - aux.beta) / den
    ok = np.isfinite(f)
    xi, f = xi[ok], f[ok]
    if np.any(f == 0.0):
        return True
    change = f[:-1] * f[1:] < 0
    if aux.alpha != 0.0:
        pole = aux.beta / aux.alpha
        change &= ~((xi[:-1] < pole) & (pole < xi[1:]))
    return bool(change.any())


def unstable_band(p: ModelParams, n_grid: int = 4000) -> tuple[float, float] | None:
    """Endpoints of the unstable wavenumber interval, or None when stable."""
    ratio = stiffness_ratio(p)
    if ratio <= 1.0:
        return None
    # beyond this bound beta < 1 and no mode can be unstable
    upper = math.sqrt((ratio - 1.0) / p.d) if p.d > 0 else 1e6
    lam = np.geomspace(upper * 1e-6, upper, n_grid)
    g = ratio - instability_rhs(lam, p.k, p.d)
    inside = np.flatnonzero(g > 0)
    if inside.size == 0:
        return None
    i0, i1 = inside[0], inside[-1]

    def f(t):
        return ratio - instability_rhs(t, p.k, p.d)

    lo = lam[i0] if i0 == 0 else optimize.brentq(f, lam[i0 - 1], lam[i0], rtol=1e-12)
    hi = lam[i1] if i1 == lam.size - 1 else optimize.brentq(f, lam[i1], lam[i1 + 1], rtol=1e-12)
    return float(lo), float(hi)


def most_unstable_mode(p: ModelParams, n_grid: int = 200) -> DispersionResult | None:
    """Wavenumber with the largest real growth rate inside the unstable band."""
    band = unstable_band(p)
    if band is None:
        return None
    lo, hi = band
    lam = np.linspace(lo, hi, n_grid + 2)[1:-1]
    mu = np.array([growth_rate(t, p).mu1 for t in lam], dtype=float)
    j = int(np.nanargmax(mu))
    a = lam[max(j - 1, 0)]
    b = lam[min(j + 1, lam.size - 1)]
    res = optimize.minimize_scalar(lambda t: -growth_rate(t, p).mu1, bounds=(a, b),
                                   method="bounded", options={"xatol": 1e-10 * hi})
    best = growth_rate(float(res.x), p)
    return best if best.mu1 >= mu[j] else growth_rate(float(lam[j]), p)


def stability_diagram(k_values, d_over_k_values) -> list[CriticalCurvePoint]:
    """Critical stiffness over a (k, d/k) grid, ordered by k then d/k."""
    rows = []
    for k in k_values:
        for dk in d_over_k_values:
            rows.append(critical_stiffness(k, dk * k))
    return rows
