"""Power spectra, time averages, peak detection and pattern classification.

Transform convention: ``rho_hat(lambda_n) = dx * sum_j (rho_j - mean) exp(-i lambda_n x_j)``
with ``lambda_n = 2 pi n / L`` for ``n = 0..I/2``; the reported power is
``|rho_hat|^2 / k`` and ``n = 0`` is reported as zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "OSCILLATORY_MIN",
    "PEAK_THRESHOLD",
    "SPIKE_MIN",
    "PatternMetrics",
    "SpectrumResult",
    "detect_first_peak",
    "pattern_metrics",
    "plateau_median",
    "power_spectrum",
    "spacetime_map",
    "time_averaged_spectrum",
]

PEAK_THRESHOLD = 2.0
OSCILLATORY_MIN = 0.5
SPIKE_MIN = 0.2


@dataclass
class SpectrumResult:
    wavenumbers: np.ndarray
    power: np.ndarray
    window: tuple[float, float, float] | None = None

    @property
    def plateau_band(self) -> slice:
        """Upper half of the modes."""
        return slice(self.power.size // 2, None)


def power_spectrum(density, dx: float, k: float = 1.0) -> SpectrumResult:
    """Fluctuation power of one density profile.

    Examples
    --------
    >>> import numpy as np
    >>> x = (np.arange(64) + 0.5) * 0.5
    >>> spec = power_spectrum(1 + 0.1 * np.cos(2 * np.pi * 3 * x / 32), 0.5)
    >>> int(np.argmax(spec.power))
    3
    """
    rho = np.asarray(density, dtype=float)
    if rho.ndim != 1 or rho.size < 8:
        raise ValueError("density must be a 1-D array with at least 8 sites")
    if not (dx > 0 and k > 0):
        raise ValueError("dx and k must be positive")
    I = rho.size
    # x_j = (j + 1/2) dx only rotates the phase, which the modulus drops
    rho_hat = dx * np.fft.rfft(rho - rho.mean())
    power = np.abs(rho_hat) ** 2 / k
    power[0] = 0.0
    lam = 2.0 * math.pi * np.arange(power.size) / (I * dx)
    return SpectrumResult(lam, power)


def _nearest(times: np.ndarray, t: float, tol: float) -> int | None:
    j = int(np.argmin(np.abs(times - t)))
    return j if abs(times[j] - t) <= tol else None


def time_averaged_spectrum(snapshots, t_start: float, t_end: float, interval: float,
                           dx: float, k: float = 1.0) -> SpectrumResult:
    """Mean power over snapshots nearest to ``t_start, t_start+interval, ..., t_end``.

    A requested time is matched to the nearest snapshot within half the
    snapshot cadence; unmatched times are skipped.
    """
    snaps = list(snapshots)
    if not snaps:
        raise ValueError("no snapshots")
    if not (interval > 0 and t_end >= t_start):
        raise ValueError("need interval > 0 and t_end >= t_start")
    times = np.array([s.t for s in snaps], dtype=float)
    cadence = float(np.median(np.diff(np.unique(times)))) if times.size > 1 else interval
    tol = 0.5 * cadence * (1 + 1e-9)
    n_req = int(math.floor((t_end - t_start) / interval + 1e-9)) + 1
    picked = []
    for m in range(n_req):
        j = _nearest(times, t_start + m * interval, tol)
        if j is not None:
            picked.append(j)
    if not picked:
        raise ValueError(f"no snapshots inside [{t_start}, {t_end}]")
    specs = [power_spectrum(snaps[j].rho, dx, k) for j in picked]
    mean = np.mean([s.power for s in specs], axis=0)
    return SpectrumResult(specs[0].wavenumbers, mean, (t_start, t_end, interval))


def plateau_median(spec: SpectrumResult) -> float:
    return float(np.median(spec.power[spec.plateau_band]))


def detect_first_peak(spec: SpectrumResult, lambda_max: float):
    """Largest local maximum with ``0 < lambda < lambda_max``.

    Returns ``(lambda_peak, prominence)`` where prominence is the peak power over
    the plateau median, or ``None`` when no local maximum exceeds
    ``PEAK_THRESHOLD`` times that median.
    """
    p = spec.power
    if p.size < 3:
        return None
    base = plateau_median(spec)
    lam = spec.wavenumbers
    # local maxima, interior points only (n = 0 is the zeroed DC entry)
    n = np.arange(1, p.size - 1)
    cand = n[(p[n] > p[n - 1]) & (p[n] >= p[n + 1]) & (lam[n] < lambda_max)]
    if cand.size == 0:
        return None
    best = cand[np.argmax(p[cand])]
    if base <= 0.0:
        return (float(lam[best]), math.inf) if p[best] > 0 else None
    prom = float(p[best] / base)
    if prom <= PEAK_THRESHOLD:
        return None
    return float(lam[best]), prom


def spacetime_map(snapshots, dx: float) -> np.ndarray:
    """Long-form ``(t, x, rho)`` rows sorted by ``(t, x)``."""
    snaps = sorted(snapshots, key=lambda s: s.t)
    if len(snaps) < 2:
        raise ValueError("need at least 2 snapshots")
    rows = []
    for s in snaps:
        x = (np.arange(s.rho.size) + 0.5) * dx
        rows.append(np.column_stack([np.full(s.rho.size, s.t), x, s.rho]))
    return np.vstack(rows)


@dataclass(frozen=True)
class PatternMetrics:
    min_density: float
    max_density: float
    oscillation_class: str


def pattern_metrics(density) -> PatternMetrics:
    """Classify a profile as "oscillatory", "spike" or "intermediate" by its minimum."""
    rho = np.asarray(getattr(density, "rho", density), dtype=float)
    lo, hi = float(rho.min()), float(rho.max())
    if lo > OSCILLATORY_MIN:
        cls = "oscillatory"
    elif lo < SPIKE_MIN:
        cls = "spike"
    else:
        cls = "intermediate"
    return PatternMetrics(lo, hi, cls)
