"""Closed-form linear stability of the flux-limited Keller-Segel limit.

Variables are the diffusion-scaled ones: ``k = eps^2``, ``x = eps*x_hat``,
``d = eps^2*d_hat`` and ``F'[0] = eps^2*Fp_hat``.  A Table 1 triple
``(d/k, chi/sqrt(k), sqrt(k)*delta)`` is exactly ``(d_hat, chi_hat, delta_hat)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams

__all__ = [
    "ContinuumParams",
    "continuum_growth_rate",
    "continuum_threshold",
    "most_unstable_mode",
    "scaled_params",
]


@dataclass(frozen=True)
class ContinuumParams:
    d_hat: float
    Fp_hat: float

    def __post_init__(self):
        if not self.d_hat > 0:
            raise ValueError("d_hat must be positive")
        if not self.Fp_hat >= 0:
            raise ValueError("Fp_hat must be non-negative")


def scaled_params(p: ModelParams) -> ContinuumParams:
    """Continuum parameters of a kinetic parameter set with eps = sqrt(k)."""
    return ContinuumParams(d_hat=p.d / p.k, Fp_hat=p.stiffness / p.k)


def continuum_growth_rate(lambda_hat, cp: ContinuumParams):
    l2 = np.square(lambda_hat)
    out = -1.0 + cp.Fp_hat * l2 / (3.0 * (1.0 + cp.d_hat * l2)) - l2 / 3.0
    return out if np.ndim(out) else float(out)


def continuum_threshold(d_hat: float) -> float:
    """Critical scaled stiffness ``(1 + sqrt(3 d_hat))^2``."""
    return (1.0 + math.sqrt(3.0 * d_hat)) ** 2


def most_unstable_mode(cp: ContinuumParams) -> float:
    """Scaled wavenumber maximising :func:`continuum_growth_rate`."""
    if cp.Fp_hat < 1.0:
        raise ValueError("Fp_hat < 1: the growth rate is maximal at lambda_hat = 0")
    return math.sqrt((math.sqrt(cp.Fp_hat) - 1.0) / cp.d_hat)
