"""Model functions and parameters shared by every solver.

All quantities are nondimensional. The response function is the tanh
family ``F[X] = chi * tanh(X / delta)``, the tumbling kernel is
``K = 1 - F`` and population growth is logistic, ``P[rho] = 1 - rho``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ModelParams",
    "ResponseFunction",
    "TABLE1",
    "TABLE1_CLASSIFICATION",
    "growth_P",
    "params_from_table1",
    "response_F",
    "stiffness_ratio",
    "tumbling_kernel_K",
]


@dataclass(frozen=True)
class ResponseFunction:
    """Bounded chemotactic response ``chi * tanh(X / delta)``."""

    chi: float
    delta: float

    def __post_init__(self):
        if not (0.0 <= self.chi < 1.0):
            raise ValueError(f"chi must lie in [0, 1), got {self.chi}")
        if not self.delta > 0.0:
            raise ValueError(f"delta must be positive, got {self.delta}")

    @property
    def slope_at_zero(self) -> float:
        return self.chi / self.delta

    def __call__(self, x):
        return response_F(x, self)


@dataclass(frozen=True)
class ModelParams:
    """Nondimensional kinetic-model parameters.

    Parameters
    ----------
    k : float
        Ratio of mean run time to the growth time scale (> 0).
    d : float
        Chemoattractant diffusion coefficient (>= 0).
    chi : float
        Modulation amplitude of the response, ``0 <= chi < 1``.
    delta : float
        Response width (> 0); the stiffness is ``chi / delta``.
    """

    k: float
    d: float
    chi: float
    delta: float

    def __post_init__(self):
        if not self.k > 0.0:
            raise ValueError(f"k must be positive, got {self.k}")
        if not self.d >= 0.0:
            raise ValueError(f"d must be non-negative, got {self.d}")
        # delegates the chi/delta checks
        ResponseFunction(self.chi, self.delta)

    @property
    def response(self) -> ResponseFunction:
        return ResponseFunction(self.chi, self.delta)

    @property
    def stiffness(self) -> float:
        """Slope of the response at zero, F'[0] = chi/delta."""
        return self.chi / self.delta

    def table1(self) -> tuple[float, float, float]:
        """Return the ``(d/k, chi/sqrt(k), sqrt(k)*delta)`` triple."""
        sk = math.sqrt(self.k)
        return (self.d / self.k, self.chi / sk, sk * self.delta)


def params_from_table1(d_over_k: float, chi_over_sqrtk: float, sqrtk_delta: float,
                       k: float) -> ModelParams:
    """Convert a ``(d/k, chi/sqrt(k), sqrt(k)*delta)`` triple to raw parameters."""
    sk = math.sqrt(k)
    return ModelParams(k=k, d=d_over_k * k, chi=chi_over_sqrtk * sk, delta=sqrtk_delta / sk)


# (d/k, chi/sqrt(k), sqrt(k)*delta)
TABLE1 = {
    "A": (1.0, 0.5, 0.05),
    "B": (1.0, 0.5, 0.0625),
    "C": (0.7, 0.5, 0.0625),
    "D": (1.0, 0.5, 0.1),
}

# (set, k) -> linearly unstable?
TABLE1_CLASSIFICATION = {
    ("A", 1.0): True,
    ("A", 2.0): False,
    ("B", 0.1): True,
    ("B", 1.0): False,
    ("C", 1.0): True,
    ("C", 2.0): False,
    ("D", 1.0): False,
}


def response_F(x, rf: ResponseFunction):
    return rf.chi * np.tanh(np.divide(x, rf.delta))


def tumbling_kernel_K(x, rf: ResponseFunction):
    return 1.0 - response_F(x, rf)


def growth_P(rho):
    """Logistic growth rate, positive below the carrying density 1."""
    return 1.0 - np.asarray(rho, dtype=float) if np.ndim(rho) else 1.0 - float(rho)


def stiffness_ratio(p: ModelParams) -> float:
    """F'[0]/k, the left-hand side of the kinetic instability test."""
    return p.chi / (p.delta * p.k)
