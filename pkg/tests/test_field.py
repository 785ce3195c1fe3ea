import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stiffchemo._backend import HAVE_COMPILED
from stiffchemo.field import CyclicScreenedPoisson, FieldGrid, mass_identity_check, \
    solve_chemoattractant

backends = ["python"] + (["compiled"] if HAVE_COMPILED else [])


def _dense(I, d, dx):
    r = d / dx**2
    A = np.eye(I) * (1 + 2 * r)
    for i in range(I):
        A[i, (i + 1) % I] -= r
        A[i, (i - 1) % I] -= r
    return A


@pytest.mark.parametrize("backend", backends)
@pytest.mark.parametrize("I,m", [(8, 0), (8, 4), (64, 3), (2000, 68), (2000, 1000), (17, 5)])
def test_manufactured_cosine(backend, I, m):
    d, dx = 0.1, 0.05
    j = np.arange(I)
    rho = np.cos(2 * math.pi * m * j / I)
    symbol = 1 + 4 * d / dx**2 * math.sin(math.pi * m / I) ** 2
    S = CyclicScreenedPoisson(I, d, dx, backend=backend).solve(rho)
    assert np.max(np.abs(S - rho / symbol)) < 1e-12


@pytest.mark.parametrize("backend", backends)
def test_against_dense_solve(backend):
    rng = np.random.default_rng(5)
    I, d, dx = 50, 0.7, 0.2
    rho = rng.uniform(0, 2, I)
    S = CyclicScreenedPoisson(I, d, dx, backend=backend).solve(rho)
    np.testing.assert_allclose(S, np.linalg.solve(_dense(I, d, dx), rho), rtol=1e-12)


@given(arrays(float, st.integers(4, 300), elements=st.floats(0, 10)), st.floats(0, 10),
       st.floats(0.01, 1))
def test_mass_identity(rho, d, dx):
    S = solve_chemoattractant(rho, d, dx)
    assert mass_identity_check(rho, S) < 1e-10 * max(1.0, float(np.sum(rho)))


def test_uniform_and_zero_diffusion():
    np.testing.assert_allclose(solve_chemoattractant(np.ones(10), 1.0, 0.1), 1.0, rtol=1e-13)
    rho = np.linspace(0.1, 2, 12)
    np.testing.assert_allclose(solve_chemoattractant(rho, 0.0, 0.1), rho, rtol=1e-14)


def test_positivity():
    rho = np.zeros(40)
    rho[3] = 1.0
    assert np.all(solve_chemoattractant(rho, 0.5, 0.1) > 0)


@pytest.mark.skipif(not HAVE_COMPILED, reason="compiled extension not built")
def test_backends_agree():
    rng = np.random.default_rng(1)
    rho = rng.uniform(0, 3, 2000)
    a = CyclicScreenedPoisson(2000, 0.1, 0.05, backend="python").solve(rho)
    b = CyclicScreenedPoisson(2000, 0.1, 0.05, backend="compiled").solve(rho)
    np.testing.assert_allclose(a, b, rtol=1e-13)


def test_rejects_bad_input():
    solver = CyclicScreenedPoisson(10, 1.0, 0.1)
    with pytest.raises(ValueError):
        solver.solve(np.ones(9))
    with pytest.raises(ValueError):
        solver.solve(np.full(10, np.nan))
    with pytest.raises(ValueError):
        CyclicScreenedPoisson(3, 1.0, 0.1)
    with pytest.raises(ValueError):
        CyclicScreenedPoisson(10, -1.0, 0.1)


def test_field_grid():
    g = FieldGrid(4, 0.5)
    assert g.L == 2.0
    np.testing.assert_allclose(g.centers, [0.25, 0.75, 1.25, 1.75])
    with pytest.raises(ValueError):
        FieldGrid(4, 0.5, rho=np.ones(3))
