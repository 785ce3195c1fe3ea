import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from stiffchemo import mc
from stiffchemo._backend import HAVE_COMPILED
from stiffchemo.field import FieldGrid
from stiffchemo.model import TABLE1, ModelParams, ResponseFunction, params_from_table1
from stiffchemo.rng import CounterRNG

BACKENDS = ["python"] + (["compiled"] if HAVE_COMPILED else [])
needs_compiled = pytest.mark.skipif(not HAVE_COMPILED, reason="compiled extension not built")


def small_cfg(**kw):
    base = dict(params=params_from_table1(*TABLE1["B"], k=0.1), L=10.0, I=200, M=100,
                t_end=2.0, seed=3, snapshot_every=0.5)
    base.update(kw)
    return mc.McConfig(**base)


@pytest.mark.parametrize("backend", BACKENDS)
def test_init_exactly_M_per_site(backend):
    cfg = small_cfg(M=37, I=50, L=5.0)
    ens = mc.init_uniform(cfg, backend=backend)
    assert ens.count == 37 * 50
    counts = np.bincount(mc._sites(ens.x, cfg.dx, cfg.I), minlength=cfg.I)
    assert np.all(counts == 37)
    np.testing.assert_allclose(np.sum(ens.v**2, axis=0), 1.0, atol=1e-12)


def test_initial_velocities_isotropic():
    ens = mc.init_uniform(small_cfg(M=100, I=100), backend="python")
    # vx of an isotropic unit vector is uniform on [-1, 1]
    assert stats.kstest(ens.v[0], "uniform", args=(-1, 2)).pvalue > 1e-3
    az = np.arctan2(ens.v[2], ens.v[1])
    assert stats.kstest(az, "uniform", args=(-math.pi, 2 * math.pi)).pvalue > 1e-3


@given(st.floats(0, 9.999), st.floats(-1, 1), st.floats(1e-4, 0.5))
def test_step_move_stays_in_domain(x0, vx, dt):
    L = 10.0
    s = math.sqrt(1 - vx * vx)
    ens = mc.ParticleEnsemble.from_arrays([x0], [[vx], [s], [0.0]], L)
    mc.step_move(ens, dt, L)
    assert 0.0 <= ens.x[0] < L
    expected = (x0 + vx * dt) % L
    assert min(abs(ens.x[0] - expected), L - abs(ens.x[0] - expected)) < 1e-9


def test_compute_density():
    grid = FieldGrid(4, 0.25)
    ens = mc.ParticleEnsemble.from_arrays([0.1, 0.2, 0.6, 0.99], np.zeros((3, 4)), 1.0)
    np.testing.assert_array_equal(mc.compute_density(ens, grid, 2), [1.0, 0.0, 0.5, 0.5])


def test_interpolate_logS_linear_field():
    grid = FieldGrid(100, 0.1)
    xc = (np.arange(100) + 0.5) * 0.1
    S = np.exp(0.01 * np.sin(2 * np.pi * xc / 10))
    x = np.array([2.03, 5.51, 7.77])
    got = mc.interpolate_logS(S, x, grid)
    np.testing.assert_allclose(got, 0.01 * np.sin(2 * np.pi * x / 10), atol=5e-6)


def test_log_field_rejects_nonpositive():
    with pytest.raises(ValueError):
        mc.log_field([1.0, 0.0, 1.0], 0.1)


def test_sensed_derivative():
    assert mc.sensed_material_derivative(1.5, 1.0, 0.5) == pytest.approx(1.0)


@pytest.mark.parametrize("backend", BACKENDS)
def test_tumble_probability(backend):
    # chi = 0 makes K = 1, so the tumble fraction is dt/k
    n, dt, k = 200_000, 0.01, 0.5
    rng = np.random.default_rng(0)
    v = mc.random_unit_velocity(rng.random(n), rng.random(n))
    ens = mc.ParticleEnsemble.from_arrays(rng.uniform(0, 10, n), v, 10.0)
    before = ens.v.copy()
    S = np.ones(100)
    mc.step_tumble(ens, S, 0.1, dt, k, ResponseFunction(0.0, 1.0), CounterRNG(5).key(1),
                   backend=backend)
    changed = np.count_nonzero(np.any(ens.v != before, axis=0))
    p = dt / k
    assert abs(changed - n * p) < 5 * math.sqrt(n * p * (1 - p))
    np.testing.assert_allclose(np.sum(ens.v**2, axis=0), 1.0, atol=1e-12)


def test_tumble_suppressed_up_gradient():
    # a particle sensing a strong increase tumbles at rate (1 - chi)/k
    n, dt, k, chi = 100_000, 0.01, 0.5, 0.9
    L, I = 10.0, 100
    dx = L / I
    ens = mc.ParticleEnsemble.from_arrays(np.full(n, 5.05), np.tile([[1.0], [0.0], [0.0]], n),
                                          L, logS_prev=np.full(n, -1.0))
    before = ens.v.copy()
    mc.step_tumble(ens, np.ones(I), dx, dt, k, ResponseFunction(chi, 1e-3),
                   CounterRNG(9).key(2))
    changed = np.count_nonzero(np.any(ens.v != before, axis=0))
    p = dt / k * (1 - chi)
    assert abs(changed - n * p) < 5 * math.sqrt(n * p * (1 - p))


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("rho_val", [0.5, 1.5])
def test_growth_probability(backend, rho_val):
    n, dt, I, dx = 100_000, 0.02, 10, 1.0
    rng = np.random.default_rng(1)
    ens = mc.ParticleEnsemble.from_arrays(rng.uniform(0, 10, n), np.tile([[1.0], [0], [0]], n),
                                          10.0)
    rho = np.full(I, rho_val)
    mc.step_growth(ens, rho, dx, dt, CounterRNG(2).key(3), backend=backend)
    p = abs(1 - rho_val) * dt
    change = ens.count - n
    assert math.copysign(1, change) == math.copysign(1, 1 - rho_val)
    assert abs(abs(change) - n * p) < 5 * math.sqrt(n * p * (1 - p))
    assert np.all((ens.x >= 0) & (ens.x < 10.0))


@pytest.mark.parametrize("backend", BACKENDS)
def test_daughters_stay_in_parent_site(backend):
    n, I, dx = 2000, 20, 0.5
    x = (np.arange(n) % I + 0.5) * dx
    rng = np.random.default_rng(4)
    v = mc.random_unit_velocity(rng.random(n), rng.random(n))
    ens = mc.ParticleEnsemble.from_arrays(x, v, I * dx, logS_prev=np.arange(n, dtype=float))
    mc.step_growth(ens, np.zeros(I), dx, 1.0, CounterRNG(0).key(1), backend=backend)
    # P = 1 and dt = 1: every particle divides
    assert ens.count == 2 * n
    np.testing.assert_array_equal(mc._sites(ens.x[n:], dx, I), mc._sites(x, dx, I))
    np.testing.assert_array_equal(ens.v[:, n:], v)
    np.testing.assert_array_equal(ens.logS_prev[n:], np.arange(n))


@pytest.mark.parametrize("backend", BACKENDS)
def test_deaths_compact_the_arrays(backend):
    n, I, dx = 1000, 10, 1.0
    x = (np.arange(n) % I + 0.5) * dx
    ens = mc.ParticleEnsemble.from_arrays(x, np.tile([[0.0], [1.0], [0.0]], n), 10.0,
                                          logS_prev=np.arange(n, dtype=float))
    rho = np.where(np.arange(I) < 5, 2.0, 1.0)  # death certain in sites 0..4, none elsewhere
    mc.step_growth(ens, rho, dx, 1.0, CounterRNG(0).key(1), backend=backend)
    assert ens.count == n // 2
    assert np.all(ens.x >= 5.0)
    # survivors keep their own memory
    assert sorted(ens.logS_prev.astype(int)) == [i for i in range(n) if i % I >= 5]


def test_config_validation():
    p = params_from_table1(*TABLE1["B"], k=0.1)
    with pytest.raises(ValueError):
        mc.McConfig(params=p, dt=0.2)  # tumble probability > 1
    with pytest.raises(ValueError):
        mc.McConfig(params=p, I=2)
    with pytest.raises(ValueError):
        mc.McConfig(params=p, snapshot_every=0.0123)
    with pytest.raises(ValueError):
        mc.McConfig(params=p, threads=0)


def _run_arrays(cfg, backend):
    sim = mc.McSimulation(cfg, backend=backend)
    snaps = list(sim.iter_snapshots())
    return snaps, sim


def test_snapshot_times_and_counts():
    snaps, sim = _run_arrays(small_cfg(), "python")
    np.testing.assert_allclose([s.t for s in snaps], [0, 0.5, 1.0, 1.5, 2.0])
    assert snaps[0].count == sim.n0 == 20000
    for s in snaps:
        assert s.rho.sum() * 100 == pytest.approx(s.count)


@needs_compiled
def test_backends_bit_identical():
    cfg = small_cfg()
    a, sa = _run_arrays(cfg, "python")
    b, sb = _run_arrays(cfg, "compiled")
    assert [s.count for s in a] == [s.count for s in b]
    for s, t in zip(a, b):
        np.testing.assert_array_equal(s.rho, t.rho)
    np.testing.assert_array_equal(sa.ens.x, sb.ens.x)
    np.testing.assert_array_equal(sa.ens.v, sb.ens.v)
    assert sa.n_tumbles == sb.n_tumbles


@needs_compiled
def test_thread_count_does_not_change_results():
    a, sa = _run_arrays(small_cfg(), "compiled")
    b, sb = _run_arrays(small_cfg(threads=3), "compiled")
    for s, t in zip(a, b):
        np.testing.assert_array_equal(s.rho, t.rho)
    np.testing.assert_array_equal(sa.ens.x, sb.ens.x)


def test_seed_determinism():
    a, _ = _run_arrays(small_cfg(t_end=1.0), None)
    b, _ = _run_arrays(small_cfg(t_end=1.0), None)
    c, _ = _run_arrays(small_cfg(t_end=1.0, seed=4), None)
    np.testing.assert_array_equal(a[-1].rho, b[-1].rho)
    assert not np.array_equal(a[-1].rho, c[-1].rho)


def test_no_growth_conserves_count():
    snaps, _ = _run_arrays(small_cfg(growth=False), None)
    assert {s.count for s in snaps} == {20000}


def test_runaway_population_aborts():
    sim = mc.McSimulation(small_cfg(max_growth=2.0))
    sim.n0 = 1000  # pretend the run started from far fewer particles
    with pytest.raises(mc.McAbort, match="exceeds"):
        sim.step()


@settings(max_examples=10)
@given(st.integers(0, 2**32))
def test_neutral_mean_density_is_exact(seed):
    p = ModelParams(k=1.0, d=0.5, chi=0.0, delta=1.0)
    cfg = mc.McConfig(params=p, L=2.0, I=40, M=20, t_end=0.5, seed=seed, growth=False,
                      snapshot_every=0.5)
    snaps = mc.run(cfg)
    assert snaps[-1].rho.mean() == 1.0
