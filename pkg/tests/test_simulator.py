"""Frozen-coefficient Euler scheme: determinism, invariants, known laws."""

import math

import numpy as np
import pytest
from scipy import stats
from scipy.special import ndtr

from spiderdiff import (FreezingGrid, JunctionPoint, SchemeConfig,
                        SpiderState, marginal_statistics, simulate_ensemble,
                        simulate_path)
from spiderdiff.junction import CoefficientSet
from spiderdiff.presets import brownian_spider, constant_coefficients

VERTEX = SpiderState(t=0.0, point=JunctionPoint(1, 0.0), l=0.0)


def wrap_nonconstant(cs):
    """Strip the constant-coefficient markers to force the generic path."""
    sigma = tuple((lambda t, x, l, g=g: g(t, x, l)) for g in cs.sigma)
    b = tuple((lambda t, x, l, g=g: g(t, x, l)) for g in cs.b)
    return CoefficientSet(I=cs.I, sigma=sigma, b=b, alpha=cs.alpha,
                          bounds=cs.bounds)


def test_freezing_grid_step_map():
    grid = FreezingGrid(n=4, T=2.0)
    assert np.allclose(grid.knots, [0.0, 0.5, 1.0, 1.5, 2.0])
    u = np.array([0.0, 0.49, 0.5, 1.99, 2.0])
    assert np.allclose(grid.eta(u), [0.0, 0.0, 0.5, 1.5, 2.0])


def test_config_validation():
    with pytest.raises(ValueError):
        SchemeConfig(n_freeze=0, n_fine=4, T=1.0)
    with pytest.raises(ValueError):
        SchemeConfig(n_freeze=2, n_fine=4, T=1.0, crossing="midpoint")
    with pytest.raises(ValueError):
        SchemeConfig(n_freeze=2, n_fine=4, T=1.0, record_every=3)


def test_ensemble_is_deterministic():
    cs = brownian_spider(3, "l-dependent")
    cfg = SchemeConfig(n_freeze=4, n_fine=8, T=0.5, seed=5)
    a = simulate_ensemble(cs, VERTEX, cfg, 50)
    b = simulate_ensemble(cs, VERTEX, cfg, 50)
    assert np.array_equal(a.x, b.x)
    assert np.array_equal(a.branch, b.branch)
    assert np.array_equal(a.l, b.l)


def test_paths_independent_of_ensemble_size_and_offset():
    cs = brownian_spider(2)
    cfg = SchemeConfig(n_freeze=4, n_fine=8, T=0.5, seed=9)
    big = simulate_ensemble(cs, VERTEX, cfg, 40)
    small = simulate_ensemble(cs, VERTEX, cfg, 10)
    assert np.array_equal(big.x[:10], small.x[:10])
    shifted = simulate_ensemble(cs, VERTEX, cfg, 10, path_offset=25)
    assert np.array_equal(shifted.x, big.x[25:35])
    single = simulate_path(cs, VERTEX, cfg, path_index=7)
    assert np.array_equal(single.x, big.x[7])


def test_path_invariants_hold():
    cs = brownian_spider(3, "l-dependent")
    cfg = SchemeConfig(n_freeze=8, n_fine=16, T=1.0, seed=1)
    ens = simulate_ensemble(cs, VERTEX, cfg, 30)
    for k in range(ens.n_paths):
        ens.path(k).check_invariants()


def test_recording_cadence_subsamples_full_grid():
    cs = brownian_spider(2)
    full = SchemeConfig(n_freeze=4, n_fine=16, T=1.0, seed=3)
    thin = SchemeConfig(n_freeze=4, n_fine=16, T=1.0, seed=3, record_every=8)
    a = simulate_ensemble(cs, VERTEX, full, 20)
    b = simulate_ensemble(cs, VERTEX, thin, 20)
    assert len(b.times) == 9
    assert np.allclose(b.times, a.times[::8])
    assert np.array_equal(b.x, a.x[:, ::8])
    assert np.array_equal(b.l, a.l[:, ::8])


def test_generic_and_constant_paths_agree():
    # the numba fast path and the generic numpy loop consume the same
    # uniforms; their inverse CDFs agree to roundoff
    cs = brownian_spider(2)
    cfg = SchemeConfig(n_freeze=4, n_fine=32, T=1.0, seed=21)
    fast = simulate_ensemble(cs, VERTEX, cfg, 200)
    slow = simulate_ensemble(wrap_nonconstant(cs), VERTEX, cfg, 200)
    assert np.array_equal(fast.branch, slow.branch)
    assert np.allclose(fast.x, slow.x, atol=1e-9)
    assert np.allclose(fast.l, slow.l, atol=1e-9)


def test_initial_state_respected():
    cs = brownian_spider(3)
    init = SpiderState(t=0.0, point=JunctionPoint(2, 1.5), l=0.3)
    cfg = SchemeConfig(n_freeze=2, n_fine=4, T=0.25, seed=0)
    ens = simulate_ensemble(cs, init, cfg, 10)
    assert np.all(ens.x[:, 0] == 1.5)
    assert np.all(ens.branch[:, 0] == 2)
    assert np.all(ens.l[:, 0] == 0.3)


def test_initial_vertex_label_drawn_from_alpha():
    cs = brownian_spider(3, "constant", [0.7, 0.2, 0.1])
    cfg = SchemeConfig(n_freeze=1, n_fine=1, T=0.01, seed=2)
    ens = simulate_ensemble(cs, VERTEX, cfg, 4000)
    freq = np.array([np.mean(ens.branch[:, 0] == i) for i in (1, 2, 3)])
    assert np.allclose(freq, [0.7, 0.2, 0.1], atol=0.03)


def test_terminal_radial_law_is_half_normal():
    # fine steps keep the discrete-reflection bias (order sqrt(dt))
    # below the KS detection threshold at this sample size
    cs = brownian_spider(2)
    cfg = SchemeConfig(n_freeze=8, n_fine=256, T=1.0, seed=4,
                       record_every=2048)
    ens = simulate_ensemble(cs, VERTEX, cfg, 4000)
    d, p = stats.kstest(ens.x[:, -1], lambda q: 2 * ndtr(q) - 1)
    assert p > 1e-3
    # E l_T = E |B_T| = sqrt(2 T / pi)
    m = np.mean(ens.l[:, -1])
    se = np.std(ens.l[:, -1]) / math.sqrt(ens.n_paths)
    assert abs(m - math.sqrt(2.0 / math.pi)) < 4 * se + 0.02


def test_branch_frequencies_match_spinning_weights():
    cs = brownian_spider(3, "constant", [0.5, 0.3, 0.2])
    cfg = SchemeConfig(n_freeze=8, n_fine=16, T=1.0, seed=6,
                       record_every=128)
    ens = simulate_ensemble(cs, VERTEX, cfg, 4000)
    pos = ens.x[:, -1] > 0
    freq = np.array([np.mean(ens.branch[pos, -1] == i) for i in (1, 2, 3)])
    assert np.allclose(freq, [0.5, 0.3, 0.2], atol=0.035)


def test_occupation_accumulator_matches_recorded_grid():
    cs = brownian_spider(2)
    cfg = SchemeConfig(n_freeze=4, n_fine=32, T=1.0, seed=8,
                       occupation_eps=(0.05, 0.2))
    ens = simulate_ensemble(cs, VERTEX, cfg, 100)
    dt = np.diff(ens.times)
    for eps in (0.05, 0.2):
        direct = np.sum(dt[None, :] * (ens.x[:, :-1] < eps), axis=1)
        assert np.allclose(ens.occupation[eps], direct, atol=1e-12)


def test_drift_shifts_the_mean():
    cs = constant_coefficients(2, [1.0, 1.0], [1.0, 1.0], [0.5, 0.5])
    init = SpiderState(t=0.0, point=JunctionPoint(1, 5.0), l=0.0)
    cfg = SchemeConfig(n_freeze=4, n_fine=16, T=0.5, seed=10,
                       record_every=64)
    ens = simulate_ensemble(cs, init, cfg, 2000)
    m = np.mean(ens.x[:, -1])
    se = np.std(ens.x[:, -1]) / math.sqrt(2000)
    assert abs(m - 5.5) < 4 * se


def test_bridge_corrected_mode_runs_and_differs():
    cs = brownian_spider(2)
    base = SchemeConfig(n_freeze=4, n_fine=16, T=1.0, seed=12)
    bridged = SchemeConfig(n_freeze=4, n_fine=16, T=1.0, seed=12,
                           crossing="bridge-corrected")
    # wrap the base run so both runs take the generic numpy loop
    a = simulate_ensemble(wrap_nonconstant(cs), VERTEX, base, 200)
    b = simulate_ensemble(cs, VERTEX, bridged, 200)
    # with branch-independent coefficients the bridge correction only
    # redraws labels at unseen crossings: x and l are untouched, and
    # label changes away from grid zeros are expected
    assert np.array_equal(a.x, b.x)
    assert np.array_equal(a.l, b.l)
    assert not np.array_equal(a.branch, b.branch)
    assert np.all(b.x >= 0.0)
    assert np.all(np.diff(b.l, axis=1) >= 0.0)


def test_marginal_statistics_shapes():
    cs = brownian_spider(2)
    cfg = SchemeConfig(n_freeze=4, n_fine=4, T=1.0, seed=0)
    ens = simulate_ensemble(cs, VERTEX, cfg, 50)
    out = marginal_statistics(ens, 0.5)
    assert set(out) >= {"t", "x", "l", "branch_freq"}
    assert out["t"] == pytest.approx(0.5)
    assert len(out["branch_freq"]) == 2
    with pytest.raises(ValueError):
        ens.time_index(0.123)
