"""Exact Brownian transition kernels against closed forms and quadrature."""

import math

import numpy as np
import pytest
from scipy.special import ndtr
from scipy import integrate

from spiderdiff import (kernel_from_junction, kernel_general, triple_density,
                        triple_density_mass)
from spiderdiff.kernels import first_passage_density
from spiderdiff.presets import brownian_spider
from spiderdiff.quadrature import adaptive_gl


def test_triple_density_supported_on_positive_octant():
    assert triple_density(0.0, 1.0, 0.5, 1.0) == 0.0
    assert triple_density(1.0, 0.0, 0.5, 1.0) == 0.0
    assert triple_density(1.0, 1.0, 0.0, 1.0) == 0.0
    assert triple_density(1.0, 1.0, 1.0, 1.0) == 0.0
    assert triple_density(0.5, 0.5, 0.5, 1.0) > 0.0
    with pytest.raises(ValueError):
        triple_density(0.5, 0.5, 0.5, 1.0, variant="bogus")


def test_triple_density_weighted_variant_is_printed_times_ell():
    x, ell, s, t = 0.7, 0.4, 0.3, 1.0
    printed = triple_density(x, ell, s, t, "printed")
    weighted = triple_density(x, ell, s, t, "local-time-weighted")
    assert weighted == pytest.approx(printed * ell, rel=1e-14)


def test_weighted_triple_density_is_a_probability_density():
    assert triple_density_mass(1.0, "local-time-weighted") == \
        pytest.approx(1.0, abs=1e-8)
    assert triple_density_mass(0.5, "local-time-weighted") == \
        pytest.approx(1.0, abs=1e-8)


def test_printed_triple_density_mass_diverges_logarithmically():
    # the s-integrand behaves like 1/s near 0: mass grows without bound
    masses = [triple_density_mass(1.0, "printed", s_min=sm)
              for sm in (0.1, 0.01, 0.001)]
    assert masses[0] < masses[1] < masses[2]
    gaps = np.diff(masses)
    # log-divergence: equal decade steps add roughly equal mass
    assert gaps[1] == pytest.approx(gaps[0], rel=0.1)


def test_first_passage_density_normalizes_and_scales():
    for x in (0.3, 1.0, 2.5):
        val, _ = integrate.quad(first_passage_density, 0.0, np.inf, args=(x,))
        assert val == pytest.approx(1.0, abs=1e-8)
    # P(hit by tau) = 2 (1 - Phi(x / sqrt(tau)))
    x, tau = 1.0, 2.0
    val, _ = integrate.quad(first_passage_density, 0.0, tau, args=(x,))
    assert val == pytest.approx(2.0 * (1.0 - ndtr(x / math.sqrt(tau))),
                                abs=1e-8)


def test_kernels_require_unit_brownian_coefficients():
    from spiderdiff.presets import constant_coefficients
    cs = constant_coefficients(2, [2.0, 1.0], [0.0, 0.0], [0.5, 0.5])
    with pytest.raises(ValueError):
        kernel_from_junction(cs, 0.0, 0.0, 1.0)


def test_junction_kernel_matches_constant_alpha_closed_form():
    # from the vertex with alpha constant the y-marginal on branch j is
    # alpha_j times the local-time-weighted last-zero mixture, whose
    # closed form is alpha_j 2 (y + l_shift) phi-type kernel; here l = 0
    # gives the plain half-normal derivative form
    cs = brownian_spider(3, "constant", [0.5, 0.3, 0.2])
    tau = 0.7
    ker = kernel_from_junction(cs, 0.2, 0.4, 0.2 + tau,
                               variant="local-time-weighted")
    y = np.array([0.3, 1.0])
    ell = np.array([0.2, 0.5])
    for j, aj in ((1, 0.5), (3, 0.2)):
        got = ker.density(y, ell, j)
        tot = y + ell
        expect = (aj * 2.0 * tot / math.sqrt(2 * math.pi * tau**3)
                  * np.exp(-tot**2 / (2 * tau)))
        assert np.allclose(got, expect, rtol=1e-6)


def test_junction_kernel_has_no_atom_and_unit_mass():
    cs = brownian_spider(2, "l-dependent")
    ker = kernel_from_junction(cs, 0.0, 0.5, 1.0,
                               variant="local-time-weighted")
    assert ker.atom_mass == 0.0
    assert ker.total_mass() == pytest.approx(1.0, abs=1e-6)


def test_junction_kernel_branch_masses_match_spinning_average():
    # constant-in-time weights: branch mass j = E alpha_j(l + L) with L
    # the local time accrued over tau, distributed as |N(0, tau)|
    cs = brownian_spider(2, "l-dependent")
    l0, tau = 0.3, 0.8
    ker = kernel_from_junction(cs, 0.0, l0, tau,
                               variant="local-time-weighted")
    masses = ker.branch_masses()

    def integrand(L):
        a = cs.alpha(0.0, l0 + L)
        dens = 2.0 / math.sqrt(2 * math.pi * tau) * np.exp(-L**2 / (2 * tau))
        return np.asarray(a[0]) * dens

    expect, _ = adaptive_gl(integrand, 0.0, 12 * math.sqrt(tau), tol=1e-10)
    assert masses[0] == pytest.approx(float(expect), abs=1e-5)
    assert sum(masses) == pytest.approx(1.0, abs=1e-5)


def test_junction_kernel_cell_masses_consistent_with_density():
    cs = brownian_spider(2, "l-dependent")
    ker = kernel_from_junction(cs, 0.0, 0.2, 1.0,
                               variant="local-time-weighted")
    y_edges = np.array([0.2, 0.6, 1.0])
    l_edges = np.array([0.1, 0.5])
    cells = ker.cell_masses(y_edges, l_edges, 1, n_nodes=12)
    assert cells.shape == (2, 1)
    # midpoint-rule cross-check on the first cell
    yy = np.linspace(0.2, 0.6, 41)[:-1] + 0.005
    ll = np.linspace(0.1, 0.5, 41)[:-1] + 0.005
    Y, L = np.meshgrid(yy, ll, indexing="ij")
    approx = np.sum(ker.density(Y.ravel(), L.ravel(), 1)) * 0.01 * 0.01
    assert cells[0, 0] == pytest.approx(approx, rel=2e-3)


def test_time_conventions_differ_for_time_dependent_alpha():
    from spiderdiff.presets import trig_in_t
    # half-period sine: nonzero mean against the symmetric last-zero law
    cs = trig_in_t(2, [1.0, 1.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0],
                   [0.5, 0.5], [0.2, -0.2], omega=math.pi)
    a = kernel_from_junction(cs, 0.0, 0.0, 1.0,
                             variant="local-time-weighted",
                             time_convention="printed")
    b = kernel_from_junction(cs, 0.0, 0.0, 1.0,
                             variant="local-time-weighted",
                             time_convention="elapsed")
    ma, mb = a.branch_masses(), b.branch_masses()
    assert abs(ma[0] - mb[0]) > 1e-3
    assert sum(ma) == pytest.approx(1.0, abs=1e-5)
    assert sum(mb) == pytest.approx(1.0, abs=1e-5)


def test_general_kernel_atom_matches_closed_form():
    cs = brownian_spider(2)
    for x, tau in ((0.1, 0.5), (1.0, 1.0), (2.0, 0.25)):
        ker = kernel_general(cs, 0.0, x, 1, 0.0, tau)
        exact = 2.0 * ndtr(x / math.sqrt(tau)) - 1.0
        assert ker.atom_mass_exact == pytest.approx(exact, abs=1e-15)
        assert ker.atom_mass == pytest.approx(exact, abs=1e-9)


def test_general_kernel_total_mass_is_one():
    cs = brownian_spider(2, "l-dependent")
    ker = kernel_general(cs, 0.0, 0.5, 1, 0.3, 1.0,
                         variant="local-time-weighted")
    assert ker.total_mass() == pytest.approx(1.0, abs=1e-5)
    assert ker.atom_mass + ker.continuous_mass() == \
        pytest.approx(ker.total_mass(), abs=1e-12)


def test_general_kernel_atom_density_is_killed_heat_kernel():
    cs = brownian_spider(2)
    ker = kernel_general(cs, 0.0, 1.0, 1, 0.0, 1.0)
    y = np.array([0.5, 1.0, 2.0])
    phi = lambda z: np.exp(-z**2 / 2) / math.sqrt(2 * math.pi)
    expect = phi(y - 1.0) - phi(y + 1.0)
    assert np.allclose(ker.atom_density(y), expect, atol=1e-14)
    assert ker.atom_density(np.array([-0.5]))[0] == 0.0


def test_general_kernel_reduces_to_junction_as_x_shrinks():
    cs = brownian_spider(2, "constant", [0.6, 0.4])
    jker = kernel_from_junction(cs, 0.0, 0.0, 1.0,
                                variant="local-time-weighted")
    gker = kernel_general(cs, 0.0, 1e-3, 1, 0.0, 1.0,
                          variant="local-time-weighted")
    y = np.array([0.4, 0.9])
    ell = np.array([0.3, 0.6])
    for j in (1, 2):
        assert np.allclose(gker.density(y, ell, j), jker.density(y, ell, j),
                           rtol=5e-3)
