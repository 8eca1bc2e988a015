"""Adaptive Gauss-Legendre quadrature, plain and endpoint-regularized."""

import numpy as np
import pytest

from spiderdiff.quadrature import (QuadratureError, adaptive_gl,
                                   adaptive_gl_trig)


def test_polynomial_exactness():
    val, err = adaptive_gl(lambda x: 3 * x**2, 0.0, 2.0, tol=1e-12)
    assert val == pytest.approx(8.0, abs=1e-12)


def test_oscillatory_integrand():
    val, err = adaptive_gl(np.sin, 0.0, 20.0, tol=1e-10)
    assert val == pytest.approx(1.0 - np.cos(20.0), abs=1e-9)


def test_gaussian_tail():
    val, err = adaptive_gl(lambda x: np.exp(-x**2 / 2) / np.sqrt(2 * np.pi),
                           0.0, 12.0, tol=1e-12)
    assert val == pytest.approx(0.5, abs=1e-11)


def test_vector_valued_integrand():
    # integrate [x, x^2, sin x] simultaneously
    f = lambda x: np.stack([x, x**2, np.sin(x)], axis=-1)
    val, err = adaptive_gl(f, 0.0, 1.0, tol=1e-11)
    assert val.shape == (3,)
    assert np.allclose(val, [0.5, 1.0 / 3.0, 1.0 - np.cos(1.0)], atol=1e-10)


def test_error_estimate_is_honest():
    for tol in (1e-6, 1e-9):
        val, err = adaptive_gl(lambda x: np.exp(x) * np.cos(5 * x),
                               0.0, 3.0, tol=tol)
        exact = (np.exp(3.0) * (np.cos(15.0) + 5 * np.sin(15.0)) - 1.0) / 26.0
        assert abs(val - exact) <= max(err, tol)


def test_raises_on_hopeless_integrand():
    # non-integrable singularity never settles
    with pytest.raises(QuadratureError) as exc:
        adaptive_gl(lambda x: 1.0 / x, 0.0, 1.0, tol=1e-8, max_depth=12)
    assert exc.value.achieved > 1e-8


def test_trig_substitution_handles_inverse_sqrt_endpoints():
    # int_0^1 dx / sqrt(x(1-x)) = pi, singular at both endpoints
    f = lambda x: 1.0 / np.sqrt(x * (1.0 - x))
    val, err = adaptive_gl_trig(f, 1.0, tol=1e-10)
    assert val == pytest.approx(np.pi, abs=1e-9)


def test_trig_substitution_partial_interval():
    # int_a^T x^{-1/2} dx = 2 (sqrt(T) - sqrt(a))
    val, err = adaptive_gl_trig(lambda x: 1.0 / np.sqrt(x), 4.0, a=1.0,
                                tol=1e-10)
    assert val == pytest.approx(2.0, abs=1e-9)


def test_trig_substitution_empty_interval():
    val, err = adaptive_gl_trig(lambda x: x, 1.0, a=1.0)
    assert val == 0.0 and err == 0.0


def test_trig_substitution_vector_integrand():
    f = lambda x: np.stack([np.ones_like(x), x], axis=-1) / np.sqrt(x)[:, None]
    val, err = adaptive_gl_trig(f, 1.0, tol=1e-10)
    assert np.allclose(val, [2.0, 2.0 / 3.0], atol=1e-9)


def test_plain_and_trig_agree_on_smooth_integrand():
    a, b = adaptive_gl(np.cos, 0.0, 1.5, tol=1e-11)[0], \
        adaptive_gl_trig(np.cos, 1.5, tol=1e-11)[0]
    assert a == pytest.approx(b, abs=1e-9)
