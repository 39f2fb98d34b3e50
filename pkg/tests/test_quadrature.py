import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracbubble import quadrature as quad
from fracbubble.core import FracError, make_params


def test_cube_polynomial():
    res = quad.cube(lambda X: X[:, 0] ** 2 * X[:, 1], [0, 0], [1, 2], 1e-12)
    np.testing.assert_allclose(res.value, 2.0 / 3.0, rtol=1e-12)
    assert not res.exhausted


def test_cube_budget_exhaustion():
    f = lambda X: np.abs(X[:, 0] - 0.3141) ** -0.5 * np.abs(X[:, 1] - 0.271) ** -0.5
    res = quad.cube(f, [0, 0], [1, 1], 1e-12, budget=5000)
    assert res.exhausted


@pytest.mark.parametrize("n", [1, 2, 3])
def test_integrate_rn_gaussian(n):
    p = make_params(n, 0.25)
    radial = quad.integrate_rn(lambda r: math.exp(-r * r), p, radial=True, tol=1e-12)
    np.testing.assert_allclose(radial.value, math.pi ** (n / 2), rtol=1e-10)
    full = quad.integrate_rn(lambda x: np.exp(-np.sum(x * x, axis=1)), p, tol=1e-9)
    np.testing.assert_allclose(full.value, math.pi ** (n / 2), rtol=1e-7)


def test_integrate_rn_rejects_slow_decay():
    with pytest.raises(FracError):
        quad.integrate_rn(lambda x: x[:, 0], make_params(2, 0.25), decay=2.0)


def test_halfspace_box_weight():
    # int_0^Y y^(1-2g) dy times the disc area
    p = make_params(2, 0.25)
    dom = quad.half_space_box(2.0, 1.5, 2)
    res = quad.integrate_halfspace_weighted(lambda y, r: np.ones_like(y), p, dom, radial=True,
                                            tol=1e-12)
    k = 2 - 2 * p.gamma
    np.testing.assert_allclose(res.value, 2.0 ** k / k * math.pi * 1.5 ** 2, rtol=1e-10)


def test_domain_validation():
    with pytest.raises(FracError):
        quad.Domain("half_space_box", 2)
    with pytest.raises(FracError):
        quad.Domain("torus", 2)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 5.0), st.floats(0.01, 5.0), st.floats(0.1, 2.0))
def test_sphere_mean_power_against_angles(dist, rho, expo):
    # circle mean in 2-D by the trapezoid rule (spectrally accurate for periodic data)
    th = 2 * np.pi * np.arange(4096) / 4096
    vals = (1.0 + dist ** 2 + rho ** 2 + 2 * dist * rho * np.cos(th)) ** -expo
    got = quad.sphere_mean_power(1.0, 1.0, dist, rho, expo, 2)
    np.testing.assert_allclose(got, vals.mean(), rtol=1e-9)


def test_spectral_multiplier_on_plane_wave():
    p = make_params(1, 0.25)
    L, h = math.pi, math.pi / 32
    x = -L + h * np.arange(64)
    out = quad.frac_laplacian_spectral(np.cos(3 * x), h, p)
    np.testing.assert_allclose(out, 3 ** 0.5 * np.cos(3 * x), atol=1e-12)
