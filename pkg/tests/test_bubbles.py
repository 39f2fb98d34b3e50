import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracbubble import bubbles
from fracbubble.core import Bubble, FracError, make_params

from conftest import FROZEN


def test_closed_forms_against_frozen(params):
    ref = FROZEN[(params.n, params.gamma)]
    np.testing.assert_allclose(bubbles.c1_oracle(params).value, ref["c1"], rtol=1e-10)
    np.testing.assert_allclose(bubbles.c3_oracle(params).value, ref["c3"], rtol=1e-10)
    np.testing.assert_allclose(bubbles.c_frac_oracle(params), ref["c_frac"], rtol=1e-6)


def test_n2_constants_are_pi_multiples():
    np.testing.assert_allclose(bubbles.c1_oracle(make_params(2, 0.25)).value, math.pi, rtol=1e-10)
    np.testing.assert_allclose(bubbles.c3_oracle(make_params(2, 0.25)).value, 4 * math.pi,
                               rtol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(-3, 3), st.floats(-3, 3), st.floats(-2, 2))
def test_bubble_scaling(lam, a1, a2, x1):
    p = make_params(2, 0.3)
    a = np.array([a1, a2])
    x = np.array([x1, 0.5])
    got = bubbles.eval_bubble(Bubble(a, lam), x, p)
    ref = lam ** (0.5 * p.s) * bubbles.eval_bubble(Bubble([0, 0], 1.0), lam * (x - a), p)
    np.testing.assert_allclose(got, ref, rtol=1e-12)


@pytest.mark.parametrize("lam", [1.0, 4.0])
def test_pde_ratio_constant(params, lam):
    b = Bubble(np.zeros(params.n), lam)
    res = bubbles.bubble_pde_residual(b, params=params)
    assert res.max_rel_dev < 1e-6
    np.testing.assert_allclose(res.mean_ratio, FROZEN[(params.n, params.gamma)]["c_frac"],
                               rtol=1e-6)


def test_field_laplacian_against_differences():
    p = make_params(3, 0.75)
    f = bubbles.BubbleField([(1.0, Bubble([0, 0, 0], 2.0)), (0.5, Bubble([1, 0, 0], 1.0))], p)
    x = np.array([0.3, -0.2, 0.1])
    h = 1e-3
    pts = [x] + [x + s * h * e for e in np.eye(3) for s in (1, -1)]
    v = f(np.array(pts))
    fd = (np.sum(v[1:]) - 6 * v[0]) / h ** 2
    np.testing.assert_allclose(f.laplacian(x), fd, rtol=1e-5)


def test_field_dimension_mismatch():
    with pytest.raises(FracError):
        bubbles.BubbleField(Bubble([0, 0, 0], 1.0), make_params(2, 0.25))


def test_pde_requires_params():
    with pytest.raises(FracError):
        bubbles.bubble_pde_residual(Bubble([0, 0], 1.0))
