import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracbubble import bubbles, extension
from fracbubble import interactions as it
from fracbubble.core import Bubble, FracError, make_params

# int delta_{0,1}^p delta_{2 e1, 1} at n = 2 by scipy dblquad in polar coordinates
FROZEN_PAIR = {0.25: 2.0219109768207897, 0.75: 2.5802462758275926}

scales = st.floats(0.05, 20.0)
coords = st.floats(-5.0, 5.0)


@settings(max_examples=60, deadline=None)
@given(scales, scales, coords, coords, coords, coords, st.floats(0.1, 10.0), coords, coords,
       st.floats(0, 2 * math.pi))
def test_eps_symmetry_and_invariance(li, lj, a1, a2, b1, b2, t, s1, s2, th):
    p = make_params(2, 0.3)
    bi, bj = Bubble([a1, a2], li), Bubble([b1, b2], lj)
    e = it.epsilon_ij(bi, bj, p)
    np.testing.assert_allclose(e, it.epsilon_ij(bj, bi, p), rtol=1e-12)
    assert 0 < e <= 2 ** (-0.5 * p.s) * (1 + 1e-12)
    rot = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    move = lambda b: Bubble(t * (rot @ b.a) + np.array([s1, s2]), b.scale / t)
    np.testing.assert_allclose(it.epsilon_ij(move(bi), move(bj), p), e, rtol=1e-9)


def test_coincident_pair_gives_c1(params):
    b = Bubble(np.zeros(params.n), 2.5)
    np.testing.assert_allclose(it.interaction_oracle(b, b, params).value,
                               bubbles.c1_oracle(params).value, rtol=1e-10)


@pytest.mark.parametrize("gamma", [0.25, 0.75])
def test_oracle_against_frozen_dblquad(gamma):
    p = make_params(2, gamma)
    v = it.interaction_oracle(Bubble([0, 0], 1.0), Bubble([2, 0], 1.0), p).value
    np.testing.assert_allclose(v, FROZEN_PAIR[gamma], rtol=1e-10)


def test_oracle_depends_only_on_E(params):
    # a scale-ratio pair and a separated pair with the same E
    R = 7.0
    E = R + 1 / R
    d = math.sqrt(E - 2)
    n = params.n
    a = it.interaction_oracle(Bubble(np.zeros(n), R), Bubble(np.zeros(n), 1.0), params).value
    b = it.interaction_oracle(Bubble(np.zeros(n), 1.0), Bubble(d * np.eye(n)[0], 1.0),
                              params).value
    np.testing.assert_allclose(a, b, rtol=1e-9)
    if not params.near_half:
        np.testing.assert_allclose(extension.extension_profile(params).interaction(E), a,
                                   rtol=1e-6)


def test_duality(params):
    assert it.duality_check(params, count=6)["max_rel_gap"] <= 1e-9


def test_leading_term_separation_limit(params):
    bi, bj = Bubble(np.zeros(params.n), 1.0), Bubble(40 * np.eye(params.n)[0], 1.0)
    rep = it.verify_interaction(bi, bj, params)
    np.testing.assert_allclose(rep.oracle.value, rep.asymptotic, rtol=0.05)
    assert rep.observed_gap <= 2 * rep.predicted_error_scale * bubbles.c3_oracle(params).value


@pytest.mark.parametrize("order", ["dlambda_k", "grad_a"])
def test_derivative_leading_terms(order):
    p = make_params(2, 0.75)
    bi, bj = Bubble([0, 0], 1.0), Bubble([12.0, 0], 1.0)
    obs = np.asarray(it.oracle_derivative(bi, bj, p, order))
    lead = np.asarray(it.interaction_asymptotic(bi, bj, p, order)["leading"])
    np.testing.assert_allclose(obs, lead, rtol=0.05, atol=1e-3 * np.max(np.abs(lead)))


def test_displayed_form_differs_by_factor():
    p = make_params(2, 0.25)
    bi, bj = Bubble([0, 0], 1.0), Bubble([3.0, 1.0], 2.0)
    ex = it.interaction_asymptotic(bi, bj, p, "grad_a")["leading"]
    disp = it.interaction_asymptotic(bi, bj, p, "grad_a", form="displayed")["leading"]
    np.testing.assert_allclose(ex, -p.s * disp, rtol=1e-14)
    with pytest.raises(FracError):
        it.interaction_asymptotic(bi, bj, p, "bogus")


def test_higher_oracle_exponent_checks():
    p = make_params(2, 0.25)
    bi, bj = Bubble([0, 0], 1.0), Bubble([4, 0], 1.0)
    h = p.n / p.s
    with pytest.raises(FracError):
        it.higher_interaction_oracle(bi, bj, h, h + 0.1, p)
    with pytest.raises(FracError):
        it.higher_interaction_oracle(bi, bj, h - 0.5, h + 0.5, p)
    it.higher_interaction_oracle(bi, bj, h + 0.5, h - 0.5, p)


def test_fit_exponent_recovers_power():
    x = np.geomspace(1e-3, 1e-1, 5)
    np.testing.assert_allclose(it.fit_exponent(x, 3 * x ** 1.7), 1.7, rtol=1e-12)


def test_identities(params):
    res = it.appendix_identities(params)
    assert res["zero"]["relative"] <= 1e-10
    assert res["b2"]["relative"] <= 1e-10
    assert res["dichotomy"]


def test_zero_identity_full_space_n2():
    z = it.zero_identity(make_params(2, 0.25), method="full", tol=1e-8)
    assert z["relative"] <= 1e-6


def test_sweep_csv(tmp_path):
    p = make_params(2, 0.25)
    sw = it.interaction_sweep("ratio", "value", p, values=[10.0, 30.0])
    sw.to_csv(tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0].endswith("gap,gap_ratio") and len(lines) == 3
    with pytest.raises(FracError):
        it.sweep_pairs("bogus", "value", p)
