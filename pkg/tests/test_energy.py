import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracbubble import energy as En
from fracbubble.core import Bubble, FracError, compute_constants, make_params

from conftest import FROZEN


def test_single_quotient_matches_closed_form(params):
    np.testing.assert_allclose(En.single_bubble_quotient(params),
                               FROZEN[(params.n, params.gamma)]["yamabe"], rtol=1e-8)


def test_single_energy_closed_form(params):
    ref = FROZEN[(params.n, params.gamma)]
    np.testing.assert_allclose(En.single_energy(params), ref["c_frac"] * ref["c1"], rtol=1e-10)


@pytest.mark.parametrize("d", [0.5, 2.0, 6.0])
def test_cross_term_routes(params, d):
    bi, bj = Bubble(np.zeros(params.n), 1.0), Bubble(d * np.eye(params.n)[0], 2.0)
    np.testing.assert_allclose(En.pair_energy(bi, bj, params, "spectral"),
                               En.pair_energy(bi, bj, params, "identity"), rtol=1e-8)


def test_extension_route_pair():
    p = make_params(2, 0.75)
    bi, bj = Bubble([0, 0], 1.0), Bubble([2.0, 0], 1.0)
    np.testing.assert_allclose(En.pair_energy_extension(bi, bj, p),
                               En.pair_energy(bi, bj, p), rtol=1e-2)


def test_unknown_route():
    b = Bubble([0, 0], 1.0)
    with pytest.raises(FracError):
        En.pair_energy(b, b, make_params(2, 0.25), "fourier")


@settings(max_examples=15, deadline=None)
@given(st.floats(0.05, 20.0))
def test_quotient_scale_invariance(t):
    p = make_params(2, 0.25)
    u = En.BubbleSum([(1.0, Bubble([0, 0], 1.0)), (0.7, Bubble([3.0, 0], 2.0))], p)
    q1 = En.yamabe_quotient(u, p).quotient
    q2 = En.yamabe_quotient(u.scaled(t), p).quotient
    np.testing.assert_allclose(q2, q1, rtol=1e-12)


def test_coincident_bubbles_single_quotient(params):
    b = Bubble(np.zeros(params.n), 1.0)
    u = En.BubbleSum([(1.0, b), (1.0, b)], params)
    np.testing.assert_allclose(En.yamabe_quotient(u, params).quotient,
                               En.single_bubble_quotient(params), rtol=1e-6)


def test_pair_below_bound():
    p = make_params(2, 0.25)
    u = En.BubbleSum([(1.0, Bubble([0, 0], 1.0)), (1.0, Bubble([8.0, 0], 1.0))], p)
    q = En.yamabe_quotient(u, p).quotient
    assert q < 2 ** (2 * p.gamma / p.n) * En.single_bubble_quotient(p)


def test_decoupling_trend():
    p = make_params(2, 0.75)
    rows = En.barycenter_sweep(2, [4.0, 16.0, 64.0], 1.0, p)
    d = [r.deficit for r in rows]
    assert d[0] > d[1] > d[2] > 0


@pytest.mark.parametrize("p,n", [(2, 2), (3, 2), (3, 3), (4, 3)])
def test_simplex_is_regular(p, n):
    v = En.simplex_vertices(p, n, 5.0)
    dist = [np.linalg.norm(v[i] - v[j]) for i in range(p) for j in range(i + 1, p)]
    np.testing.assert_allclose(dist, 5.0, rtol=1e-12)


def test_simplex_too_large():
    with pytest.raises(FracError):
        En.simplex_vertices(4, 2, 1.0)
    with pytest.raises(FracError):
        En.barycenter_sweep(6, [4.0], 1.0, make_params(3, 0.25))


def test_barycenter_csv(tmp_path):
    p = make_params(2, 0.25)
    rows = En.barycenter_sweep(2, [4.0, 8.0], 1.0, p)
    En.write_barycenter_csv(rows, tmp_path / "b.csv")
    text = (tmp_path / "b.csv").read_bytes()
    assert b"\r" not in text
    assert text.splitlines()[0] == b"p,sep,eps_sum,quotient,bound,deficit,deficit_per_eps"


def test_constants_relations(params):
    cs = compute_constants(params)
    assert cs.consistent(1e-3)
