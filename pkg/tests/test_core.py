import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracbubble.core import (Bubble, FracError, NearHalfError, cached, compute_constants,
                             default_budget, make_params)


@given(st.integers(1, 6), st.floats(0.01, 0.99))
def test_params_derived_fields(n, g):
    if n - 2 * g <= 0:
        with pytest.raises(FracError):
            make_params(n, g)
        return
    p = make_params(n, g)
    assert p.critical_exponent == pytest.approx((n + 2 * g) / (n - 2 * g))
    assert p.trace_weight == pytest.approx(1 - 2 * g)
    assert p.near_half == (abs(g - 0.5) < 1e-3)


@pytest.mark.parametrize("n,g", [(2, 0.0), (2, 1.0), (2, -0.1), (2, float("nan")), (0, 0.25),
                                 (1, 0.5), (1, 0.75), (2.5, 0.25), (True, 0.25)])
def test_params_rejected(n, g):
    with pytest.raises(FracError):
        make_params(n, g)


def test_near_half_guard():
    p = make_params(2, 0.5004)
    assert p.near_half
    with pytest.raises(NearHalfError):
        p.require_not_half("test")
    make_params(2, 0.502).require_not_half("test")


def test_sphere_area():
    np.testing.assert_allclose(make_params(2, 0.25).sphere_area, 2 * math.pi)
    np.testing.assert_allclose(make_params(3, 0.25).sphere_area, 4 * math.pi)


@pytest.mark.parametrize("center,scale", [([np.inf, 0.0], 1.0), ([0.0, 0.0], 0.0),
                                          ([0.0, 0.0], -1.0), ([[0.0]], 1.0)])
def test_bubble_rejected(center, scale):
    with pytest.raises(FracError):
        Bubble(center, scale)


def test_cache_returns_first_value():
    p = make_params(2, 0.3)
    calls = []
    v1 = cached("test-kind", p, lambda: calls.append(1) or 1.0)
    v2 = cached("test-kind", p, lambda: calls.append(1) or 2.0)
    assert v1 == v2 == 1.0 and len(calls) == 1


def test_budget_env(monkeypatch):
    monkeypatch.setenv("FRACBUBBLE_BUDGET", "1234")
    assert default_budget() == 1234
    monkeypatch.setenv("FRACBUBBLE_BUDGET", "many")
    with pytest.raises(FracError):
        default_budget()


def test_constants_near_half_skips():
    cs = compute_constants(make_params(2, 0.5))
    d = cs.as_dict()
    np.testing.assert_allclose(d["c1"], math.pi, rtol=1e-10)
    np.testing.assert_allclose(d["c3"], 2 * math.pi, rtol=1e-10)
    for k in ("c2", "c_frac", "d_star", "yamabe_sphere"):
        assert d[k] == "skipped: near_half"
    assert cs.residuals == {}
