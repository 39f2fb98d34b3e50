"""Acceptance criteria 1-11, each at its stated tolerance.

Every test records one PASS/FAIL line; the lines are repeated in the terminal
summary under "acceptance criteria".
"""
import math
import subprocess
import sys

import numpy as np
import pytest

from fracbubble import bubbles, energy, extension, interactions, spectral
from fracbubble import quadrature as quad
from fracbubble.core import Bubble, compute_constants, make_params
from fracbubble.suites import GRID_PROBES

MATRIX = [(2, 0.25), (2, 0.75), (3, 0.25), (3, 0.75)]


def _fmt(x):
    return f"{x:.3g}"


def test_criterion_01_bubble_pde(record_criterion):
    bad, worst_spread, worst_route = [], 0.0, 0.0
    for n, g in [(2, 0.25), (2, 0.75), (3, 0.25)]:
        p = make_params(n, g)
        b = Bubble(np.zeros(n), 1.0)
        pv = bubbles.bubble_pde_residual(b, params=p)
        fld = bubbles.BubbleField(b, p)
        pts = np.array(bubbles.default_stencil(b))
        sv = quad.spectral_at_points(fld, pts, p, 64.0 if n == 2 else 16.0, 0.25)
        spec_ratio = sv.value / fld(pts) ** p.critical_exponent
        route = float(np.max(np.abs(spec_ratio / np.array(pv.ratios) - 1.0)))
        worst_spread = max(worst_spread, pv.max_rel_dev)
        worst_route = max(worst_route, route)
        if pv.max_rel_dev > 1e-3 or route > 1e-3:
            bad.append((n, g))
    ok = not bad
    record_criterion(1, ok, f"stencil spread {_fmt(worst_spread)}, PV vs spectral "
                            f"{_fmt(worst_route)} (tol 1e-3)")
    assert ok, bad


def test_criterion_02_constant_identities(record_criterion):
    worst = 0.0
    for n, g in MATRIX:
        cs = compute_constants(make_params(n, g))
        worst = max(worst, max(abs(v) for v in cs.residuals.values()))
    p = make_params(2, 0.25)
    c1 = bubbles.c1_oracle(p).value
    c3 = bubbles.c3_oracle(p).value
    closed = max(abs(c1 / math.pi - 1), abs(c3 / (4 * math.pi) - 1))
    ok = worst <= 1e-3 and closed <= 1e-6
    record_criterion(2, ok, f"relation residual {_fmt(worst)} (tol 1e-3), "
                            f"c1=pi and c3=4pi gap {_fmt(closed)} (tol 1e-6)")
    assert ok


def test_criterion_03_poisson_and_grid(record_criterion):
    p = make_params(2, 0.25)
    e1 = np.array([1.0, 0.0])
    mass_gap = 0.0
    for y in (0.1, 1.0, 10.0):
        m = quad.integrate_rn(lambda r: float(extension.poisson_kernel(y, np.zeros(2), r * e1, p)),
                              p, tol=1e-12, radial=True, scale=y, breakpoints=(y,)).value
        mass_gap = max(mass_gap, abs(m - 1.0))
    fld = extension.bubble_grid_solve(1.0, p).field
    b = Bubble([0.0, 0.0], 1.0)
    gaps = []
    for yt, rt in GRID_PROBES:
        j = int(np.argmin(np.abs(fld.y - yt)))
        i = int(np.argmin(np.abs(fld.r - rt)))
        ref = float(extension.extend_bubble_convolution(b, np.array([fld.y[j], fld.r[i], 0.0]), p))
        gaps.append(abs(fld.values[j, i] / ref - 1.0))
    assert len(gaps) == 10
    ok = mass_gap <= 1e-6 and max(gaps) <= 1e-2
    record_criterion(3, ok, f"kernel mass gap {_fmt(mass_gap)} (tol 1e-6), grid vs convolution "
                            f"{_fmt(max(gaps))} at 10 probes (tol 1e-2)")
    assert ok


def test_criterion_04_trace_identity(record_criterion):
    spreads = {}
    for n, g in MATRIX:
        rep = extension.d_star_from_traces(make_params(n, g), lambdas=(1.0, 4.0, 16.0),
                                           probes=(0.0, 0.5, 1.0))
        assert len(rep.values) == 9
        spreads[(n, g)] = rep.spread
    worst = max(spreads.values())
    ok = worst <= 1e-2
    record_criterion(4, ok, f"d* spread {_fmt(worst)} over 3 scales x 3 probes (tol 1e-2)")
    assert ok


def test_criterion_05_interaction_estimates(record_criterion):
    failures = []
    worst_gap = 0.0
    for n, g in MATRIX:
        p = make_params(n, g)
        for order in interactions.ORDERS:
            for kind in ("ratio", "separation"):
                sw = interactions.interaction_sweep(kind, order, p)
                eps = [r["eps"] for r in sw.rows]
                assert max(eps) / min(eps) >= 10.0 * 0.99, (n, g, order, kind, eps)
                gr = [r["gap_ratio"] for r in sw.rows]
                rel = abs(sw.exponent_rel_gap)
                worst_gap = max(worst_gap, rel)
                if rel > 0.15 or max(gr) / gr[0] > 3.0:
                    failures.append(f"n{n} g{g} {order} {kind}: fitted "
                                    f"{sw.fitted_exponent:.3f} vs {sw.predicted_exponent:.3f}")
    ok = not failures
    record_criterion(5, ok, f"{len(failures)}/32 sweeps outside 15% "
                            f"(worst exponent gap {_fmt(worst_gap)})")
    assert ok, "\n".join(failures)


def test_criterion_06_sharp_estimates(record_criterion):
    bad = []
    for n, g in MATRIX:
        p = make_params(n, g)
        rep = extension.check_sharp_estimates(Bubble(np.zeros(n), 1.0),
                                              extension.sharp_samples(r_a=1.0), p,
                                              lambdas=(10.0, 30.0, 100.0))
        for k, dec in rep.details["strictly_decreasing"].items():
            if not dec:
                bad.append((n, g, k))
    ok = not bad
    record_criterion(6, ok, f"deviations strictly decreasing for (i)-(iii) on "
                            f"{len(MATRIX) - len({b[:2] for b in bad})}/{len(MATRIX)} parameter pairs")
    assert ok, bad


def test_criterion_07_higher_interactions(record_criterion):
    worst_band, worst_beta = 0.0, 0.0
    for n, g in MATRIX:
        p = make_params(n, g)
        bal = interactions.higher_interaction_sweep(p, balanced=True)
        eps = bal["eps"]
        assert max(eps) / min(eps) >= 10.0 * 0.99
        worst_band = max(worst_band, bal["band"])
        unb = interactions.higher_interaction_sweep(p, balanced=False, beta=1.0)
        worst_beta = max(worst_beta, abs(unb["fitted_exponent"] / unb["beta"] - 1.0))
    ok = worst_band <= 3.0 and worst_beta <= 0.10
    record_criterion(7, ok, f"balanced band {_fmt(worst_band)} (limit 3), unbalanced exponent "
                            f"gap {_fmt(worst_beta)} (tol 0.10)")
    assert ok


def test_criterion_08_appendix_identities(record_criterion):
    zero = b2 = dual = 0.0
    for n, g in MATRIX:
        p = make_params(n, g)
        zero = max(zero, interactions.zero_identity(p)["relative"])
        b2 = max(b2, interactions.b2_identity(p)["relative"])
        dual = max(dual, interactions.duality_check(p, count=20, tol=1e-11)["max_rel_gap"])
    ok = zero <= 1e-6 and b2 <= 1e-6 and dual <= 1e-9
    record_criterion(8, ok, f"zero {_fmt(zero)}, b2 {_fmt(b2)} (tol 1e-6), duality "
                            f"{_fmt(dual)} on 20 pairs (quadrature tol 1e-11)")
    assert ok


def test_criterion_09_spectral(record_criterion):
    total = exact = 0
    worst = 0.0
    nonzero = True
    for n, g in MATRIX:
        p = make_params(n, g)
        fam = spectral.standard_family(p, max_degree=6)
        total += len(fam)
        exact += sum(h.residual() == 0 for h in fam)
        pts = spectral.half_sphere_points(n)
        worst = max(worst, max(spectral.eigen_residual(h, pts) for h in fam))
        for cond in ("dirichlet", "neumann"):
            res = spectral.solvability_sweep(cond, n, g, bound=50)
            nonzero &= not res["zeros"]
    dz = spectral.find_half_degeneracy("dirichlet", 2, 50)
    nz = spectral.find_half_degeneracy("neumann", 2, 50)
    degen = (1, 3) in dz and all((m, m) in nz for m in range(51))
    ok = exact == total and worst <= 1e-8 and nonzero and degen
    record_criterion(9, ok, f"{exact}/{total} exact D-harmonics, eigen residual {_fmt(worst)} "
                            f"(tol 1e-8), sweeps nonzero={nonzero}, degeneracies found={degen}")
    assert ok


def test_criterion_10_energy(record_criterion):
    msgs, ok = [], True
    worst_q = worst_band = worst_scale = 0.0
    for n, g in MATRIX:
        p = make_params(n, g)
        cs = compute_constants(p)
        Y = cs.c2 / cs.c1 ** (p.s / n)
        u = energy.BubbleSum([(1.0, Bubble(np.zeros(n), 1.0))], p)
        worst_q = max(worst_q, abs(energy.yamabe_quotient(u, p).quotient / Y - 1.0))
        rows = {k: energy.barycenter_sweep(k, (4.0, 8.0, 16.0), 1.0, p) for k in (2, 3)}
        for k, rs in rows.items():
            if not all(r.deficit > 0 and r.quotient < r.bound for r in rs):
                ok = False
                msgs.append(f"n{n} g{g} p{k}: nonpositive deficit")
            per = [r.deficit_per_eps for r in rs]
            worst_band = max(worst_band, max(per) / min(per))
        ratio = rows[3][-1].deficit / rows[2][-1].deficit
        worst_scale = max(worst_scale, abs(ratio / 3.0 - 1.0))
    ok = ok and worst_q <= 1e-3 and worst_band <= 3.0 and worst_scale <= 0.30
    record_criterion(10, ok, f"single quotient gap {_fmt(worst_q)} (tol 1e-3), deficit/eps band "
                             f"{_fmt(worst_band)} (limit 3), p-scaling gap {_fmt(worst_scale)} "
                             f"(tol 0.30)")
    assert ok, msgs


def test_criterion_11_determinism(record_criterion, tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"run{k}.json"
        res = subprocess.run([sys.executable, "-m", "fracbubble", "verify", "--suite", "all",
                              "--out", str(path)], capture_output=True, text=True)
        assert res.returncode in (0, 1), res.stderr
        outs.append(path.read_bytes())
    ok = outs[0] == outs[1] and len(outs[0]) > 0
    record_criterion(11, ok, f"two verify --suite all reports byte-identical={ok} "
                             f"({len(outs[0])} bytes)")
    assert ok
