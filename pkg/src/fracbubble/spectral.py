"""Weighted half-sphere spectral algebra: D-harmonic polynomials, eigenvalues, solvability.

Everything here is exact: ``gamma`` is converted to a rational number and the
polynomial ladders are built with sympy, so residual checks are identities on
coefficients rather than floating-point comparisons.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np
import sympy as sp
from scipy.stats import qmc

from .core import FracError, FracParams

MAX_DEGREE = 6
FAMILIES = ("neumann_int", "dirichlet_frac")


def exact_gamma(gamma) -> sp.Rational:
    """Rational value of ``gamma`` from its shortest decimal representation."""
    return sp.Rational(str(gamma))


def symbols(n: int):
    y = sp.Symbol("y", positive=True)
    xs = sp.symbols(f"x1:{n + 1}", real=True)
    return y, xs


def laplacian(P, xs):
    return sp.expand(sum(sp.diff(P, x, 2) for x in xs))


def apply_D(U, y, xs, g):
    """``D U = -d/dy (y^(1-2g) dU/dy) - y^(1-2g) Delta_x U``."""
    w = y ** (1 - 2 * g)
    return -sp.diff(w * sp.diff(U, y), y) - w * laplacian(U, xs)


@dataclass(frozen=True)
class DHarmonic:
    """``sum_l y^(sigma0 + 2l) P_{m-2l}(x)`` with ``sigma0`` in {0, 2 gamma}.

    ``degree`` is ``m + sigma0``; ``ladder`` holds the polynomials ``P_{m-2l}``.
    """

    family: str
    m: int
    sigma0: sp.Expr
    ladder: tuple
    n: int
    gamma: sp.Rational
    seed: sp.Expr

    @property
    def degree(self) -> sp.Expr:
        return self.m + self.sigma0

    def expr(self):
        y, _ = symbols(self.n)
        return sum(y ** (self.sigma0 + 2 * l) * P for l, P in enumerate(self.ladder))

    def residual(self):
        """Exact ``D`` applied to the harmonic, reduced to coefficient form."""
        y, xs = symbols(self.n)
        g = self.gamma
        # divide out y^(sigma0 - 1 - 2 gamma) so that only integer powers remain
        out = sp.expand(sp.powsimp(sp.expand(apply_D(self.expr(), y, xs, g)
                                             * y ** (1 + 2 * g - self.sigma0))))
        return out

    def is_exact(self) -> bool:
        return self.residual() == 0


def build_dharmonic(family: str, m: int, params: FracParams, seed=None) -> DHarmonic:
    """Complete a seed polynomial ``P_m`` of degree ``m`` to a D-harmonic.

    The ladder ``P_{m-2l-2} = -Delta P_{m-2l} / ((sigma0+2l+2)(sigma0+2l+2-2 gamma))``
    makes every power of ``y`` cancel in ``D``.  The default seed is ``x_1^m``.

    Examples
    --------
    >>> from fracbubble.core import make_params
    >>> h = build_dharmonic("neumann_int", 2, make_params(2, 0.25),
    ...                     seed=sp.Symbol("x1", real=True)**2 + sp.Symbol("x2", real=True)**2)
    >>> sp.expand(h.expr())
    x1**2 + x2**2 - 4*y**2/3
    """
    if family not in FAMILIES:
        raise FracError(f"family must be one of {FAMILIES}")
    if not (0 <= m <= MAX_DEGREE):
        raise FracError(f"degree must lie in [0, {MAX_DEGREE}]")
    if family == "dirichlet_frac":
        params.require_not_half("dirichlet_frac construction")
    g = exact_gamma(params.gamma)
    y, xs = symbols(params.n)
    if seed is None:
        seed = xs[0] ** m
    seed = sp.expand(sp.sympify(seed))
    poly = sp.Poly(seed, *xs) if seed != 0 else None
    if poly is None or not all(sum(mon) == m for mon in poly.monoms()):
        raise FracError("seed must be a nonzero homogeneous polynomial of degree m")
    sigma0 = sp.Integer(0) if family == "neumann_int" else 2 * g
    ladder = [seed]
    l = 0
    while m - 2 * l - 2 >= 0:
        fac = (sigma0 + 2 * l + 2) * (sigma0 + 2 * l + 2 - 2 * g)
        if fac == 0:
            raise FracError(f"ladder factor vanishes at step {l}: {fac}")
        ladder.append(sp.expand(-laplacian(ladder[-1], xs) / fac))
        l += 1
    return DHarmonic(family, m, sigma0, tuple(ladder), params.n, g, seed)


def monomial_seeds(n: int, m: int):
    _, xs = symbols(n)
    out = []
    for combo in itertools.combinations_with_replacement(range(n), m):
        out.append(sp.Mul(*[xs[i] for i in combo]) if combo else sp.Integer(1))
    return out


def standard_family(params: FracParams, max_degree: int = MAX_DEGREE, families=FAMILIES):
    """Every monomial seed up to ``max_degree`` in each family."""
    out = []
    for fam in families:
        if fam == "dirichlet_frac" and params.near_half:
            continue
        for m in range(max_degree + 1):
            for seed in monomial_seeds(params.n, m):
                out.append(build_dharmonic(fam, m, params, seed))
    return out


def eigenvalue(k, params: FracParams) -> float:
    """``k (k + n - 2 gamma)``."""
    if k < 0:
        raise FracError("degree must be nonnegative")
    return float(k) * (float(k) + params.s)


def half_sphere_points(n: int, count: int = 100, seed: int = 7) -> np.ndarray:
    """Deterministic scrambled-Halton points on ``{|z| = 1, y > 0}`` in R^(n+1)."""
    from scipy.stats import norm

    u = qmc.Halton(d=n + 1, scramble=True, seed=seed).random(count)
    z = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    z[:, 0] = np.abs(z[:, 0])
    return z


def eigen_residual(h: DHarmonic, points: Optional[np.ndarray] = None) -> float:
    """Largest ``|D_S e - lam_k y^(1-2g) e|`` on the half sphere, relative to ``lam_k y^(1-2g) e``.

    ``D_S e`` is computed as ``-div((y/|z|)^(1-2g) grad(A |z|^-k))`` at ``|z| = 1``,
    the weighted Laplace-Beltrami operator acting on the degree-0 extension.
    """
    y, xs = symbols(h.n)
    coords = (y,) + tuple(xs)
    A = h.expr()
    grad = [sp.diff(A, c) for c in coords]
    lap = sum(sp.diff(gc, c) for gc, c in zip(grad, coords))
    f_all = sp.lambdify(coords, [A, lap] + grad, "numpy")
    if points is None:
        points = half_sphere_points(h.n)
    cols = [points[:, i] for i in range(h.n + 1)]
    shape = points[:, 0].shape
    vals = [np.broadcast_to(np.asarray(v, float), shape) for v in f_all(*cols)]
    a, la = vals[0], vals[1]
    ga = np.column_stack(vals[2:])
    k = float(h.degree)
    beta = float(1 - 2 * h.gamma)
    N = h.n + 1
    z = points
    yv = z[:, 0]
    # F = A r^-k and w = (y/r)^beta, all evaluated at r = 1
    zga = np.sum(z * ga, axis=1)
    gF = ga - k * a[:, None] * z
    lapF = la - 2 * k * zga + a * (-k) * (N - 2 - k)
    w = yv ** beta
    gw = -beta * w[:, None] * z
    gw[:, 0] += beta * yv ** (beta - 1)
    div = w * lapF + np.sum(gw * gF, axis=1)
    lam = k * (k + h.n - 2 * float(h.gamma))
    ref = lam * w * a
    res = -div - ref
    norm = max(1.0, float(np.max(np.abs(ref))))
    return float(np.max(np.abs(res)) / norm)


# ---------------------------------------------------------------------------
# solvability conditions

def _frac(gamma):
    return gamma if isinstance(gamma, Fraction) else Fraction(str(gamma))


def solvability_dirichlet(m_prime: int, m: int, params_or_n, gamma=None):
    """``(m' + 2g)(m' + n) - (m - n + 1)(m + 1 - 2g)``, exact when ``gamma`` is rational.

    Accepts either a :class:`FracParams` or ``(n, gamma)`` so that the excluded
    value ``gamma = 1/2`` can be evaluated.
    """
    n, g = _ng(params_or_n, gamma)
    if m_prime < 0 or m < 0:
        raise FracError("indices must be nonnegative")
    return (m_prime + 2 * g) * (m_prime + n) - (m - n + 1) * (m + 1 - 2 * g)


def solvability_neumann(m_prime: int, m: int, params_or_n, gamma=None):
    """``m'(m' + n - 2g) - (m - n + 1 + 2g)(m + 1)``."""
    n, g = _ng(params_or_n, gamma)
    if m_prime < 0 or m < 0:
        raise FracError("indices must be nonnegative")
    return m_prime * (m_prime + n - 2 * g) - (m - n + 1 + 2 * g) * (m + 1)


def _ng(params_or_n, gamma):
    if isinstance(params_or_n, FracParams):
        return params_or_n.n, _frac(params_or_n.gamma)
    if gamma is None:
        raise FracError("gamma is required with an integer n")
    return int(params_or_n), _frac(gamma)


CONDITIONS = {"dirichlet": solvability_dirichlet, "neumann": solvability_neumann}


def solvability_sweep(condition: str, params_or_n, gamma=None, bound: int = 50) -> dict:
    """Smallest ``|value|`` and the zero list over ``0 <= m', m <= bound``."""
    f = CONDITIONS[condition]
    zeros, best = [], None
    for mp in range(bound + 1):
        for m in range(bound + 1):
            v = f(mp, m, params_or_n, gamma)
            if v == 0:
                zeros.append((mp, m))
            a = abs(v)
            best = a if best is None or a < best else best
    return {"min_abs": float(best), "zeros": zeros}


def find_half_degeneracy(condition: str, n: int, search_bound: int = 50):
    """All ``(m', m)`` with ``0 <= m', m <= search_bound`` where the condition vanishes at 1/2."""
    if search_bound > 1000:
        raise FracError("search bound is capped at 1000")
    if condition not in CONDITIONS:
        raise FracError(f"condition must be one of {tuple(CONDITIONS)}")
    return solvability_sweep(condition, n, Fraction(1, 2), search_bound)["zeros"]


def simple_crossing(condition: str, n: int, m_prime: int, m: int,
                    lo: float = 0.49, hi: float = 0.51) -> bool:
    """Sign change across ``gamma = 1/2`` (a zero with nonzero gamma-derivative)."""
    f = CONDITIONS[condition]
    a = f(m_prime, m, n, Fraction(str(lo)))
    b = f(m_prime, m, n, Fraction(str(hi)))
    return a * b < 0


def export_degeneracies(path, n: int, search_bound: int = 50) -> Path:
    path = Path(path)
    data = {"n": n, "gamma": "1/2", "search_bound": search_bound,
            "dirichlet": [list(t) for t in find_half_degeneracy("dirichlet", n, search_bound)],
            "neumann": [list(t) for t in find_half_degeneracy("neumann", n, search_bound)]}
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path
