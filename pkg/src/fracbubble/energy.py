"""Yamabe quadratic form, volume and quotient for finite sums of flat bubbles."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, special

from . import bubbles, extension, interactions
from . import quadrature as quad
from .core import BudgetExhausted, Bubble, FracError, FracParams, QuadResult, cached

ROUTES = ("identity", "spectral", "extension")


@dataclass(frozen=True)
class BubbleSum:
    """``sum_i alpha_i delta_{a_i, lam_i}`` with positive weights."""

    terms: tuple
    params: FracParams

    def __init__(self, terms, params: FracParams):
        terms = tuple((float(al), b) for al, b in terms)
        if not terms:
            raise FracError("a bubble sum needs at least one term")
        if any(al <= 0 for al, _ in terms):
            raise FracError("weights must be positive")
        if any(b.dim() != params.n for _, b in terms):
            raise FracError("bubble dimension does not match params.n")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "params", params)

    def scaled(self, t: float) -> "BubbleSum":
        return BubbleSum([(t * al, b) for al, b in self.terms], self.params)

    def __call__(self, x):
        return sum(al * bubbles.eval_bubble(b, x, self.params) for al, b in self.terms)


@dataclass(frozen=True)
class EnergyReport:
    quadratic: float
    volume: float
    quotient: float


# ---------------------------------------------------------------------------
# pair energies e(b_i, b_j) = int delta_i (-Delta)^gamma delta_j

def _omega(n: int, t):
    """Mean of ``exp(i k.x)`` over the unit sphere, ``|k||x| = t``."""
    t = np.asarray(t, dtype=float)
    if n == 1:
        return np.cos(t)
    if n == 3:
        return np.sinc(t / math.pi)
    nu = 0.5 * n - 1
    with np.errstate(invalid="ignore", divide="ignore"):
        out = special.gamma(nu + 1) * (2.0 / t) ** nu * special.jv(nu, t)
    return np.where(t == 0, 1.0, out)


def pair_energy_spectral(bi: Bubble, bj: Bubble, params: FracParams, tol: float = 1e-11) -> float:
    """Fourier-multiplier pairing ``(2 pi)^-n int |k|^(2 gamma) F_i conj(F_j) dk``.

    The transform of a bubble is ``k^-gamma K_gamma(k)`` up to scaling, so after the
    angular average only a 1-D integral in ``|k|`` with a Bessel factor remains.
    """
    n, g, s = params.n, params.gamma, params.s
    li, lj = bi.scale, bj.scale
    d = float(np.linalg.norm(bi.a - bj.a))
    C = 2 ** (1 - 0.5 * s) / math.gamma(0.5 * s)
    pref = C * C * params.sphere_area * (li * lj) ** (0.5 * s - n + g)

    def f(k):
        return (k ** (n - 1) * special.kv(g, k / li) * special.kv(g, k / lj)
                * _omega(n, k * d))

    kmax = 750.0 / (1.0 / li + 1.0 / lj)
    edges = [0.0]
    for e in sorted({min(li, lj), max(li, lj)}):
        edges.append(e)
    if d > 0:
        step = 4 * math.pi / d
        edges.extend(np.arange(edges[-1] + step, kmax, step).tolist())
    edges.append(kmax)
    edges = sorted(set(e for e in edges if e <= kmax))
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        total += integrate.quad(f, a, b, epsabs=0.0, epsrel=max(tol, 1e-13), limit=200)[0]
    return pref * total


def pair_energy_identity(bi: Bubble, bj: Bubble, params: FracParams) -> float:
    """``c_frac int delta_i^p delta_j`` (exact on R^n by self-adjointness)."""
    return bubbles.c_frac_oracle(params) * interactions.interaction_oracle(bi, bj, params).value


def pair_energy_extension(bi: Bubble, bj: Bubble, params: FracParams, tol: float = 1e-4,
                          budget: Optional[int] = None) -> float:
    """``d* int y^(1-2 gamma) grad delta_hat_i . grad delta_hat_j`` over the half space.

    A single bubble uses the radial energy quadrature.  For a pair the integrand
    is symmetric about the axis through both centers; coordinates are ``y``,
    the axial ``t`` and the transverse radius ``rho``.  Grading ``y ~ w^M`` with
    ``2 gamma M`` integral makes both boundary terms ``y^(2 gamma - 1)`` and
    ``y^(1 - 2 gamma)`` smooth in ``w``.
    """
    d_star = extension.d_star_oracle(params)
    n, g = params.n, params.gamma
    if np.allclose(bi.a, bj.a) and bi.scale == bj.scale:
        return d_star * extension.extension_energy(params, budget=budget).value * 1.0
    if n < 2:
        raise FracError("the pair extension route needs n >= 2")
    d = float(np.linalg.norm(bj.a - bi.a))
    L = max(d, 1.0 / min(bi.scale, bj.scale))
    area_t = 2.0 if n == 2 else 2 * math.pi ** ((n - 1) / 2) / math.gamma((n - 1) / 2)
    M = quad.grading_power(g)
    umin = math.log(L) - 30.0 / (n + 1)
    # the far field decays like R^-(n - 2 gamma); cut where it is below tol
    umax = math.log(L) + min(45.0, 1.5 * math.log(1.0 / tol) + 5.0) / params.s

    def f(X):
        # spherical coordinates about the midpoint; alpha is the elevation above y = 0
        u, psi, beta = X[:, 0], X[:, 1], X[:, 2]
        R = np.exp(u)
        alpha = 0.5 * math.pi * psi ** M
        y = R * np.sin(alpha)
        t = 0.5 * d + R * np.cos(alpha) * np.cos(beta)
        rho = R * np.cos(alpha) * np.sin(beta)
        jac = R ** 3 * np.cos(alpha) * 0.5 * math.pi * M * psi ** (M - 1)
        ri = np.hypot(t, rho)
        rj = np.hypot(t - d, rho)
        _, yi, ri_d = extension.extension_gradient(bi, y, ri, params)
        _, yj, rj_d = extension.extension_gradient(bj, y, rj, params)
        cosang = np.where((ri > 0) & (rj > 0),
                          (t * (t - d) + rho * rho) / np.maximum(ri * rj, 1e-300), 1.0)
        val = y ** (1 - 2 * g) * (yi * yj + ri_d * rj_d * cosang)
        return val * area_t * rho ** (n - 2) * jac

    res = quad.cube(f, [umin, 0.0, 0.0], [umax, 1.0, math.pi], tol, budget)
    if res.exhausted:
        raise BudgetExhausted("pair extension energy did not converge")
    return d_star * res.value


def pair_energy(bi: Bubble, bj: Bubble, params: FracParams, route: str = "identity") -> float:
    if route == "identity":
        if np.allclose(bi.a, bj.a) and bi.scale == bj.scale:
            return single_energy(params)
        return pair_energy_identity(bi, bj, params)
    if route == "spectral":
        return pair_energy_spectral(bi, bj, params)
    if route == "extension":
        return pair_energy_extension(bi, bj, params)
    raise FracError(f"route must be one of {ROUTES}")


def single_energy(params: FracParams) -> float:
    """``<delta, delta>`` for any single bubble, from the Fourier-multiplier route."""
    return cached("single_energy", params,
                  lambda: pair_energy_spectral(Bubble(np.zeros(params.n), 1.0),
                                               Bubble(np.zeros(params.n), 1.0), params))


def quadratic_form(u: BubbleSum, params: FracParams, route: str = "identity") -> float:
    """``<u, u> = sum_ij alpha_i alpha_j e(b_i, b_j)``.

    ``identity`` evaluates cross terms as ``c_frac`` times the interaction
    integral and the diagonal from the spectral route; ``spectral`` and
    ``extension`` use the named route for every term.
    """
    terms = u.terms
    total = 0.0
    cache = {}
    for i, (ai, bi) in enumerate(terms):
        for j in range(i, len(terms)):
            aj, bj = terms[j]
            key = (bi, bj)
            if key not in cache:
                cache[key] = pair_energy(bi, bj, params, route)
            total += (1 if i == j else 2) * ai * aj * cache[key]
    return total


# ---------------------------------------------------------------------------
# volume and quotient

def volume(u: BubbleSum, params: FracParams, tol: float = 1e-6,
           budget: Optional[int] = None) -> QuadResult:
    """``int u^(2n/(n - 2 gamma))``.

    The single-bubble parts are ``alpha^q c1`` (scale invariance); the coupling
    excess ``int (u^q - sum (alpha_i delta_i)^q)`` is integrated on its own so that
    its relative accuracy is not limited by the much larger diagonal part.
    """
    q = params.volume_exponent
    c1 = bubbles.c1_oracle(params).value
    diag = sum(al ** q for al, _ in u.terms) * c1
    if len(u.terms) == 1:
        return QuadResult(diag, 0.0, 0)
    centers = np.array([b.a for _, b in u.terms])
    c0 = centers.mean(axis=0)
    spread = float(np.max(np.linalg.norm(centers - c0, axis=1)))
    width = max(1.0 / min(b.scale for _, b in u.terms), 0.5 * spread)

    def excess(parts):
        return sum(parts) ** q - sum(p ** q for p in parts)

    rel = centers - c0
    axis = rel[np.argmax(np.linalg.norm(rel, axis=1))]
    collinear = spread == 0 or np.allclose(
        rel - np.outer(rel @ axis, axis) / float(axis @ axis), 0.0, atol=1e-12 * max(spread, 1))
    if collinear and params.n >= 2:
        # axisymmetric: coordinates t along the axis and rho across it
        e = axis / np.linalg.norm(axis) if spread > 0 else np.eye(params.n)[0]
        tpos = rel @ e
        n = params.n
        area_t = 2.0 if n == 2 else 2 * math.pi ** ((n - 1) / 2) / math.gamma((n - 1) / 2)
        h = math.pi / 2

        def fa(X):
            t = width * np.tan(X[:, 0])
            rho = width * np.tan(X[:, 1])
            jac = (width / np.cos(X[:, 0]) ** 2) * (width / np.cos(X[:, 1]) ** 2)
            parts = [al * (b.scale / (1 + b.scale ** 2 * ((t - tc) ** 2 + rho ** 2))) ** (0.5 * params.s)
                     for (al, b), tc in zip(u.terms, tpos)]
            return excess(parts) * area_t * rho ** (n - 2) * jac

        res = quad.cube(fa, [-h, 0.0], [h, h], tol, budget)
    else:
        def f(x):
            return excess([al * bubbles.eval_bubble(b, x, params) for al, b in u.terms])

        res = quad.integrate_rn(f, params, tol=tol, budget=budget, center=c0, scale=width)
    if res.exhausted:
        raise BudgetExhausted("volume cubature did not converge")
    return QuadResult(diag + res.value, res.err_estimate, res.n_evals)


def yamabe_quotient(u: BubbleSum, params: FracParams, route: str = "identity") -> EnergyReport:
    quadf = quadratic_form(u, params, route)
    vol = volume(u, params).value
    return EnergyReport(quadf, vol, quadf / vol ** (params.s / params.n))


def single_bubble_quotient(params: FracParams, budget: Optional[int] = None) -> float:
    """Quotient of one bubble from the spectral pairing and n-dimensional volume cubature."""
    def build():
        n = params.n
        e = single_energy(params)
        q = params.volume_exponent
        if n <= 3:
            vol = quad.integrate_rn(lambda x: (1.0 + np.sum(x * x, axis=1)) ** (-n), params,
                                    tol=1e-10, budget=budget).value
        else:
            vol = bubbles.c1_oracle(params).value
        return e / vol ** (params.s / n)
    return cached("single_quotient", params, build)


# ---------------------------------------------------------------------------
# multi-bubble sweeps

def simplex_vertices(p: int, n: int, sep: float) -> np.ndarray:
    """Vertices of a regular simplex with edge ``sep`` embedded in R^n (needs p <= n + 1)."""
    if p > n + 1:
        raise FracError(f"a regular {p}-simplex does not fit in R^{n}")
    E = np.eye(p) * (sep / math.sqrt(2))
    E -= E.mean(axis=0)
    # orthonormal basis of the (p-1)-dimensional affine hull
    U, _, _ = np.linalg.svd(E.T, full_matrices=False)
    coords = E @ U[:, : p - 1]
    out = np.zeros((p, n))
    out[:, : p - 1] = coords
    return out


@dataclass(frozen=True)
class BarycenterRow:
    p: int
    sep: float
    eps_sum: float
    quotient: float
    bound: float
    deficit: float
    deficit_per_eps: float


def barycenter_sweep(p: int, seps: Sequence[float], lam: float, params: FracParams,
                     route: str = "identity") -> list:
    """Equal bubbles at simplex vertices; deficit below ``p^(2 gamma/n) Y``."""
    if not (2 <= p <= 5):
        raise FracError("p must lie in [2, 5]")
    Y = single_bubble_quotient(params)
    bound = p ** (2 * params.gamma / params.n) * Y
    rows = []
    for sep in seps:
        verts = simplex_vertices(p, params.n, sep)
        bs = [Bubble(v, lam) for v in verts]
        u = BubbleSum([(1.0, b) for b in bs], params)
        rep = yamabe_quotient(u, params, route)
        eps_sum = sum(interactions.epsilon_ij(bs[i], bs[j], params)
                      for i in range(p) for j in range(i + 1, p))
        deficit = bound - rep.quotient
        rows.append(BarycenterRow(p, float(sep), eps_sum, rep.quotient, bound, deficit,
                                  deficit / eps_sum))
    return rows


def barycenter_csv_rows(rows) -> list:
    cols = ("p", "sep", "eps_sum", "quotient", "bound", "deficit", "deficit_per_eps")
    return [list(cols)] + [[str(r.p)] + [repr(float(getattr(r, c))) for c in cols[1:]]
                           for r in rows]


def write_barycenter_csv(rows, path):
    with open(path, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(barycenter_csv_rows(rows))
