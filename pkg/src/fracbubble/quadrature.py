"""Integration oracles: full space, weighted half space, principal value and Fourier routes.

Adaptive work is delegated to :func:`scipy.integrate.quad` (one dimension) and
:func:`scipy.integrate.cubature` (tensor Gauss-Kronrod, several dimensions);
this module supplies the compactifying substitutions and the singular pieces.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.special import gamma as gamma_fn
from scipy.special import hyp2f1

from .core import BudgetExhausted, FracError, FracParams, QuadResult, default_budget

GK_NODES = 21


@dataclass(frozen=True)
class Domain:
    """Integration domain.

    ``kind`` is ``"full_space"``, ``"half_space_box"`` (``0 < y < Y``,
    ``|x_i| < R`` or ``|x| < R`` in radial mode), ``"half_space"`` (the whole
    half space, radial integrands only) or ``"radial_line"`` (``0 < r < R``).
    """

    kind: str
    n: int
    Y: float = math.inf
    R: float = math.inf

    def __post_init__(self):
        if self.kind not in ("full_space", "half_space_box", "half_space", "radial_line"):
            raise FracError(f"unknown domain kind {self.kind!r}")
        if self.Y <= 0 or self.R <= 0:
            raise FracError("truncation radii must be positive")
        if self.kind == "half_space_box" and not (math.isfinite(self.Y) and math.isfinite(self.R)):
            raise FracError("half_space_box needs finite Y and R")


def full_space(n: int) -> Domain:
    return Domain("full_space", n)


def half_space_box(Y: float, R: float, n: int) -> Domain:
    return Domain("half_space_box", n, Y=Y, R=R)


def half_space(n: int) -> Domain:
    return Domain("half_space", n)


def radial_line(R: float, n: int = 1) -> Domain:
    return Domain("radial_line", n, R=R)


def _budget(budget):
    return default_budget() if budget is None else int(budget)


def cube(f: Callable, a, b, tol: float, budget: Optional[int] = None,
         atol: float = 0.0, rule: Optional[str] = None) -> QuadResult:
    """Adaptive cubature of a vectorised ``f`` over a box.

    ``f`` receives points of shape ``(N, d)``.  The rule defaults to tensor
    Gauss-Kronrod 21 (``gk15`` and ``genz-malik`` are accepted).  The evaluation
    budget caps the number of region subdivisions; running out sets ``exhausted``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = a.size
    if rule is None:
        rule = "gk21"
    if rule == "gk21":
        per_region = GK_NODES ** d
    elif rule == "gk15":
        per_region = 15 ** d
    else:
        per_region = 2 ** d + 2 * d * d + 2 * d + 1
    budget = _budget(budget)
    max_sub = max(1, int((budget / per_region - 1) / 2 ** d))
    res = integrate.cubature(f, a, b, rule=rule, rtol=tol, atol=atol, max_subdivisions=max_sub)
    n_evals = int((1 + res.subdivisions * 2 ** d) * per_region)
    err = float(np.max(np.abs(res.error)))
    return QuadResult(float(np.squeeze(res.estimate)), err, n_evals,
                      exhausted=res.status != "converged")


def line(f: Callable, a: float, b: float, tol: float, budget: Optional[int] = None,
         points: Sequence[float] = (), atol: float = 0.0) -> QuadResult:
    """Adaptive 1-D quadrature of a scalar ``f`` on ``[a, b]`` split at ``points``."""
    budget = _budget(budget)
    edges = [a] + sorted({p for p in points if a < p < b}) + [b]
    total, err, evals, exhausted = 0.0, 0.0, 0, False
    for lo, hi in zip(edges[:-1], edges[1:]):
        limit = max(50, min(budget // GK_NODES, 5000))
        val, e, info = integrate.quad(f, lo, hi, epsabs=atol, epsrel=max(tol, 1e-13),
                                      limit=limit, full_output=1)[:3]
        total += val
        err += e
        evals += info["neval"]
        if evals > budget:
            exhausted = True
            break
    scale = max(abs(total), atol / max(tol, 1e-300))
    if err > 10 * max(tol * scale, atol, 1e-14 * scale):
        exhausted = True
    return QuadResult(total, err, evals, exhausted=exhausted)


def integrate_rn(f: Callable, params: FracParams, tol: float = 1e-10,
                 budget: Optional[int] = None, decay: Optional[float] = None,
                 radial: bool = False, center=None, scale: float = 1.0,
                 breakpoints: Sequence[float] = ()) -> QuadResult:
    """Integrate ``f`` over R^n after the substitution ``x = center + scale * tan(theta)``.

    Parameters
    ----------
    f : callable
        Radial profile ``f(r)`` (scalar in, scalar out) when ``radial`` is set,
        otherwise a vectorised field taking points of shape ``(N, n)``.
    decay : float, optional
        Declared decay exponent ``q`` with ``|f| <= C (1+|x|)^-q``; ``q <= n`` is rejected.
    breakpoints : sequence of float
        Radii where a radial profile changes scale.

    Returns
    -------
    QuadResult
        The compactification is exact, so the only error is the quadrature error.
    """
    n = params.n
    if decay is not None and decay <= n:
        raise FracError(f"decay exponent {decay} does not exceed n={n}: tail not integrable")
    if radial:
        area = params.sphere_area

        def g(th):
            r = scale * math.tan(th)
            c = math.cos(th)
            return area * r ** (n - 1) * f(r) * scale / (c * c)

        pts = [math.atan(p / scale) for p in breakpoints if p > 0]
        return line(g, 0.0, math.pi / 2, tol, budget, points=pts)
    if n > 3:
        raise FracError("full-space cubature is limited to n <= 3")
    c0 = np.zeros(n) if center is None else np.asarray(center, dtype=float)

    def g(th):
        x = c0 + scale * np.tan(th)
        jac = np.prod(scale / np.cos(th) ** 2, axis=1)
        return f(x) * jac

    h = math.pi / 2
    return cube(g, [-h] * n, [h] * n, tol, budget)


def grading_power(gamma: float, cap: int = 24) -> float:
    """Smallest integer ``M`` with ``2 gamma M`` integral, else ``1/(2 gamma)``.

    With ``y = w^M`` the boundary expansions in powers ``y^(2 gamma)`` and
    ``y^(2 - 2 gamma)`` become polynomial in ``w``.
    """
    for m in range(1, cap + 1):
        if abs(2 * gamma * m - round(2 * gamma * m)) < 1e-9:
            return float(m)
    return max(1.0, 1.0 / (2 * gamma))


def integrate_halfspace_weighted(f: Callable, params: FracParams, domain: Domain,
                                 tol: float = 1e-8, budget: Optional[int] = None,
                                 radial: bool = False) -> QuadResult:
    """Integrate ``y^(1-2 gamma) f`` over a half-space box or the whole half space.

    In the box the y-variable is graded as ``y = t^(1/(2-2 gamma))``, which turns
    the weight into a constant.  ``f`` takes ``(y, x)`` with ``x`` of shape
    ``(N, n)``, or ``(y, r)`` in radial mode where the ``|S^(n-1)| r^(n-1)``
    factor is supplied here.  The unbounded half space (radial only) is mapped
    to log-polar coordinates ``y = e^u sin(phi)``, ``r = e^u cos(phi)`` with
    ``phi = (pi/2) psi^M``; integrands must decay like ``R^-(n - 2 gamma) - 2``.
    """
    n, g = params.n, params.gamma
    area = params.sphere_area
    if domain.kind == "half_space":
        if not radial:
            raise FracError("the unbounded half space needs a radial integrand")
        m = grading_power(g)
        umin = -45.0 / (n + 1)
        umax = 45.0 / params.s

        def fp(X):
            u, psi = X[:, 0], X[:, 1]
            rr = np.exp(u)
            phi = 0.5 * math.pi * psi ** m
            y, r = rr * np.sin(phi), rr * np.cos(phi)
            jac = rr * rr * 0.5 * math.pi * m * psi ** (m - 1)
            return area * jac * y ** (1 - 2 * g) * f(y, r) * r ** (n - 1)

        return cube(fp, [umin, 0.0], [umax, 1.0], tol, budget)
    if domain.kind != "half_space_box":
        raise FracError("integrate_halfspace_weighted needs a half-space domain")
    k = 2.0 - 2.0 * g
    T = domain.Y ** k
    if radial:
        def fr(X):
            y = X[:, 0] ** (1.0 / k)
            r = X[:, 1]
            return area * r ** (n - 1) * f(y, r) / k

        return cube(fr, [0.0, 0.0], [T, domain.R], tol, budget)

    def fb(X):
        y = X[:, 0] ** (1.0 / k)
        return f(y, X[:, 1:]) / k

    R = domain.R
    return cube(fb, [0.0] + [-R] * n, [T] + [R] * n, tol, budget)


def pv_normalization(params: FracParams) -> float:
    """Constant C(n, gamma) making the singular integral's symbol equal ``|xi|^(2 gamma)``."""
    n, g = params.n, params.gamma
    return 2 ** (2 * g) * gamma_fn((n + 2 * g) / 2) / (math.pi ** (n / 2) * abs(gamma_fn(-g)))


def sphere_mean_power(base: float, lam2: float, dist, rho, expo: float, n: int):
    """Mean over the sphere ``|xi - x| = rho`` of ``(base + lam2 |xi - a|^2)^-expo``.

    ``dist = |x - a|``.  Uses ``A = base + lam2 (dist^2 + rho^2)``,
    ``B = 2 lam2 dist rho`` and the quadratic transformation of the Gauss series
    so that ``A - B`` enters without cancellation.
    """
    dist = np.asarray(dist, dtype=float)
    rho = np.asarray(rho, dtype=float)
    amb = base + lam2 * (dist - rho) ** 2
    apb = base + lam2 * (dist + rho) ** 2
    if n == 1:
        return 0.5 * (amb ** -expo + apb ** -expo)
    w = amb / apb
    a, b, c = expo, 0.5 * (n - 1), n - 1.0
    out = hyp2f1(a, b, c, 1.0 - w)
    d = c - a - b
    near = w < 1e-8
    if np.any(near) and abs(d - round(d)) > 1e-9:
        # connection formula at z = 1 from the exact 1 - z; the error is O(w)
        A = gamma_fn(c) * gamma_fn(-d) / (gamma_fn(a) * gamma_fn(b))
        B = gamma_fn(c) * gamma_fn(d) / (gamma_fn(c - a) * gamma_fn(c - b))
        with np.errstate(divide="ignore"):
            out = np.where(near, A * w ** d + B, out)
    return apb ** -expo * out


def _angular_rule(n: int, m: int = 64):
    """Unit directions and weights approximating the mean over the sphere S^(n-1)."""
    if n == 1:
        return np.array([[1.0], [-1.0]]), np.array([0.5, 0.5])
    if n == 2:
        th = 2 * math.pi * np.arange(m) / m
        return np.stack([np.cos(th), np.sin(th)], 1), np.full(m, 1.0 / m)
    if n == 3:
        ct, wt = np.polynomial.legendre.leggauss(m // 2)
        ph = 2 * math.pi * np.arange(m) / m
        C, P = np.meshgrid(ct, ph, indexing="ij")
        st = np.sqrt(1 - C ** 2)
        dirs = np.stack([st * np.cos(P), st * np.sin(P), C], -1).reshape(-1, 3)
        w = (wt[:, None] * np.full(m, 1.0 / m)[None, :]).ravel() / 2.0
        return dirs, w
    raise FracError("angular rule implemented for n <= 3")


def _fd_laplacian(u: Callable, x: np.ndarray, h: float) -> float:
    n = x.size
    pts = [x]
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        pts += [x + e, x - e]
    v = u(np.array(pts))
    return float((np.sum(v[1:]) - 2 * n * v[0]) / h ** 2)


def frac_laplacian_pv(u, x, params: FracParams, tol: float = 1e-11,
                      budget: Optional[int] = None, width: Optional[float] = None,
                      scales: Sequence[float] = ()) -> float:
    """Principal-value evaluation of ``(-Delta)^gamma u`` at one point.

    ``u`` is either a vectorised callable on points ``(N, n)`` or an object with
    ``__call__``, ``spherical_mean(x, rho)``, ``laplacian(x)`` and ``width``
    (bubble fields).  Writing the singular integral in polar form,

        C |S| int_0^inf rho^(-1-2 gamma) (u(x) - M_u(x, rho)) d rho,

    the ball ``rho < h`` (``h = 1e-3 width``) is replaced by its second-order
    Taylor term ``-Delta u(x) h^(2-2 gamma) / (2n (2-2 gamma))``.
    """
    n, g = params.n, params.gamma
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != n:
        raise FracError(f"point has dimension {x.size}, expected {n}")
    if width is None:
        width = float(getattr(u, "width", 1.0))
    h = 1e-3 * width
    if hasattr(u, "spherical_mean"):
        mean = lambda rho: float(u.spherical_mean(x, rho))
        lap = float(u.laplacian(x))
        ux = float(u(x[None, :])[0])
    else:
        dirs, wts = _angular_rule(n)
        mean = lambda rho: float(np.dot(wts, u(x[None, :] + rho * dirs)))
        lap = _fd_laplacian(u, x, 1e-2 * width)
        ux = float(u(x[None, :])[0])
    area = params.sphere_area
    inner = -lap / (2 * n) * h ** (2 - 2 * g) / (2 - 2 * g)
    knots = sorted({h, width, 4 * width, 16 * width, *[s for s in scales if s > h]})
    far = 64 * max(knots)
    f = lambda rho: (ux - mean(rho)) * rho ** (-1 - 2 * g)
    mid = line(f, h, far, tol, budget, points=knots)
    # tail: u(x) part in closed form, mean part in log variable
    tail_m = line(lambda t: mean(far * math.exp(t)) * far ** (-2 * g) * math.exp(-2 * g * t),
                  0.0, 40.0, tol, budget, atol=1e-300)
    tail = ux * far ** (-2 * g) / (2 * g) - tail_m.value
    if mid.exhausted or tail_m.exhausted:
        raise BudgetExhausted("principal-value quadrature did not converge")
    return pv_normalization(params) * area * (inner + mid.value + tail)


def frac_laplacian_spectral(u_grid: np.ndarray, spacing: float, params: FracParams) -> np.ndarray:
    """Apply the multiplier ``|k|^(2 gamma)`` to periodic grid samples."""
    u_grid = np.asarray(u_grid, dtype=float)
    shape = u_grid.shape
    axes = tuple(range(u_grid.ndim))
    freqs = [2 * math.pi * np.fft.fftfreq(m, d=spacing) for m in shape[:-1]]
    freqs.append(2 * math.pi * np.fft.rfftfreq(shape[-1], d=spacing))
    k2 = np.zeros([f.size for f in freqs])
    for i, f in enumerate(freqs):
        sh = [1] * len(freqs)
        sh[i] = f.size
        k2 = k2 + f.reshape(sh) ** 2
    uh = np.fft.rfftn(u_grid, axes=axes)
    uh *= k2 ** params.gamma
    return np.fft.irfftn(uh, s=shape, axes=axes)


def periodic_grid(n: int, half_width: float, spacing: float):
    """Node coordinates of ``[-L, L)^n`` with the given spacing, as ``(N..., n)``."""
    m = int(round(2 * half_width / spacing))
    ax = -half_width + spacing * np.arange(m)
    mesh = np.meshgrid(*([ax] * n), indexing="ij")
    return np.stack(mesh, -1), ax


@dataclass(frozen=True)
class SpectralValue:
    value: np.ndarray
    coarse: np.ndarray
    fine: np.ndarray
    err_estimate: float


def spectral_at_points(field: Callable, points, params: FracParams, half_width: float,
                       spacing: float = 0.25, boundary_tol: float = 0.2) -> SpectralValue:
    """``(-Delta)^gamma field`` at grid-aligned points by the periodic Fourier route.

    The box ``[-L, L)^n`` and its doubling ``[-2L, 2L)^n`` are both evaluated and
    combined as ``(2^n V(2L) - V(L)) / (2^n - 1)``, which removes the leading
    ``L^-n`` periodisation error.  The box is rejected when the field's boundary
    values exceed ``boundary_tol`` times its peak.
    """
    n = params.n
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    vals = []
    for L in (half_width, 2 * half_width):
        X, ax = periodic_grid(n, L, spacing)
        U = field(X.reshape(-1, n)).reshape(X.shape[:-1])
        edge = np.max(np.abs(U[(0,) * n])), np.max(np.abs(U))
        if edge[0] > boundary_tol * edge[1]:
            raise FracError("box too small for the field's decay")
        V = frac_laplacian_spectral(U, spacing, params)
        idx = np.rint((pts + L) / spacing).astype(int)
        if np.any(np.abs(idx * spacing - L - pts) > 1e-9):
            raise FracError("spectral evaluation points must lie on the grid")
        vals.append(V[tuple(idx.T)])
        del X, U, V
    coarse, fine = vals
    w = 2.0 ** n
    val = (w * fine - coarse) / (w - 1)
    return SpectralValue(val, coarse, fine, float(np.max(np.abs(val - fine))))


def spectral_pairing(f: Callable, g: Callable, params: FracParams, half_width: float,
                     spacing: float = 0.25) -> SpectralValue:
    """``int f (-Delta)^gamma g`` on the periodic grid with the same box doubling."""
    n = params.n
    vals = []
    for L in (half_width, 2 * half_width):
        X, _ = periodic_grid(n, L, spacing)
        flat = X.reshape(-1, n)
        F = f(flat).reshape(X.shape[:-1])
        G = F if g is f else g(flat).reshape(X.shape[:-1])
        del X, flat
        vals.append(float(np.sum(F * frac_laplacian_spectral(G, spacing, params))) * spacing ** n)
        del F, G
    coarse, fine = vals
    w = 2.0 ** n
    val = (w * fine - coarse) / (w - 1)
    return SpectralValue(np.asarray(val), np.asarray(coarse), np.asarray(fine), abs(val - fine))
