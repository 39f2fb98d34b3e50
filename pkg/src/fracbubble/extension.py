"""Half-space side: Poisson kernel, bubble extensions, grid solver, traces and Green's function.

The extension of a bubble is a bubble interaction on R^n,

    delta_hat_{a,lam}(y, x) = p y^(-s/2) int delta_{x,1/y}^p delta_{a,lam},

and interactions depend on the pair only through
``E = lam_i/lam_j + lam_j/lam_i + lam_i lam_j |a_i - a_j|^2``.  Evaluating the
concentric configuration once on a grid of ``E`` gives a profile ``G(E)`` with

    delta_hat_{0,1}(y, r) = (1 + y^2 + r^2)^(-s/2) G((1 + y^2 + r^2) / y),

which is what the fast evaluators use.  :func:`extend_bubble_convolution` with
``method="direct"`` instead integrates the Poisson kernel against the bubble
(spherical means plus 1-D quadrature) and is the independent check.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import CubicHermiteSpline

from . import bubbles
from . import quadrature as quad
from .core import Bubble, FracError, FracParams, QuadResult, cached

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


# ---------------------------------------------------------------------------
# concentric profile

def _mu_of(E):
    E = np.asarray(E, dtype=float)
    return 2.0 / (E + np.sqrt(E * E - 4.0))


def _deviation(params: FracParams, mu, c3: float):
    """``D = H/c3 - 1`` and ``dD/dmu`` for the concentric pair ``(0,1)``, ``(0,mu)``.

    ``H(mu) = int |S| r^(n-1) (1+r^2)^(-(n+2g)/2) ((1+mu^2)/(1+mu^2 r^2))^(s/2) dr``
    equals ``E^(s/2)`` times the interaction.  Composite 16-point Gauss rule in
    ``log r`` on unit panels; the integrand is analytic in a strip of width pi/2.
    """
    n, g, s = params.n, params.gamma, params.s
    area = params.sphere_area
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    out = np.empty(mu.shape)
    dout = np.empty(mu.shape)
    for i, m in enumerate(mu):
        a = -44.0 / n
        b = math.log(1.0 / m) + 44.0 / min(2.0 * g, n)
        k = int(math.ceil(b - a))
        h = 0.5 * (b - a) / k
        c = a + h * (2 * np.arange(k) + 1)
        u = (c[:, None] + h * _GL_X[None, :]).ravel()
        w = np.tile(_GL_W * h, k)
        r2 = np.exp(2 * u)
        base = area * np.exp(n * u - 0.5 * (n + 2 * g) * np.log1p(r2))
        lq = math.log1p(m * m) - np.log1p(m * m * r2)
        out[i] = np.sum(w * base * np.expm1(0.5 * s * lq)) / c3
        dout[i] = np.sum(w * base * np.exp(0.5 * s * lq) * s * m * (1 - r2)
                         / ((1 + m * m) * (1 + m * m * r2))) / c3
    return out, dout


class ExtensionProfile:
    """Tabulated ``G(E) = 1 + D(E)`` for one ``(n, gamma)``.

    ``log(-D)`` is stored as a cubic Hermite spline in ``v = log(E - 1)`` with
    exact node derivatives, so both ``D`` and ``D'`` keep relative accuracy
    (about 1e-11) as ``E`` grows.  Beyond the table the last slope is continued.
    """

    def __init__(self, params: FracParams, step: float = 0.02, vmax: float = 80.0):
        self.params = params
        self.c3 = bubbles.c3_oracle(params).value
        v = np.arange(0.0, vmax + step / 2, step)
        E = 1.0 + np.exp(v)
        mu = _mu_of(E)
        D, dmu = _deviation(params, mu, self.c3)
        with np.errstate(divide="ignore", invalid="ignore"):
            dE = dmu / (1.0 - 1.0 / mu ** 2)
        # near E = 2 the chain rule is 0/0; use a Chebyshev fit in w = E - 2
        wmax = 0.2
        cn = np.cos(np.pi * (np.arange(24) + 0.5) / 24)
        wn = 0.5 * wmax * (1 + cn)
        Dn, _ = _deviation(params, _mu_of(2.0 + wn), self.c3)
        cheb = np.polynomial.Chebyshev.fit(wn, Dn, 23, domain=[0, wmax])
        near = (E - 2.0) < wmax
        dE[near] = cheb.deriv()(E[near] - 2.0)
        self.log_form = bool(np.all(D < 0))
        dv = dE * (E - 1.0)
        if self.log_form:
            self._spl = CubicHermiteSpline(v, np.log(-D), dv / D)
        else:
            self._spl = CubicHermiteSpline(v, D, dv)
        self.vmax = v[-1]
        self._end = (float(self._spl(self.vmax)), float(self._spl(self.vmax, 1)))

    def deviation(self, E):
        """``D(E)`` and ``dD/dE``."""
        E = np.asarray(E, dtype=float)
        v = np.log(E - 1.0)
        inside = v <= self.vmax
        vv = np.where(inside, v, self.vmax)
        f = np.where(inside, self._spl(vv), self._end[0] + self._end[1] * (v - self.vmax))
        df = np.where(inside, self._spl(vv, 1), self._end[1])
        if self.log_form:
            D = -np.exp(f)
            return D, D * df / (E - 1.0)
        return f, df / (E - 1.0)

    def exact_deviation(self, E):
        """``D(E)`` from the Gauss rule directly (no interpolation)."""
        return _deviation(self.params, _mu_of(E), self.c3)[0]

    def interaction(self, E):
        """Interaction ``int delta_i^p delta_j`` as a function of ``E`` alone."""
        E = np.asarray(E, dtype=float)
        D, _ = self.deviation(E)
        return self.c3 * E ** (-0.5 * self.params.s) * (1.0 + D)


def extension_profile(params: FracParams) -> ExtensionProfile:
    return cached("profile", params, lambda: ExtensionProfile(params))


def _unit_extension(params: FracParams, y, r, prof: ExtensionProfile, grad: bool = False):
    s = params.s
    y = np.asarray(y, dtype=float)
    r = np.asarray(r, dtype=float)
    P = 1.0 + y * y + r * r
    E = P / y
    D, dD = prof.deviation(E)
    base = P ** (-0.5 * s)
    val = base * (1.0 + D)
    if not grad:
        return val
    dy = -s * y * P ** (-0.5 * s - 1) * (1 + D) + base * dD * (y * y - 1 - r * r) / (y * y)
    dr = -s * r * P ** (-0.5 * s - 1) * (1 + D) + base * dD * 2 * r / y
    return val, dy, dr


# ---------------------------------------------------------------------------
# kernels and extensions

def poisson_kernel(y, x, xi, params: FracParams):
    """``p y^(2 gamma) / (|x - xi|^2 + y^2)^((n + 2 gamma)/2)`` with ``p = 1/c3``."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise FracError("the Poisson kernel needs y > 0")
    d2 = np.sum((np.asarray(x, dtype=float) - np.asarray(xi, dtype=float)) ** 2, axis=-1)
    p = 1.0 / bubbles.c3_oracle(params).value
    g = params.gamma
    return p * y ** (2 * g) / (d2 + y * y) ** (0.5 * (params.n + 2 * g))


def _split_z(z, n):
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != n + 1:
        raise FracError(f"half-space points need {n + 1} coordinates (y, x)")
    return z[..., 0], z[..., 1:]


def extend_bubble_convolution(b: Bubble, z, params: FracParams, tol: float = 1e-10,
                              method: str = "profile"):
    """Value of the Poisson extension of ``delta_{a,lam}`` at ``z = (y, x)``.

    ``method="profile"`` uses the tabulated concentric interaction and accepts
    arrays of points; ``method="direct"`` integrates kernel times bubble with
    exact spherical means (one point at a time).  At ``y = 0`` the bubble itself
    is returned.
    """
    y, x = _split_z(z, params.n)
    lam = b.scale
    s = params.s
    if method == "direct":
        if np.ndim(y) != 0:
            return np.array([extend_bubble_convolution(b, zz, params, tol, "direct")
                             for zz in np.asarray(z, dtype=float)])
        y = float(y)
        if y == 0.0:
            return float(eval_at(b, x, params))
        d = float(np.linalg.norm(x - b.a))
        g, n = params.gamma, params.n
        p = 1.0 / bubbles.c3_oracle(params).value
        area = params.sphere_area

        def f(rho):
            mean = lam ** (0.5 * s) * quad.sphere_mean_power(1.0, lam * lam, d, rho, 0.5 * s, n)
            return area * rho ** (n - 1) * p * y ** (2 * g) * (y * y + rho * rho) ** (-0.5 * (n + 2 * g)) * mean

        far = 1e3 * (y + d + 1.0 / lam)
        res = quad.line(f, 0.0, far, tol, points=[y, d, 1.0 / lam, d + 1.0 / lam])
        # tail in log variable
        tail = quad.line(lambda t: f(far * math.exp(t)) * far * math.exp(t), 0.0, 60.0, tol,
                         atol=1e-300)
        return res.value + tail.value
    if method != "profile":
        raise FracError(f"unknown method {method!r}")
    prof = extension_profile(params)
    r = np.linalg.norm(x - b.a, axis=-1)
    y = np.asarray(y, dtype=float)
    out = np.empty(np.shape(y))
    pos = y > 0
    out[~pos] = (lam / (1 + lam * lam * r[~pos] ** 2)) ** (0.5 * s) if np.ndim(y) else 0.0
    if np.ndim(y) == 0:
        if y == 0:
            return float((lam / (1 + lam * lam * r * r)) ** (0.5 * s))
        return float(lam ** (0.5 * s) * _unit_extension(params, lam * y, lam * r, prof))
    out[pos] = lam ** (0.5 * s) * _unit_extension(params, lam * y[pos], lam * r[pos], prof)
    return out


def eval_at(b: Bubble, x, params):
    return bubbles.eval_bubble(b, x, params)


def extension_gradient(b: Bubble, y, r, params: FracParams):
    """``(delta_hat, d/dy, d/dr)`` of a bubble extension in the radial variables about ``a``."""
    lam = b.scale
    s = params.s
    prof = extension_profile(params)
    v, dy, dr = _unit_extension(params, lam * np.asarray(y, float), lam * np.asarray(r, float),
                                prof, grad=True)
    c = lam ** (0.5 * s)
    return c * v, c * lam * dy, c * lam * dr


def extension_energy(params: FracParams, tol: float = 1e-10,
                     budget: Optional[int] = None) -> QuadResult:
    """``int y^(1-2 gamma) |grad delta_hat_{0,1}|^2`` over the whole half space."""
    prof = extension_profile(params)

    def f(y, r):
        _, dy, dr = _unit_extension(params, y, r, prof, grad=True)
        return dy * dy + dr * dr

    def build():
        res = quad.integrate_halfspace_weighted(f, params, quad.half_space(params.n), tol=tol,
                                                budget=budget, radial=True)
        if res.exhausted:
            from .core import BudgetExhausted
            raise BudgetExhausted("extension energy quadrature did not converge")
        return res

    return cached("ext_energy", params, build, tol)


# ---------------------------------------------------------------------------
# grid fields

@dataclass
class HalfSpaceField:
    """Samples on a tensor grid ``y_nodes x r_nodes`` (radial about ``center``)."""

    y: np.ndarray
    r: np.ndarray
    values: np.ndarray
    params: FracParams
    provenance: str
    grid_spec: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.provenance not in ("convolution", "grid_solve", "closed_form"):
            raise FracError(f"unknown provenance {self.provenance!r}")
        if self.values.shape != (self.y.size, self.r.size):
            raise FracError("values must have shape (len(y), len(r))")

    def trace(self) -> np.ndarray:
        if self.y[0] != 0.0:
            raise FracError("this field has no stored trace row")
        return self.values[0].copy()

    def at(self, y, r) -> float:
        """Value at a grid node (exact node coordinates required)."""
        j = int(np.argmin(np.abs(self.y - y)))
        i = int(np.argmin(np.abs(self.r - r)))
        if abs(self.y[j] - y) > 1e-12 * max(1, abs(y)) or abs(self.r[i] - r) > 1e-12 * max(1, abs(r)):
            raise FracError("point is not a grid node")
        return float(self.values[j, i])

    def to_csv(self, path) -> Path:
        """Write ``y,r,value`` rows and a JSON sidecar with params, grid and provenance."""
        path = Path(path)
        Y, R = np.meshgrid(self.y, self.r, indexing="ij")
        rows = np.column_stack([Y.ravel(), R.ravel(), self.values.ravel()])
        with open(path, "w", newline="\n") as fh:
            fh.write("y,r,value\n")
            for a, b_, c in rows:
                fh.write(f"{float(a)!r},{float(b_)!r},{float(c)!r}\n")
        side = path.with_suffix(path.suffix + ".json")
        meta = {"params": {"n": self.params.n, "gamma": self.params.gamma},
                "grid": {"ny": int(self.y.size), "nr": int(self.r.size), **self.grid_spec},
                "provenance": self.provenance}
        side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        return path


def graded_nodes(Y: float, J: int, gamma: float) -> np.ndarray:
    """``y_j = Y (j/J)^(1/(2 - 2 gamma))``."""
    return Y * (np.arange(J + 1) / J) ** (1.0 / (2.0 - 2.0 * gamma))


def convolution_field(b: Bubble, params: FracParams, y_nodes, r_nodes) -> HalfSpaceField:
    """Sample the extension of ``b`` (radial about ``b.center``) on a tensor grid."""
    y_nodes = np.asarray(y_nodes, float)
    r_nodes = np.asarray(r_nodes, float)
    Yg, Rg = np.meshgrid(y_nodes, r_nodes, indexing="ij")
    z = np.zeros(Yg.shape + (params.n + 1,))
    z[..., 0] = Yg
    z[..., 1:] = b.a
    z[..., 1] += Rg
    vals = extend_bubble_convolution(b, z.reshape(-1, params.n + 1), params).reshape(Yg.shape)
    return HalfSpaceField(y_nodes, r_nodes, vals, params, "convolution",
                          {"kind": "tensor", "center": list(b.center), "scale": b.scale})


def _t_hat_mass(y: np.ndarray, gamma: float):
    """Cell masses ``int y^(1-2 gamma) phi_a phi_b dy`` for hats linear in ``t = y^(2 gamma)``.

    Returns ``(m_ll, m_lr, m_rr)`` per cell.  In ``t`` the weight is
    ``t^a / (2 gamma)`` with ``a = (1 - 2 gamma)/gamma > -1``; the first cell uses
    exact moments, the others 12-point Gauss-Legendre.
    """
    g = gamma
    t = y ** (2 * g)
    a = (1 - 2 * g) / g
    t0, t1 = t[:-1], t[1:]
    dt = t1 - t0
    m = np.empty((3, dt.size))
    xg, wg = np.polynomial.legendre.leggauss(12)
    tq = 0.5 * (t0[:, None] + t1[:, None]) + 0.5 * dt[:, None] * xg[None, :]
    wq = 0.5 * dt[:, None] * wg[None, :] * tq ** a / (2 * g)
    pl = (t1[:, None] - tq) / dt[:, None]
    pr = 1.0 - pl
    m[0] = np.sum(wq * pl * pl, axis=1)
    m[1] = np.sum(wq * pl * pr, axis=1)
    m[2] = np.sum(wq * pr * pr, axis=1)
    if t0[0] == 0.0:
        T = t1[0]
        mom = [T ** (a + k + 1) / (a + k + 1) / (2 * g) for k in range(3)]
        # phi_l = 1 - t/T, phi_r = t/T
        m[2, 0] = mom[2] / T ** 2
        m[1, 0] = mom[1] / T - mom[2] / T ** 2
        m[0, 0] = mom[0] - 2 * mom[1] / T + mom[2] / T ** 2
    return m


@dataclass
class GridOperator:
    """Conservative form of ``-div(y^(1-2 gamma) grad)`` on an axisymmetric grid.

    In ``y`` this is the Galerkin discretisation with hats linear in ``t = y^(2 gamma)``:
    the stiffness reduces to the harmonic face weights ``2 gamma / (t_{j+1} - t_j)``,
    exact for ``A + B y^(2 gamma)``, and the radial term uses the consistent mass.
    In ``r`` it is a finite-volume flux form with ``r = 0`` as symmetry axis.
    """

    y: np.ndarray
    r: np.ndarray
    params: FracParams

    def __post_init__(self):
        n, g = self.params.n, self.params.gamma
        y, r = self.y, self.r
        self.cy = 2 * g / (y[1:] ** (2 * g) - y[:-1] ** (2 * g))
        self.my = _t_hat_mass(y, g)
        rm = np.concatenate([[0.0], 0.5 * (r[1:] + r[:-1]), [r[-1]]])
        self.wr = (rm[1:] ** n - rm[:-1] ** n) / n
        self.fr = rm[1:-1] ** (n - 1) / np.diff(r)

    def matrix(self):
        """Sparse operator on all nodes (rows of boundary nodes are left as identity)."""
        ny, nr = self.y.size, self.r.size
        idx = np.arange(ny * nr).reshape(ny, nr)
        rows, cols, vals = [], [], []

        def add(i, j, v):
            i, j, v = np.broadcast_arrays(i, j, v)
            rows.append(i.ravel())
            cols.append(j.ravel())
            vals.append(v.ravel())

        J = np.arange(1, ny - 1)[:, None]
        I = np.arange(0, nr - 1)[None, :]
        P = idx[1:-1, :-1]
        up = self.cy[J] * self.wr[I]
        dn = self.cy[J - 1] * self.wr[I]
        add(P, idx[J + 1, I], -up)
        add(P, idx[J - 1, I], -dn)
        add(P, P, up + dn)
        # radial flux differences, weighted by the y mass of each neighbouring row
        mass = {-1: self.my[1][J - 1], 0: self.my[2][J - 1] + self.my[0][J],
                1: self.my[1][J]}
        fr_right = self.fr[I]
        fr_left = np.where(I > 0, self.fr[np.maximum(I - 1, 0)], 0.0)
        Il = np.maximum(I - 1, 0)
        for dj, mj in mass.items():
            add(P, idx[J + dj, I + 1], -mj * fr_right)
            add(P, idx[J + dj, Il], -mj * fr_left)
            add(P, idx[J + dj, I], mj * (fr_right + fr_left))
        bnd = np.zeros((ny, nr), bool)
        bnd[0, :] = bnd[-1, :] = True
        bnd[:, -1] = True
        b_idx = idx[bnd]
        add(b_idx, b_idx, np.ones(b_idx.size))
        A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(ny * nr, ny * nr))
        return A, bnd

    def residual(self, values: np.ndarray) -> np.ndarray:
        """Operator applied to a nodal field; boundary rows are zeroed."""
        A, bnd = self.matrix()
        out = (A @ values.ravel()).reshape(values.shape)
        out[bnd] = 0.0
        return out


@dataclass
class GridSolve:
    field: HalfSpaceField
    algebraic_residual: float
    refinement_gap: Optional[float] = None


def grid_solve_dirichlet(trace, side, params: FracParams, Y: float = 8.0, R: float = 8.0,
                         J: int = 256, I: int = 512, check_refinement: bool = False) -> GridSolve:
    """Solve ``div(y^(1-2 gamma) grad u) = 0`` in the radial box ``(0,Y) x (0,R)``.

    Parameters
    ----------
    trace : callable
        Boundary data ``u(0, r)``.
    side : callable
        Values ``u(y, r)`` used on the top ``y = Y`` and the lateral side ``r = R``.
    J, I : int
        Graded y-intervals and uniform r-intervals; ``r = 0`` is a symmetry axis.

    Notes
    -----
    The sparse system is factorised directly (SuperLU).  With ``check_refinement``
    the problem is also solved on the ``(J/2, I/2)`` subgrid, whose nodes are a
    subset, and the largest relative gap at shared interior nodes is reported.
    """
    y = graded_nodes(Y, J, params.gamma)
    r = R * np.arange(I + 1) / I
    op = GridOperator(y, r, params)
    A, bnd = op.matrix()
    rhs = np.zeros((J + 1, I + 1))
    Yg, Rg = np.meshgrid(y, r, indexing="ij")
    rhs[0, :] = trace(r)
    rhs[-1, :] = side(np.full(I + 1, Y), r)
    rhs[:, -1] = side(y, np.full(J + 1, R))
    rhs[0, -1] = trace(np.array([R]))[0]
    u = spla.splu(A.tocsc()).solve(rhs.ravel())
    resid = float(np.max(np.abs(A @ u - rhs.ravel())) / max(1.0, np.max(np.abs(rhs))))
    if resid > 1e-10:
        raise FracError(f"linear solve residual {resid:.2e} exceeds 1e-10")
    fieldv = HalfSpaceField(y, r, u.reshape(J + 1, I + 1), params, "grid_solve",
                            {"Y": Y, "R": R, "J": J, "I": I,
                             "grading": "y_j = Y (j/J)^(1/(2-2gamma))"})
    gap = None
    if check_refinement:
        coarse = grid_solve_dirichlet(trace, side, params, Y, R, J // 2, I // 2).field
        fine = fieldv.values[::2, ::2]
        inner = (slice(1, -1), slice(0, -1))
        gap = float(np.max(np.abs(coarse.values[inner] - fine[inner]))
                    / np.max(np.abs(fine[inner])))
    return GridSolve(fieldv, resid, gap)


def bubble_grid_solve(b_scale: float, params: FracParams, far_field: str = "convolution",
                      **kw) -> GridSolve:
    """Grid solve for the extension of ``delta_{0, lam}`` with the chosen far-field data."""
    b = Bubble(np.zeros(params.n), b_scale)
    lam, s = b_scale, params.s

    def trace(r):
        return (lam / (1 + lam * lam * r * r)) ** (0.5 * s)

    if far_field == "convolution":
        def side(yv, rv):
            z = np.zeros((yv.size, params.n + 1))
            z[:, 0] = yv
            z[:, 1] = rv
            return extend_bubble_convolution(b, z, params)
    elif far_field == "leading":
        def side(yv, rv):
            return lam ** (-0.5 * s) * (yv * yv + rv * rv) ** (-0.5 * s)
    else:
        raise FracError(f"unknown far-field mode {far_field!r}")
    return grid_solve_dirichlet(trace, side, params, **kw)


# ---------------------------------------------------------------------------
# traces

@dataclass(frozen=True)
class TraceExpansion:
    v0: np.ndarray
    v1: np.ndarray
    fit_residual: float


class TraceFitError(FracError):
    pass


def neumann_trace(fld: HalfSpaceField, params: FracParams, y1: Optional[float] = None,
                  gate: Optional[float] = 0.05) -> TraceExpansion:
    """Fit ``u = v0 + v1 y^(2 gamma) + c y^2`` on ``y in [y1, 10 y1]`` at every r-node.

    ``y1`` defaults to the first interior grid line.  The weighted Neumann datum
    ``-d* lim y^(1-2 gamma) u_y`` equals ``-2 gamma d* v1``.  The fit residual is
    the largest misfit relative to ``max |v1| y^(2 gamma)`` on the window.
    """
    params.require_not_half("neumann_trace")
    y = fld.y
    if y1 is None:
        y1 = y[1] if y[0] == 0.0 else y[0]
    sel = (y >= y1 * (1 - 1e-12)) & (y <= 10 * y1 * (1 + 1e-12))
    if sel.sum() < 4:
        raise TraceFitError("trace window holds fewer than four grid lines")
    yy = y[sel] / y1
    g = params.gamma
    basis = np.column_stack([np.ones_like(yy), yy ** (2 * g), yy ** 2])
    vals = fld.values[sel]
    coef, *_ = np.linalg.lstsq(basis, vals, rcond=None)
    resid = vals - basis @ coef
    v0 = coef[0]
    v1 = coef[1] / y1 ** (2 * g)
    scale = np.max(np.abs(coef[1])) * 10 ** (2 * g)
    fit = float(np.max(np.abs(resid)) / scale) if scale > 0 else float(np.max(np.abs(resid)))
    if gate is not None and fit > gate:
        raise TraceFitError(f"trace fit residual {fit:.3g} exceeds gate {gate}")
    return TraceExpansion(v0, v1, fit)


def trace_window_field(b: Bubble, params: FracParams, probes_r, y1_rel: float = 1e-3,
                       m: int = 24) -> HalfSpaceField:
    """Convolution field on a fine graded window ``[y1, 10 y1]`` with ``y1 = y1_rel / lam``."""
    lam = b.scale
    y1 = y1_rel / lam
    t = np.linspace(0, 1, m)
    ynodes = y1 * 10 ** t
    return convolution_field(b, params, ynodes, np.asarray(probes_r, float))


@dataclass(frozen=True)
class DStarReport:
    d_star: float
    values: list
    spread: float


def d_star_from_traces(params: FracParams, lambdas=(1.0, 4.0, 16.0),
                       probes=(0.0, 0.5, 1.0)) -> DStarReport:
    """``d* = c_frac delta^p / (-2 gamma v1)`` over scales and probe radii (in units of 1/lam)."""
    params.require_not_half("d_star")
    c_frac = bubbles.c_frac_oracle(params)
    g = params.gamma
    vals = []
    for lam in lambdas:
        b = Bubble(np.zeros(params.n), lam)
        pr = np.asarray(probes, float) / lam
        fld = trace_window_field(b, params, pr)
        te = neumann_trace(fld, params, y1=fld.y[0])
        dp = (lam / (1 + lam * lam * pr * pr)) ** (0.5 * (params.n + 2 * g))
        vals.extend((c_frac * dp / (-2 * g * te.v1)).tolist())
    mean = float(np.mean(vals))
    spread = float(max(abs(v / mean - 1) for v in vals))
    return DStarReport(mean, vals, spread)


def d_star_oracle(params: FracParams) -> float:
    return cached("d_star", params, lambda: d_star_from_traces(params).d_star)


def d_star_closed(params: FracParams) -> float:
    """Closed form ``2^(2g-1) Gamma(g) / Gamma(1-g)``, cross-check only."""
    g = params.gamma
    return 2 ** (2 * g - 1) * math.gamma(g) / math.gamma(1 - g)


# ---------------------------------------------------------------------------
# Green's function

def green_flat(z, xi, params: FracParams, g_green: float):
    """``g (y^2 + |x - xi|^2)^(-(n - 2 gamma)/2)``."""
    y, x = _split_z(z, params.n)
    d2 = y * y + np.sum((x - np.asarray(xi, float)) ** 2, axis=-1)
    if np.any(d2 == 0):
        raise FracError("Green's function evaluated at its pole")
    return g_green * d2 ** (-0.5 * params.s)


def green_flux(params: FracParams, y0: float = 1e-2, budget=None) -> float:
    """``int y0^(1-2g) (-d/dy) (y0^2 + |x|^2)^(-s/2) dx`` for unit ``g``; independent of y0."""
    s, g = params.s, params.gamma
    res = quad.integrate_rn(
        lambda r: s * y0 ** (2 - 2 * g) * (y0 * y0 + r * r) ** (-0.5 * s - 1), params,
        tol=1e-12, budget=budget, radial=True, scale=y0, breakpoints=(y0,))
    return res.value


def calibrate_green(params: FracParams, d_star: float, budget=None) -> float:
    """Fix ``g`` so that the weighted Neumann flux of the Green's function is a unit mass."""
    return cached("g_green", params, lambda: 1.0 / (d_star * green_flux(params, budget=budget)))


def green_closed(params: FracParams) -> float:
    n, g = params.n, params.gamma
    return math.gamma(n / 2 - g) / (4 ** g * math.pi ** (n / 2) * math.gamma(g))


def green_extension_profile(params: FracParams, y, r, g_green: float, tol=1e-10) -> float:
    """Poisson extension of ``g |x|^(2 gamma - n)`` at ``(y, r)`` by spherical means."""
    n, g, s = params.n, params.gamma, params.s
    p = 1.0 / bubbles.c3_oracle(params).value
    area = params.sphere_area

    def f(rho):
        mean = quad.sphere_mean_power(0.0, 1.0, r, rho, 0.5 * s, n)
        return area * rho ** (n - 1) * p * y ** (2 * g) * (y * y + rho * rho) ** (-0.5 * (n + 2 * g)) * mean

    far = 1e3 * (y + r)
    res = quad.line(f, 0.0, far, tol, points=[y, r, 2 * r])
    tail = quad.line(lambda t: f(far * math.exp(t)) * far * math.exp(t), 0.0, 60.0, tol,
                     atol=1e-300)
    return g_green * (res.value + tail.value)


# ---------------------------------------------------------------------------
# estimate checks

@dataclass(frozen=True)
class EstimateReport:
    max_ratio: dict
    per_lambda: dict
    details: dict = field(default_factory=dict)


def _fd_derivs(b: Bubble, z, params, h):
    """Centered differences of the extension in y, x_1 and x_1 x_1 at step h."""
    n = params.n
    z = np.asarray(z, float)
    e = np.eye(n + 1)
    f = lambda pts: extend_bubble_convolution(b, np.atleast_2d(pts), params)
    dy = (f(z + h * e[0]) - f(z - h * e[0])) / (2 * h)
    grad = np.array([(f(z + h * e[k]) - f(z - h * e[k])) / (2 * h) for k in range(1, n + 1)])
    hess = np.empty((n, n))
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            hess[i - 1, j - 1] = ((f(z + h * e[i] + h * e[j]) - f(z + h * e[i] - h * e[j])
                                   - f(z - h * e[i] + h * e[j]) + f(z - h * e[i] - h * e[j]))[0]
                                  / (4 * h * h))
    return float(dy[0]), grad[:, 0], hess


def rough_derivatives(b: Bubble, z, params: FracParams, h: Optional[float] = None,
                      rtol: float = 1e-2):
    """Richardson-validated centered differences; raises when steps h and h/2 disagree."""
    y = float(np.asarray(z)[0])
    if h is None:
        h = min(1e-2 / b.scale, 0.05 * y)
    a = _fd_derivs(b, z, params, h)
    c = _fd_derivs(b, z, params, h / 2)
    scale_g = max(np.max(np.abs(c[1])), 1e-300)
    scale_h = max(np.max(np.abs(c[2])), 1e-300)
    bad = (abs(a[0] - c[0]) > rtol * max(abs(c[0]), 1e-300) or
           np.max(np.abs(a[1] - c[1])) > rtol * max(scale_g, 1e-12 * abs(c[0])) or
           np.max(np.abs(a[2] - c[2])) > rtol * max(scale_h, 1e-12 * abs(c[0])))
    if bad:
        raise FracError("differencing step too coarse (Richardson mismatch)")
    return tuple((4 * cc - aa) / 3 if not np.isscalar(cc) else (4 * cc - aa) / 3
                 for aa, cc in zip(a, c))


def rough_bounds(b: Bubble, z, params: FracParams):
    """The four bound expressions at ``z`` for (i)-(iv)."""
    y, x = _split_z(np.asarray(z, float), params.n)
    lam = b.scale
    g, n = params.gamma, params.n
    ra2 = float(y * y + np.sum((x - b.a) ** 2))
    w = lam / (1 + lam * lam * ra2)
    return (w ** (0.5 * (n - 2 * g)),
            lam ** g * float(y) ** (2 * g - 1) * w ** (0.5 * n),
            math.sqrt(lam) * w ** (0.5 * (n + 1 - 2 * g)),
            lam * w ** (0.5 * (n + 2 - 2 * g)))


def check_rough_estimates(b: Bubble, samples, params: FracParams,
                          lambdas=(1.0, 10.0, 100.0)) -> EstimateReport:
    """Ratios ``|quantity| / bound`` for (i)-(iv) over samples given in units of ``1/lam``.

    ``samples`` are ``(y, x - a)`` offsets scaled by ``1/lam`` for each scale, so
    the same geometric configuration is probed at every ``lam``.
    """
    per = {}
    for lam in lambdas:
        bb = Bubble(b.center, lam)
        ratios = np.zeros(4)
        for zs in samples:
            zs = np.asarray(zs, float)
            z = np.concatenate([[zs[0] / lam], bb.a + zs[1:] / lam])
            val = float(extend_bubble_convolution(bb, z, params))
            dy, grad, hess = rough_derivatives(bb, z, params)
            bnd = rough_bounds(bb, z, params)
            q = (abs(val), abs(dy), np.linalg.norm(grad), np.linalg.norm(hess, 2))
            ratios = np.maximum(ratios, np.array(q) / np.array(bnd))
        per[lam] = ratios.tolist()
    mx = {k: max(per[l][i] for l in lambdas) for i, k in enumerate(("i", "ii", "iii", "iv"))}
    return EstimateReport(mx, per)


def y_derivative_slope(b: Bubble, params: FracParams, r_rel: float = 0.5,
                       y_rel=(1e-5, 1e-4)) -> float:
    """Log-log slope of ``|d/dy delta_hat|`` between two small heights (units of 1/lam)."""
    lam = b.scale
    vals = []
    for yr in y_rel:
        z = np.concatenate([[yr / lam], b.a + np.eye(params.n)[0] * r_rel / lam])
        vals.append(abs(rough_derivatives(b, z, params)[0]))
    return math.log(vals[1] / vals[0]) / math.log(y_rel[1] / y_rel[0])


def sharp_leading(lam, y, xr, params: FracParams):
    """Leading term ``lam^(-s/2) r_a^(-s)`` with its ``y d/dy`` and ``(x-a).grad_x``."""
    s = params.s
    ra2 = y * y + xr * xr
    L = lam ** (-0.5 * s) * ra2 ** (-0.5 * s)
    return L, -s * L * y * y / ra2, -s * L * xr * xr / ra2


def check_sharp_estimates(b: Bubble, samples, params: FracParams,
                          lambdas=(10.0, 30.0, 100.0)) -> EstimateReport:
    """Scaled deviations ``lam^(s/2) |quantity - leading|`` for (i)-(iii).

    ``samples`` are ``(y, |x - a|)`` pairs with ``r_a`` of order one.  Reports the
    largest deviation over the samples at each scale.
    """
    s = params.s
    per = {}
    for lam in lambdas:
        bb = Bubble(b.center, lam)
        dev = np.zeros(3)
        for yv, xr in samples:
            v, dy, dr = extension_gradient(bb, np.array([yv]), np.array([xr]), params)
            L, yL, xL = sharp_leading(lam, yv, xr, params)
            q = np.array([v[0] - L, yv * dy[0] - yL, xr * dr[0] - xL])
            dev = np.maximum(dev, lam ** (0.5 * s) * np.abs(q))
        per[lam] = dev.tolist()
    mx = {k: max(per[l][i] for l in lambdas) for i, k in enumerate(("i", "ii", "iii"))}
    decreasing = {k: all(per[lambdas[t + 1]][i] < per[lambdas[t]][i]
                         for t in range(len(lambdas) - 1))
                  for i, k in enumerate(("i", "ii", "iii"))}
    return EstimateReport(mx, per, {"strictly_decreasing": decreasing})


def sharp_samples(r_a: float = 1.0, angles=(math.pi / 12, math.pi / 4, math.pi / 2.5)):
    """Points on the half circle ``r_a`` at the given elevation angles."""
    return [(r_a * math.sin(t), r_a * math.cos(t)) for t in angles]
