"""Bubble interaction integrals: brute-force oracles, leading-order formulas and sweeps."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import bubbles
from . import quadrature as quad
from .core import Bubble, FracError, FracParams, QuadResult

ORDERS = ("value", "dlambda_k", "grad_a", "hess_a")


# ---------------------------------------------------------------------------
# pairs

def _E(bi: Bubble, bj: Bubble) -> float:
    li, lj = bi.scale, bj.scale
    d2 = float(np.sum((bi.a - bj.a) ** 2))
    return li / lj + lj / li + li * lj * d2


def epsilon_ij(bi: Bubble, bj: Bubble, params: FracParams) -> float:
    """``(lam_i/lam_j + lam_j/lam_i + lam_i lam_j |a_i - a_j|^2)^((2 gamma - n)/2)``."""
    return _E(bi, bj) ** (-0.5 * params.s)


@dataclass(frozen=True)
class BubblePair:
    bi: Bubble
    bj: Bubble
    params: FracParams
    eps: float = field(init=False)
    q: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "eps", epsilon_ij(self.bi, self.bj, self.params))
        r = self.bi.scale / self.bj.scale
        object.__setattr__(self, "q", min(r, 1.0 / r))

    @property
    def sep(self) -> float:
        return float(np.linalg.norm(self.bi.a - self.bj.a))


# ---------------------------------------------------------------------------
# oracles

def _pair_integral(lc: float, alpha: float, lo: float, dist: float, beta: float,
                   params: FracParams, tol: float, budget=None) -> QuadResult:
    """``int delta_{0,lc}^alpha delta_{d e1, lo}^beta`` by radial quadrature about 0.

    The inner bubble is averaged over spheres in closed form, so only a 1-D
    integral in the radius remains; the tail beyond ``far`` is done in ``log r``.
    """
    n, s = params.n, params.s
    area = params.sphere_area
    ca = lc ** (0.5 * s * alpha)
    cb = lo ** (0.5 * s * beta)

    def f(rho):
        inner = (1.0 + lc * lc * rho * rho) ** (-0.5 * s * alpha)
        mean = quad.sphere_mean_power(1.0, lo * lo, dist, rho, 0.5 * s * beta, n)
        return area * rho ** (n - 1) * ca * inner * cb * float(mean)

    pts = [1.0 / lc, 1.0 / lo, dist, dist - 1.0 / lo, dist + 1.0 / lo,
           10.0 / lc, 10.0 / lo]
    far = 100.0 * (dist + 1.0 / lc + 1.0 / lo)
    body = quad.line(f, 0.0, far, tol, budget=budget, points=pts)
    tail = quad.line(lambda t: f(far * math.exp(t)) * far * math.exp(t), 0.0, 80.0, tol,
                     budget=budget, atol=1e-300)
    return QuadResult(body.value + tail.value, body.err_estimate + tail.err_estimate,
                      body.n_evals + tail.n_evals, body.exhausted or tail.exhausted)


def interaction_oracle(bi: Bubble, bj: Bubble, params: FracParams, tol: float = 1e-12,
                       budget=None, dual: bool = False) -> QuadResult:
    """``int delta_i^p delta_j`` (or ``int delta_i delta_j^p`` with ``dual``)."""
    p = params.critical_exponent
    d = float(np.linalg.norm(bi.a - bj.a))
    if dual:
        return _pair_integral(bj.scale, p, bi.scale, d, 1.0, params, tol, budget)
    return _pair_integral(bi.scale, p, bj.scale, d, 1.0, params, tol, budget)


def higher_interaction_oracle(bi: Bubble, bj: Bubble, alpha: float, beta: float,
                              params: FracParams, tol: float = 1e-11, budget=None) -> QuadResult:
    """``int delta_i^alpha delta_j^beta`` with ``alpha + beta = 2n/(n - 2 gamma)``.

    Requires ``alpha > n/(n-2 gamma) > beta > 0`` or the balanced case
    ``alpha = beta = n/(n-2 gamma)``.
    """
    h = params.n / params.s
    if abs(alpha + beta - 2 * h) > 1e-12 * h:
        raise FracError("alpha + beta must equal 2n/(n - 2 gamma)")
    balanced = abs(alpha - h) <= 1e-12 * h and abs(beta - h) <= 1e-12 * h
    if not balanced and not (alpha > h > beta > 0):
        raise FracError("need alpha > n/(n-2 gamma) > beta > 0 or alpha = beta")
    d = float(np.linalg.norm(bi.a - bj.a))
    return _pair_integral(bi.scale, alpha, bj.scale, d, beta, params, tol, budget)


# ---------------------------------------------------------------------------
# leading terms

def interaction_asymptotic(bi: Bubble, bj: Bubble, params: FracParams, order: str = "value",
                           k: str = "i", form: str = "exact") -> dict:
    """Leading term and error scale for the value and its derivatives.

    ``order`` is one of ``value``, ``dlambda_k`` (``lam_k d/dlam_k``, ``k`` in
    {"i", "j"}), ``grad_a`` and ``hess_a`` (derivatives in ``a_i``).

    With ``form="exact"`` the derivative orders are the exact derivatives of
    ``c3 eps``, which carry the factor ``-(n - 2 gamma)`` and the exponent
    ``(n + 2 - 2 gamma)/(n - 2 gamma)``; ``form="displayed"`` omits that factor.
    """
    if order not in ORDERS:
        raise FracError(f"order must be one of {ORDERS}")
    c3 = bubbles.c3_oracle(params).value
    s, n, g = params.s, params.n, params.gamma
    li, lj = bi.scale, bj.scale
    dvec = bi.a - bj.a
    E = _E(bi, bj)
    eps = E ** (-0.5 * s)
    q = min(li / lj, lj / li)
    fac = -s if form == "exact" else 1.0
    if form not in ("exact", "displayed"):
        raise FracError("form must be 'exact' or 'displayed'")
    e_up = eps ** ((s + 2) / s)
    if order == "value":
        lead = c3 * eps
        scale = q ** g * eps ** (n / s)
    elif order == "dlambda_k":
        if k == "i":
            dE = li / lj - lj / li + li * lj * float(dvec @ dvec)
        elif k == "j":
            dE = lj / li - li / lj + li * lj * float(dvec @ dvec)
        else:
            raise FracError("k must be 'i' or 'j'")
        # lam_k d/dlam_k of c3 eps; same in both forms
        lead = c3 * (-0.5 * s) * e_up * dE
        scale = q ** g * eps ** (n / s)
    elif order == "grad_a":
        lead = fac * c3 * li * lj * dvec * e_up
        scale = q ** g * math.sqrt(li * lj) * eps ** ((n + 1) / s)
    else:
        proj = np.eye(n) - (n + 2 - 2 * g) * li * lj * np.outer(dvec, dvec) / E
        lead = fac * c3 * li * lj * proj * e_up
        scale = q ** g * li * lj * eps ** ((n + 2) / s)
    return {"leading": lead, "error_scale": scale}


# ---------------------------------------------------------------------------
# derivative oracles

def _richardson(fun, h, rtol):
    a = fun(h)
    b = fun(h / 2)
    diff = np.max(np.abs(np.asarray(a) - np.asarray(b)))
    ref = max(np.max(np.abs(b)), 1e-300)
    if diff > rtol * ref:
        raise FracError(f"Richardson mismatch {diff / ref:.2e} in derivative oracle")
    return (4 * np.asarray(b) - np.asarray(a)) / 3


def oracle_derivative(bi: Bubble, bj: Bubble, params: FracParams, order: str, k: str = "i",
                      tol: float = 1e-12, rtol: float = 1e-3):
    """Centered differences of :func:`interaction_oracle` with a Richardson gate.

    Steps: ``1e-3`` in ``log lam``; ``1e-3`` times the larger bubble radius in ``a_i``.
    """
    I = lambda a, b: interaction_oracle(a, b, params, tol).value
    if order == "value":
        return I(bi, bj)
    if order == "dlambda_k":
        def fd(h):
            if k == "i":
                up, dn = (Bubble(bi.center, bi.scale * math.exp(h)), bj), \
                         (Bubble(bi.center, bi.scale * math.exp(-h)), bj)
            else:
                up, dn = (bi, Bubble(bj.center, bj.scale * math.exp(h))), \
                         (bi, Bubble(bj.center, bj.scale * math.exp(-h)))
            return (I(*up) - I(*dn)) / (2 * h)
        return float(_richardson(fd, 1e-3, rtol))
    n = params.n
    hstep = 1e-3 / min(bi.scale, bj.scale)
    e = np.eye(n)

    def shifted(v):
        return Bubble(bi.a + v, bi.scale)

    if order == "grad_a":
        def fd(h):
            return np.array([(I(shifted(h * e[m]), bj) - I(shifted(-h * e[m]), bj)) / (2 * h)
                             for m in range(n)])
        return _richardson(fd, hstep, rtol)

    def fd2(h):
        H = np.empty((n, n))
        c = I(bi, bj)
        for m in range(n):
            H[m, m] = (I(shifted(h * e[m]), bj) - 2 * c + I(shifted(-h * e[m]), bj)) / h ** 2
            for l in range(m + 1, n):
                H[m, l] = H[l, m] = (I(shifted(h * (e[m] + e[l])), bj)
                                     - I(shifted(h * (e[m] - e[l])), bj)
                                     - I(shifted(h * (e[l] - e[m])), bj)
                                     + I(shifted(-h * (e[m] + e[l])), bj)) / (4 * h * h)
        return H
    return _richardson(fd2, 10 * hstep, rtol)


@dataclass(frozen=True)
class InteractionReport:
    oracle: QuadResult
    asymptotic: object
    predicted_error_scale: float
    observed_gap: float
    gap_ratio: float
    eps: float = float("nan")


def verify_interaction(bi: Bubble, bj: Bubble, params: FracParams, order: str = "value",
                       k: str = "i", tol: float = 1e-12) -> InteractionReport:
    """Compare the oracle (or its differenced derivative) with the leading term."""
    base = interaction_oracle(bi, bj, params, tol)
    obs = base.value if order == "value" else oracle_derivative(bi, bj, params, order, k, tol)
    asym = interaction_asymptotic(bi, bj, params, order, k)
    gap = float(np.max(np.abs(np.asarray(obs) - np.asarray(asym["leading"]))))
    orc = base if order == "value" else QuadResult(obs, base.err_estimate, base.n_evals)
    return InteractionReport(orc, asym["leading"], asym["error_scale"], gap,
                             gap / asym["error_scale"], epsilon_ij(bi, bj, params))


# ---------------------------------------------------------------------------
# sweeps

def fit_exponent(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


@dataclass
class SweepResult:
    kind: str
    order: str
    rows: list
    fitted_exponent: float
    predicted_exponent: float
    stated_exponent: float

    @property
    def exponent_rel_gap(self) -> float:
        return self.fitted_exponent / self.predicted_exponent - 1.0

    @property
    def gap_ratio_spread(self) -> float:
        r = [row["gap_ratio"] for row in self.rows]
        return max(r) / min(r)

    def csv_rows(self) -> list:
        """Header and data rows; array-valued entries are reduced to their largest magnitude."""
        cols = ("lambda_i", "lambda_j", "sep", "eps", "oracle", "asymptotic", "gap", "gap_ratio")
        out = [list(cols)]
        for row in self.rows:
            out.append([repr(float(row[c])) if np.ndim(row[c]) == 0
                        else repr(float(np.max(np.abs(row[c])))) for c in cols])
        return out

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(self.csv_rows())


STATED = {"value": 0.0, "dlambda_k": 0.0, "grad_a": 1.0, "hess_a": 2.0}

RATIO_START = 10.0
SEPARATION_START = 4.0


def ratio_family(params: FracParams, start: float = RATIO_START, count: int = 4):
    """Scale ratios from ``start`` whose ``eps ~ R^(-s/2)`` spans a little over one decade."""
    top = start * 10 ** (2.0 / params.s) * 1.1
    return tuple(float(v) for v in np.geomspace(start, top, count))


def separation_family(params: FracParams, start: float = SEPARATION_START, count: int = 4):
    """Separations from ``start`` whose ``eps ~ d^(-s)`` spans a little over one decade."""
    top = start * 10 ** (1.0 / params.s) * 1.1
    return tuple(float(v) for v in np.geomspace(start, top, count))


def sweep_pairs(kind: str, order: str, params: FracParams, values=None, offset: float = 0.25):
    """Pairs for one regime.

    ``ratio``: ``lam_i = R``, ``lam_j = 1``; the centers coincide for the value and
    ``lam`` derivative and sit ``offset`` apart for the ``a`` derivatives (which
    vanish identically at coincidence).  ``separation``: unit scales at distance ``d``.
    """
    n = params.n
    e1 = np.eye(n)[0]
    pairs = []
    if kind == "ratio":
        off = offset if order in ("grad_a", "hess_a") else 0.0
        for R in (values or ratio_family(params)):
            pairs.append((Bubble(np.zeros(n), R), Bubble(off * e1, 1.0)))
    elif kind == "separation":
        for d in (values or separation_family(params)):
            pairs.append((Bubble(np.zeros(n), 1.0), Bubble(d * e1, 1.0)))
    else:
        raise FracError("kind must be 'ratio' or 'separation'")
    return pairs


def interaction_sweep(kind: str, order: str, params: FracParams, values=None,
                      k: str = "i") -> SweepResult:
    """Gap against ``eps`` along one regime, with fitted and predicted exponents.

    The predicted exponent is the slope of ``log error_scale`` against ``log eps``
    along the same pairs, so ``q`` and the scale prefactors are accounted for.
    """
    rows = []
    for bi, bj in sweep_pairs(kind, order, params, values):
        rep = verify_interaction(bi, bj, params, order, k)
        rows.append({"lambda_i": bi.scale, "lambda_j": bj.scale,
                     "sep": float(np.linalg.norm(bi.a - bj.a)), "eps": rep.eps,
                     "oracle": rep.oracle.value, "asymptotic": rep.asymptotic,
                     "gap": rep.observed_gap, "gap_ratio": rep.gap_ratio,
                     "error_scale": rep.predicted_error_scale})
    eps = [r["eps"] for r in rows]
    fitted = fit_exponent(eps, [r["gap"] for r in rows])
    predicted = fit_exponent(eps, [r["error_scale"] for r in rows])
    stated = (params.n + STATED[order]) / params.s
    return SweepResult(kind, order, rows, fitted, predicted, stated)


def decade_separations(params: FracParams, start: float = 8.0, count: int = 4):
    """Separations from ``start`` whose ``eps`` values span one decade."""
    top = start * 10 ** (2.0 / params.s)
    return tuple(float(v) for v in np.geomspace(start, top, count))


def higher_interaction_sweep(params: FracParams, balanced: bool, beta: float = 1.0,
                             seps=None) -> dict:
    """Unit bubbles at the given separations (default: :func:`decade_separations`).

    Balanced: ``alpha = beta = n/(n-2 gamma)`` and the normalised values
    ``I / (eps^(n/(n-2 gamma)) |ln eps|)``.  Unbalanced: the fitted slope of
    ``I`` against ``eps``.
    """
    n, s = params.n, params.s
    h = n / s
    al, be = (h, h) if balanced else (2 * h - beta, beta)
    seps = decade_separations(params) if seps is None else seps
    eps, vals = [], []
    for d in seps:
        bi = Bubble(np.zeros(n), 1.0)
        bj = Bubble(d * np.eye(n)[0], 1.0)
        eps.append(epsilon_ij(bi, bj, params))
        vals.append(higher_interaction_oracle(bi, bj, al, be, params).value)
    eps = np.array(eps)
    vals = np.array(vals)
    out = {"seps": list(seps), "eps": eps.tolist(), "values": vals.tolist(),
           "alpha": al, "beta": be}
    if balanced:
        norm = vals / (eps ** h * np.abs(np.log(eps)))
        out["normalized"] = norm.tolist()
        out["band"] = float(norm.max() / norm.min())
    else:
        out["fitted_exponent"] = fit_exponent(eps, vals)
    return out


# ---------------------------------------------------------------------------
# identities used in the proofs

def zero_identity(params: FracParams, k: int = 0, tol: float = 1e-10, budget=None,
                  method: str = "radial") -> dict:
    """``int (1 + r^2 - (n+2-2 gamma) x_k^2) / (1 + r^2)^((n+4-2 gamma)/2)`` over R^n.

    ``method="radial"`` replaces ``x_k^2`` by its spherical mean ``r^2/n``, which is
    exact for the rotation-invariant weight.  ``method="full"`` integrates on the
    whole space; its slowly decaying tail makes it accurate only to about 1e-4 at n=3.
    The size of the two parts is reported so that the zero can be judged relatively.
    """
    n, g = params.n, params.gamma
    c = n + 2 - 2 * g
    ex = 0.5 * (n + 4 - 2 * g)
    if method == "radial":
        res = quad.integrate_rn(lambda r: (1 + r * r * (1 - c / n)) * (1 + r * r) ** (-ex),
                                params, tol=tol, radial=True, breakpoints=(1.0,))
    elif method == "full":
        def f(x):
            r2 = np.sum(x * x, axis=-1)
            return (1 + r2 - c * x[..., k] ** 2) * (1 + r2) ** (-ex)

        res = quad.integrate_rn(f, params, tol=tol, budget=budget, decay=n + 2 - 2 * g)
    else:
        raise FracError("method must be 'radial' or 'full'")
    part = quad.integrate_rn(lambda r: (1 + r * r) ** (1 - ex), params, tol=1e-12,
                             radial=True, breakpoints=(1.0,)).value
    return {"value": res.value, "scale": part, "relative": abs(res.value) / part,
            "err_estimate": res.err_estimate}


def b2_identity(params: FracParams, tol: float = 1e-12) -> dict:
    """``(n-2g)/2 int (1+r^2)^(-(n+2g)/2)`` against ``(n+2g)/2 int (r^2-1)/(r^2+1) (1+r^2)^(-(n+2g)/2)``."""
    n, g = params.n, params.gamma
    a = 0.5 * (n + 2 * g)
    lhs = 0.5 * (n - 2 * g) * quad.integrate_rn(lambda r: (1 + r * r) ** (-a), params, tol=tol,
                                                radial=True, breakpoints=(1.0,)).value
    rhs = a * quad.integrate_rn(lambda r: (r * r - 1) / (r * r + 1) * (1 + r * r) ** (-a),
                                params, tol=tol, radial=True, breakpoints=(1.0,)).value
    return {"lhs": lhs, "rhs": rhs, "relative": abs(lhs / rhs - 1.0)}


def regime_dichotomy(rng: np.random.Generator, n_pairs: int = 1000, n: int = 2) -> bool:
    """``max(a, b) >= (a + b)/2`` for the two parts of ``eps^(2/(2 gamma - n))``."""
    ok = True
    for _ in range(n_pairs):
        li, lj = np.exp(rng.uniform(-5, 5, 2))
        d = rng.normal(size=n) * np.exp(rng.uniform(-3, 3))
        t1 = li / lj + lj / li
        t2 = li * lj * float(d @ d)
        ok &= max(t1, t2) >= 0.5 * (t1 + t2)
    return bool(ok)


def random_pairs(params: FracParams, count: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        li, lj = np.exp(rng.uniform(-2, 2, 2))
        ai = rng.normal(size=params.n)
        aj = rng.normal(size=params.n) * 2
        out.append((Bubble(ai, li), Bubble(aj, lj)))
    return out


def duality_check(params: FracParams, count: int = 20, seed: int = 0, tol: float = 1e-11) -> dict:
    """Largest relative gap between the two orderings over random pairs."""
    gaps = []
    for bi, bj in random_pairs(params, count, seed):
        a = interaction_oracle(bi, bj, params, tol).value
        b = interaction_oracle(bi, bj, params, tol, dual=True).value
        gaps.append(abs(a / b - 1.0))
    return {"max_rel_gap": max(gaps), "count": count}


def appendix_identities(params: FracParams, tol: float = 1e-10, seed: int = 0) -> dict:
    z = zero_identity(params, tol=tol)
    b = b2_identity(params)
    c = regime_dichotomy(np.random.default_rng(seed), n=params.n)
    return {"zero": z, "b2": b, "dichotomy": c}
