"""Standard bubbles, their fractional equation and the volume-type constants."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import gamma as gamma_fn

from . import quadrature as quad
from .core import Bubble, FracError, FracParams, QuadResult, cached


def eval_bubble(b: Bubble, x, params: FracParams):
    """``(lam / (1 + lam^2 |x - a|^2))^((n - 2 gamma)/2)`` at one point or rows of points.

    Examples
    --------
    >>> from fracbubble.core import make_params
    >>> float(eval_bubble(Bubble([0, 0], 1.0), [1.0, 0.0], make_params(2, 0.25)))
    0.5946035575013605
    """
    x = np.asarray(x, dtype=float)
    a = b.a
    d2 = np.sum((x - a) ** 2, axis=-1)
    lam = b.scale
    return (lam / (1.0 + lam * lam * d2)) ** (0.5 * params.s)


class BubbleField:
    """A weighted sum ``sum_i alpha_i delta_{a_i, lam_i}`` usable by the oracles.

    Besides point evaluation it exposes the exact spherical mean (through the
    Gauss hypergeometric closed form) and the exact Laplacian, which is what
    :func:`fracbubble.quadrature.frac_laplacian_pv` needs.
    """

    def __init__(self, terms, params: FracParams):
        if isinstance(terms, Bubble):
            terms = [(1.0, terms)]
        terms = [(float(al), b) for al, b in terms]
        if not terms:
            raise FracError("a bubble field needs at least one term")
        for _, b in terms:
            if b.dim() != params.n:
                raise FracError(f"bubble center has dimension {b.dim()}, expected {params.n}")
        self.terms = terms
        self.params = params
        self.width = min(1.0 / b.scale for _, b in terms)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return sum(al * eval_bubble(b, x, self.params) for al, b in self.terms)

    def spherical_mean(self, x, rho):
        s = self.params.s
        out = 0.0
        for al, b in self.terms:
            lam = b.scale
            d = np.linalg.norm(np.asarray(x, dtype=float) - b.a)
            out = out + al * lam ** (0.5 * s) * quad.sphere_mean_power(
                1.0, lam * lam, d, rho, 0.5 * s, self.params.n)
        return out

    def laplacian(self, x):
        n, s = self.params.n, self.params.s
        out = 0.0
        for al, b in self.terms:
            lam = b.scale
            r2 = float(np.sum((np.asarray(x, dtype=float) - b.a) ** 2))
            t = lam * lam * r2
            f1 = -0.5 * s * (1 + t) ** (-0.5 * s - 1)
            f2 = 0.5 * s * (0.5 * s + 1) * (1 + t) ** (-0.5 * s - 2)
            out += al * lam ** (0.5 * s) * (f1 * 2 * n * lam * lam + f2 * 4 * lam ** 4 * r2)
        return out

    def distances(self, x):
        return [float(np.linalg.norm(np.asarray(x, dtype=float) - b.a)) for _, b in self.terms]


def default_stencil(b: Bubble, npts: int = 5):
    """Points ``a + (k/2) e_1 / lam`` for ``k = 0..npts-1`` (all within ``|x - a| <= 2/lam``)."""
    e1 = np.zeros(b.dim())
    e1[0] = 1.0
    return [b.a + 0.5 * k * e1 / b.scale for k in range(npts)]


@dataclass(frozen=True)
class PDEResidual:
    ratios: list
    mean_ratio: float
    max_rel_dev: float


def bubble_pde_residual(b: Bubble, sample_points: Optional[Sequence] = None,
                        params: FracParams = None, tol: float = 1e-11,
                        budget: Optional[int] = None) -> PDEResidual:
    """Ratios ``(-Delta)^gamma delta(x_i) / delta(x_i)^p`` from the principal-value oracle."""
    if params is None:
        raise FracError("params are required")
    pts = default_stencil(b) if sample_points is None else sample_points
    field = BubbleField(b, params)
    p = params.critical_exponent
    ratios = []
    for x in pts:
        x = np.asarray(x, dtype=float)
        lap = quad.frac_laplacian_pv(field, x, params, tol=tol, budget=budget,
                                     scales=field.distances(x))
        ratios.append(lap / float(field(x[None, :])[0]) ** p)
    mean = float(np.mean(ratios))
    dev = float(max(abs(r / mean - 1.0) for r in ratios))
    return PDEResidual(ratios, mean, dev)


def _radial_oracle(params: FracParams, expo: float, budget) -> QuadResult:
    res = quad.integrate_rn(lambda r: (1.0 + r * r) ** (-expo), params, tol=1e-13,
                            budget=budget, radial=True, breakpoints=(1.0,))
    return res


def c1_oracle(params: FracParams, budget: Optional[int] = None) -> QuadResult:
    """``int (1 + |x|^2)^-n`` by the radial fast path."""
    return cached("c1", params, lambda: _radial_oracle(params, params.n, budget))


def c3_oracle(params: FracParams, budget: Optional[int] = None) -> QuadResult:
    """``int (1 + |x|^2)^(-(n + 2 gamma)/2)`` by the radial fast path."""
    return cached("c3", params,
                  lambda: _radial_oracle(params, 0.5 * (params.n + 2 * params.gamma), budget))


def c_frac_oracle(params: FracParams, budget: Optional[int] = None) -> float:
    """Mean residual ratio at the unit bubble on the fixed five-point stencil."""
    def build():
        b = Bubble(np.zeros(params.n), 1.0)
        return bubble_pde_residual(b, params=params, budget=budget).mean_ratio
    return cached("c_frac", params, build)


# closed forms, used only as cross-checks of the oracles

def c1_closed(params: FracParams) -> float:
    n = params.n
    return math.pi ** (n / 2) * gamma_fn(n / 2) / gamma_fn(n)


def c3_closed(params: FracParams) -> float:
    n, g = params.n, params.gamma
    return math.pi ** (n / 2) * gamma_fn(g) / gamma_fn((n + 2 * g) / 2)


def c_frac_closed(params: FracParams) -> float:
    n, g = params.n, params.gamma
    return 2 ** (2 * g) * gamma_fn((n + 2 * g) / 2) / gamma_fn((n - 2 * g) / 2)
