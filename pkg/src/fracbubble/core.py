"""Shared domain types, parameter validation and the per-(n, gamma) constant cache."""
from __future__ import annotations

import math
import os
import threading
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

DEFAULT_BUDGET = 10_000_000
HALF_GUARD = 1e-3


class FracError(ValueError):
    """Raised for invalid parameters or violated operation preconditions."""


class NearHalfError(FracError):
    """Raised when an expansion-based operation is called with gamma close to 1/2."""


class BudgetExhausted(RuntimeError):
    """Raised when an oracle cannot reach its tolerance within the evaluation budget."""


def default_budget() -> int:
    """Evaluation budget, overridable through ``FRACBUBBLE_BUDGET``."""
    raw = os.environ.get("FRACBUBBLE_BUDGET")
    if raw is None:
        return DEFAULT_BUDGET
    try:
        value = int(float(raw))
    except ValueError as exc:
        raise FracError(f"FRACBUBBLE_BUDGET must be an integer, got {raw!r}") from exc
    if value <= 0:
        raise FracError("FRACBUBBLE_BUDGET must be positive")
    return value


@dataclass(frozen=True)
class FracParams:
    """Dimension ``n`` and order ``gamma`` together with the derived exponents.

    Attributes
    ----------
    n : int
        Boundary dimension.
    gamma : float
        Fractional order in (0, 1).
    critical_exponent : float
        ``(n + 2 gamma) / (n - 2 gamma)``.
    trace_weight : float
        ``1 - 2 gamma``, the exponent of the half-space weight.
    near_half : bool
        True when ``|gamma - 1/2| < 1e-3``.
    """

    n: int
    gamma: float
    critical_exponent: float = field(init=False)
    trace_weight: float = field(init=False)
    near_half: bool = field(init=False)

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise FracError(f"n must be a positive integer, got {self.n!r}")
        g = float(self.gamma)
        if not (0.0 < g < 1.0) or not math.isfinite(g):
            raise FracError(f"gamma must lie in (0, 1), got {self.gamma!r}")
        if self.n - 2.0 * g <= 0.0:
            raise FracError(f"n - 2*gamma must be positive, got n={self.n}, gamma={g}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "gamma", g)
        s = self.n - 2.0 * g
        object.__setattr__(self, "critical_exponent", (self.n + 2.0 * g) / s)
        object.__setattr__(self, "trace_weight", 1.0 - 2.0 * g)
        object.__setattr__(self, "near_half", abs(g - 0.5) < HALF_GUARD)

    @property
    def s(self) -> float:
        """Bubble homogeneity ``n - 2 gamma``."""
        return self.n - 2.0 * self.gamma

    @property
    def volume_exponent(self) -> float:
        """Critical Sobolev exponent ``2n / (n - 2 gamma)``."""
        return 2.0 * self.n / self.s

    @property
    def sphere_area(self) -> float:
        """Surface area of the unit sphere in R^n."""
        return 2.0 * math.pi ** (self.n / 2) / math.gamma(self.n / 2)

    def require_not_half(self, what: str = "operation"):
        if self.near_half:
            raise NearHalfError(
                f"{what} needs |gamma - 1/2| >= {HALF_GUARD}; got gamma={self.gamma}")


def make_params(n: int, gamma: float) -> FracParams:
    """Validate ``(n, gamma)`` and return the populated parameter record."""
    return FracParams(n, gamma)


@dataclass(frozen=True)
class Bubble:
    """Center ``a`` and scale ``lam`` of a standard bubble."""

    center: tuple
    scale: float

    def __init__(self, center, scale: float = 1.0):
        c = np.atleast_1d(np.asarray(center, dtype=float))
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise FracError("bubble center must be a finite point")
        if not (scale > 0.0) or not math.isfinite(scale):
            raise FracError(f"bubble scale must be positive, got {scale!r}")
        object.__setattr__(self, "center", tuple(float(v) for v in c))
        object.__setattr__(self, "scale", float(scale))

    @property
    def a(self) -> np.ndarray:
        return np.array(self.center)

    def dim(self) -> int:
        return len(self.center)


@dataclass(frozen=True)
class QuadResult:
    """Value, enforced error estimate and evaluation count of an oracle integration."""

    value: float
    err_estimate: float
    n_evals: int
    exhausted: bool = False

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class ConstantSet:
    """Model-space constants for one ``(n, gamma)``.

    Entries that need ``gamma`` away from 1/2 are ``None`` when the guard applies;
    ``skipped`` names them and ``residuals`` holds the relative cross-relation gaps.
    """

    params: FracParams
    c1: float
    c3: float
    p_poisson: float
    c2: Optional[float] = None
    c4: Optional[float] = None
    c_frac: Optional[float] = None
    d_star: Optional[float] = None
    d_gamma: Optional[float] = None
    g_green: Optional[float] = None
    c_star: Optional[float] = None
    yamabe_sphere: Optional[float] = None
    residuals: dict = field(default_factory=dict)
    skipped: tuple = ()
    budget: int = DEFAULT_BUDGET

    def consistent(self, tol: float = 1e-3) -> bool:
        return all(abs(v) <= tol for v in self.residuals.values())

    def as_dict(self) -> dict:
        keys = ("c1", "c2", "c3", "c4", "c_frac", "d_star", "d_gamma", "p_poisson",
                "g_green", "c_star", "yamabe_sphere")
        out = {k: getattr(self, k) for k in keys}
        for k in self.skipped:
            out[k] = "skipped: near_half"
        return out


_CACHE: dict = {}
_CACHE_LOCK = threading.Lock()


def cached(kind: str, params: FracParams, build, *extra):
    """Read-mostly cache keyed by ``(kind, n, gamma, *extra)``.

    Concurrent first computations may both run ``build``; the first stored value wins.
    """
    key = (kind, params.n, params.gamma) + tuple(extra)
    with _CACHE_LOCK:
        if key in _CACHE:
            return _CACHE[key]
    value = build()
    with _CACHE_LOCK:
        return _CACHE.setdefault(key, value)


def clear_cache():
    with _CACHE_LOCK:
        _CACHE.clear()


def compute_constants(params: FracParams, budget: Optional[int] = None) -> ConstantSet:
    """Populate every constant from its oracle and check the cross relations.

    ``c1`` and ``c3`` come from radial volume quadrature, ``c_frac`` from the
    principal-value residual ratio on a fixed stencil, ``d_star`` from Neumann
    traces of the convolution extension, ``c2`` from the weighted extension
    energy, ``yamabe_sphere`` from the single-bubble quotient (spectral quadratic
    form over n-dimensional volume cubature).  Residuals are relative gaps of
    ``c2 = c_frac c1`` and ``Y = c2 / c1^((n-2 gamma)/n)``.
    """
    budget = default_budget() if budget is None else int(budget)
    return cached("constants", params, lambda: _build_constants(params, budget), budget)


def _build_constants(params: FracParams, budget: int) -> ConstantSet:
    from . import bubbles, energy, extension

    c1 = bubbles.c1_oracle(params, budget=budget).value
    c3 = bubbles.c3_oracle(params, budget=budget).value
    if params.near_half:
        skipped = ("c2", "c4", "c_frac", "d_star", "d_gamma", "g_green", "c_star",
                   "yamabe_sphere")
        return ConstantSet(params, c1=c1, c3=c3, p_poisson=1.0 / c3, skipped=skipped,
                           budget=budget)
    c_frac = bubbles.c_frac_oracle(params, budget=budget)
    d_star = extension.d_star_oracle(params)
    energy_ext = extension.extension_energy(params, budget=budget).value
    c2 = d_star * energy_ext
    g_green = extension.calibrate_green(params, d_star, budget=budget)
    yam = energy.single_bubble_quotient(params, budget=budget)
    s = params.s
    residuals = {
        "c2 = c_frac*c1": c2 / (c_frac * c1) - 1.0,
        "Y = c2/c1^(s/n)": yam / (c2 / c1 ** (s / params.n)) - 1.0,
    }
    return ConstantSet(params, c1=c1, c2=c2, c3=c3, c4=c_frac * c3, c_frac=c_frac,
                       d_star=d_star, d_gamma=2.0 * params.gamma * d_star,
                       p_poisson=1.0 / c3, g_green=g_green, c_star=d_star * c3,
                       yamabe_sphere=yam, residuals=residuals, budget=budget)
