"""Closed-form tail bounds, Chernoff parameters and the discretization grid.

The leading constant ``c`` and exponent constant ``c_tilde`` of every bound
are inputs: they are generic in the underlying estimates and are only ever
fitted from simulations (see :func:`zrf.experiments.fit_constants`).
Evaluators refuse arguments outside the hypotheses the bounds are stated for.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .primes import band_scale


@dataclass(frozen=True)
class BoundParams:
    """Band ``(r, k)``, hypothesis constant ``C`` and the two fitted constants."""

    r: int
    k: int
    C: float = 1.0
    c: float = 1.0
    c_tilde: float = 1.0
    v: float = field(init=False)

    def __post_init__(self):
        if self.r < -1 or self.r >= self.k:
            raise ValueError(f"need -1 <= r < k so that v > 0, got r={self.r}, k={self.k}")
        for name in ("C", "c", "c_tilde"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        object.__setattr__(self, "v", band_scale(self.r, self.k))

    @property
    def x_cap(self) -> float:
        return self.C * self.v

    def check_x(self, x: float) -> None:
        if not 0 <= x <= self.x_cap:
            raise ValueError(
                f"x={x} outside the hypothesis range 0 <= x <= C*v = {self.x_cap:g}")


def chernoff_lambda1(x: float, v: float) -> float:
    """Exponential tilt ``4x / v`` that turns the one-point MGF into ``exp(-2x^2/v)``."""
    if not v > 0:
        raise ValueError(f"v must be positive, got {v}")
    if x < 0:
        raise ValueError(f"x must be >= 0, got {x}")
    return 4.0 * x / v


def chernoff_lambda2(y: float, h1: float, h2: float, k: int) -> float:
    """Tilt ``sqrt(y) / (|h2 - h1| 2^(3k))`` for the increment ``X'(h2) - X'(h1)``."""
    if h1 == h2:
        raise ValueError("h1 and h2 must be distinct")
    if y < 0:
        raise ValueError(f"y must be >= 0, got {y}")
    return math.sqrt(y) / (abs(h2 - h1) * math.ldexp(1.0, 3 * k))


def _gauss_exponent(params: BoundParams, x: float) -> float:
    return -2.0 * x * x / params.v


def lemma41_bound(params: BoundParams, x: float) -> float:
    """``c exp(-2x^2/v)``, bounding ``P(X'(h) >= x)``."""
    params.check_x(x)
    return params.c * math.exp(_gauss_exponent(params, x))


def prop32_bound(params: BoundParams, x: float) -> float:
    """``c exp(-2x^2/v)``, bounding ``P(max_{|h'-h| <= 2^(-3k-1)} X'(h') >= x)``."""
    params.check_x(x)
    return params.c * math.exp(_gauss_exponent(params, x))


def prop31_bound(params: BoundParams, x: float, a: float) -> float:
    """``c exp(-2x^2/v - c_tilde a^(3/2))`` for the continuity event.

    The event is ``{max_{|h'-h| <= 2^(-3k-1)} X'(h') >= x + a, X'(h) <= x}``;
    requires ``2 <= a <= 2^(6k) - x``.
    """
    params.check_x(x)
    a_cap = math.ldexp(1.0, 6 * params.k) - x
    if not 2 <= a <= a_cap:
        raise ValueError(f"a={a} outside the hypothesis range 2 <= a <= 2^(6k) - x = {a_cap:g}")
    return params.c * math.exp(_gauss_exponent(params, x) - params.c_tilde * a**1.5)


def check_increment_box(k: int, y: float, h1: float, h2: float) -> None:
    y_cap = math.ldexp(1.0, 6 * k)
    if not 0 <= y <= y_cap:
        raise ValueError(f"y={y} outside the hypothesis range 0 <= y <= 2^(6k) = {y_cap:g}")
    if h1 == h2:
        raise ValueError("h1 and h2 must be distinct")
    half = math.ldexp(1.0, -3 * k - 1)
    for name, h in (("h1", h1), ("h2", h2)):
        if not -half <= h <= half:
            raise ValueError(f"{name}={h} outside [-2^(-3k-1), 2^(-3k-1)] = [{-half:g}, {half:g}]")


def increment_exponent(k: int, y: float, h1: float, h2: float) -> float:
    """``y^(3/2) / (|h2 - h1| 2^(3k))``, the factor multiplying ``c_tilde``."""
    return y**1.5 / (abs(h2 - h1) * math.ldexp(1.0, 3 * k))


def lemma42_bound(params: BoundParams, x: float, y: float, h1: float, h2: float) -> float:
    """``c exp(-2x^2/v - c_tilde y^(3/2) / (|h2-h1| 2^(3k)))``.

    Bounds ``P(X'(0) >= x, X'(h2) - X'(h1) >= y)`` for
    ``|h1|, |h2| <= 2^(-3k-1)``.
    """
    params.check_x(x)
    check_increment_box(params.k, y, h1, h2)
    expo = _gauss_exponent(params, x) - params.c_tilde * increment_exponent(params.k, y, h1, h2)
    return params.c * math.exp(expo)


@dataclass(frozen=True, eq=False)
class GridSpec:
    r: int
    k: int
    L: float
    count: int
    points: np.ndarray = field(repr=False)

    @property
    def spacing(self) -> float:
        return 1.0 / (self.count - 1)

    @property
    def covering_radius(self) -> float:
        return 0.5 / (self.count - 1)


def grid_count(r: int, k: int, L: float) -> int:
    """``ceil(L sqrt(v) sqrt(k log 2))``."""
    return math.ceil(L * math.sqrt(band_scale(r, k)) * math.sqrt(k * math.log(2.0)))


def build_grid(r: int, k: int, L: float) -> GridSpec:
    """Endpoint-inclusive equidistant points ``j / (count - 1)`` on ``[0, 1]``."""
    if not r < k:
        raise ValueError(f"need r < k, got r={r}, k={k}")
    if not L > 0:
        raise ValueError(f"L must be positive, got {L}")
    count = grid_count(r, k, L)
    if count < 2:
        raise ValueError(f"grid needs at least 2 points, (r={r}, k={k}, L={L}) gives {count}")
    points = np.arange(count) / (count - 1)
    points.setflags(write=False)
    return GridSpec(r=r, k=k, L=float(L), count=count, points=points)


def theorem_bound(k: int, K: float, L: float) -> float:
    """``exp(-(k/4) (1 - e^(-K))^2 L^2)``, the probability that the grid misses by more than K."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not (K > 0 and L > 0):
        raise ValueError(f"K and L must be positive, got K={K}, L={L}")
    return math.exp(-(k / 4.0) * (-math.expm1(-K)) ** 2 * L * L)


def required_L(K: float, M: float) -> float:
    """``2M / (1 - e^(-K))``: grid density needed for derivative level ``M``."""
    if not (K > 0 and M > 0):
        raise ValueError(f"K and M must be positive, got K={K}, M={M}")
    return 2.0 * M / -math.expm1(-K)


def derivative_level(K: float, L: float) -> float:
    """``(1 - e^(-K)) L / 2``, the inverse of :func:`required_L` in ``M``."""
    return -math.expm1(-K) * L / 2.0


def all_bounds(params: BoundParams, x: float | None = None, a: float | None = None,
               y: float | None = None, h1: float | None = None, h2: float | None = None,
               K: float | None = None, L: float | None = None) -> dict:
    """Every evaluator whose arguments are supplied, keyed by name."""
    out = {"v": params.v}
    if x is not None:
        out["lambda1"] = chernoff_lambda1(x, params.v)
        out["lemma41"] = lemma41_bound(params, x)
        out["prop32"] = prop32_bound(params, x)
        if a is not None:
            out["prop31"] = prop31_bound(params, x, a)
        if y is not None and h1 is not None and h2 is not None:
            out["lambda2"] = chernoff_lambda2(y, h1, h2, params.k)
            out["lemma42"] = lemma42_bound(params, x, y, h1, h2)
    if L is not None:
        out["grid_count"] = build_grid(params.r, params.k, L).count
        if K is not None:
            out["theorem"] = theorem_bound(params.k, K, L)
            out["derivative_level"] = derivative_level(K, L)
    return out
