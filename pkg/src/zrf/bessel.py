"""Modified Bessel function I0 and the one-prime moment generating functions.

For ``W'_p(h) = sin(theta - h log p) log p / sqrt(p)`` with ``theta`` uniform,
``E exp(lambda W'_p(0)) = I0(lambda log p / sqrt(p))``, and more generally the
circular average of ``exp(a cos t + b sin t)`` equals ``I0(sqrt(a^2 + b^2))``.
Each MGF comes with a quadrature counterpart computed straight from the
defining circular average, used to cross-check the closed forms.
"""

from __future__ import annotations

import math

import numpy as np

I0_MAX_ARG = 700.0
_STOP = 1e-17


def _check_arg(u: float) -> float:
    u = abs(float(u))
    if not u <= I0_MAX_ARG:
        raise ValueError(f"|u| = {u} exceeds the I0 overflow guard {I0_MAX_ARG}")
    return u


def _series_tail(q: float, j: int, term: float, total: float) -> float:
    # term recurrence t_{j+1} = t_j q / (j+1)^2, stop once t_j < 1e-17 * sum
    while term >= _STOP * total:
        j += 1
        term *= q / (j * j)
        total += term
    return total


def bessel_I0(u: float) -> float:
    """``I0(u) = sum_j (u^2/4)^j / (j!)^2`` by power series."""
    u = _check_arg(u)
    return _series_tail(u * u / 4.0, 0, 1.0, 1.0)


def bessel_I0m1(u: float) -> float:
    """``I0(u) - 1`` without cancellation for small ``u``."""
    u = _check_arg(u)
    q = u * u / 4.0
    if q == 0.0:
        return 0.0
    return _series_tail(q, 1, q, q)


def circular_average(func, rtol: float = 1e-14, n0: int = 32, nmax: int = 1 << 16) -> float:
    """``(1/2pi) int_0^{2pi} func(t) dt`` by the periodic trapezoid rule.

    ``func`` maps an array of angles to values. The rule converges
    geometrically for analytic periodic integrands; the node count doubles
    until two successive values agree to ``rtol``.
    """
    rtol = max(rtol, 1e-15)
    n = n0
    prev = None
    while True:
        t = (2.0 * math.pi / n) * np.arange(n)
        val = math.fsum(func(t)) / n
        if prev is not None and abs(val - prev) <= rtol * abs(val) + 1e-300:
            return val
        if n >= nmax:
            raise RuntimeError(f"circular quadrature did not converge with {n} nodes")
        prev = val
        n *= 2


def _exp_rtol(radius: float) -> float:
    # exp(x) inherits relative error ~ eps * |x| from rounding of its argument
    return max(1e-14, 8 * np.finfo(float).eps * radius)


def bessel_I0_quadrature(u: float) -> float:
    u = _check_arg(u)
    return circular_average(lambda t: np.exp(u * np.sin(t)), rtol=_exp_rtol(u))


def bessel_I0m1_quadrature(u: float) -> float:
    u = _check_arg(u)
    if u == 0.0:
        return 0.0
    # pairing t with t + pi turns exp(x) - 1 into cosh(x) - 1 = 2 sinh(x/2)^2
    return circular_average(lambda t: 2.0 * np.sinh(0.5 * u * np.sin(t)) ** 2)


def log_I0_expansion(u: float) -> float:
    """Two-term expansion ``u^2/4 - u^4/64`` of ``log I0(u)``, valid for ``|u| < 1``."""
    u = float(u)
    if not abs(u) < 1.0:
        raise ValueError(f"expansion of log I0 requires |u| < 1, got u={u}")
    u2 = u * u
    return u2 / 4.0 - u2 * u2 / 64.0


LOG_I0_SIXTH_ORDER = 1.0 / 576.0  # exact u^6 coefficient of log I0(u)


def expansion_remainder_ratio(u: float, path: str = "series") -> float:
    """``|log I0(u) - (u^2/4 - u^4/64)| / u^6`` through the given I0 path."""
    i0m1 = {"series": bessel_I0m1, "quadrature": bessel_I0m1_quadrature}[path](u)
    return abs(math.log1p(i0m1) - log_I0_expansion(u)) / u**6


def expansion_remainder_constant(path: str = "series", u_min: float = 0.02,
                                 u_max: float = 0.9, n: int = 200) -> float:
    """Largest remainder ratio over a sweep of ``u in [u_min, u_max]``.

    The ratio is even in ``u`` and decreases from ``1/576`` at ``u -> 0``;
    below ``u_min`` the remainder drops under binary64 resolution.
    """
    us = np.linspace(u_min, u_max, n)
    return max(expansion_remainder_ratio(float(u), path) for u in us)


def mgf_wp_prime(p: int, lam: float) -> float:
    """``E exp(lam W'_p(0)) = I0(lam log p / sqrt(p))``."""
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    return bessel_I0(lam * math.log(p) / math.sqrt(p))


def mgf_wp_prime_quadrature(p: int, lam: float) -> float:
    w = lam * math.log(p) / math.sqrt(p)
    return circular_average(lambda t: np.exp(w * np.sin(t)), rtol=_exp_rtol(w))


def _bivariate_radius(p, lam1, lam2, h1, h2):
    # cos/sin differences in product form, exact for nearby h1, h2
    L = math.log(p)
    mid = 0.5 * (h1 + h2) * L
    half = 0.5 * (h2 - h1) * L
    a = lam1 - 2.0 * lam2 * math.sin(mid) * math.sin(half)
    b = -2.0 * lam2 * math.cos(mid) * math.sin(half)
    return math.sqrt(L * L / p * (a * a + b * b))


def bivariate_mgf_wp(p: int, lam1: float, lam2: float, h1: float, h2: float) -> float:
    """Joint MGF ``E exp(lam1 W'_p(0) + lam2 (W'_p(h2) - W'_p(h1)))`` as an I0 value."""
    if lam1 < 0 or lam2 < 0:
        raise ValueError(f"lambdas must be >= 0, got {lam1}, {lam2}")
    if lam2 == 0.0 or h1 == h2:
        return mgf_wp_prime(p, lam1)
    return bessel_I0(_bivariate_radius(p, lam1, lam2, h1, h2))


def bivariate_mgf_wp_quadrature(p: int, lam1: float, lam2: float, h1: float, h2: float) -> float:
    L = math.log(p)
    w = L / math.sqrt(p)
    mid = 0.5 * (h1 + h2) * L
    jump = 2.0 * lam2 * math.sin(0.5 * (h1 - h2) * L)

    def integrand(t):
        # sin(t - h2 L) - sin(t - h1 L) = 2 cos(t - mid) sin((h1 - h2) L / 2)
        return np.exp(w * (lam1 * np.sin(t) + jump * np.cos(t - mid)))

    return circular_average(integrand, rtol=_exp_rtol(w * (lam1 + 2 * lam2)))


def circular_mgf_identity_check(a: float, b: float) -> tuple[float, float]:
    """Both sides of ``avg exp(a cos t + b sin t) = I0(sqrt(a^2 + b^2))``."""
    radius = math.hypot(a, b)
    closed = bessel_I0(radius)
    quad = circular_average(lambda t: np.exp(a * np.cos(t) + b * np.sin(t)),
                            rtol=_exp_rtol(radius))
    return quad, closed
