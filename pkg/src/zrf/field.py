"""Realizations of the random field and its derivative on a prime band.

``X(h) = sum_p cos(theta_p - h log p) / sqrt(p)`` and
``X'(h) = sum_p sin(theta_p - h log p) log p / sqrt(p)``, with the sum over
the primes of a :class:`~zrf.primes.PrimeBand` and ``theta_p`` uniform on
``[0, 2 pi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Philox, SeedSequence

from . import _kernels
from .primes import PrimeBand

TWO_PI = 2.0 * math.pi
_MASK64 = (1 << 64) - 1

TARGETS = ("X", "X'")


def _check_target(target: str) -> str:
    if target in ("X'", "Xp", "X_prime", "dX"):
        return "X'"
    if target == "X":
        return "X"
    raise ValueError(f"target must be 'X' or \"X'\", got {target!r}")


def phases(seed: int, start: int, n: int) -> np.ndarray:
    """Phases for global prime indices ``start .. start+n-1`` under ``seed``.

    Philox is counter based: output number ``i`` depends only on the key and
    ``i``, so a prime's phase does not depend on which band asked for it.
    """
    seed = int(seed)
    if not 0 <= seed <= _MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    if n == 0:
        return np.empty(0)
    bg = Philox(key=seed)
    q, off = divmod(int(start), 4)  # four 64-bit words per counter step
    if q:
        bg.advance(q)
    raw = bg.random_raw(n + off)[off:]
    return (raw >> np.uint64(11)).astype(np.float64) * (TWO_PI / 2.0**53)


def trial_seed(base_seed: int, trial: int) -> int:
    """Seed of trial ``trial`` derived by hashing ``(base_seed, trial)``."""
    ss = SeedSequence(int(base_seed), spawn_key=(int(trial),))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True, eq=False)
class FieldSample:
    band: PrimeBand
    thetas: np.ndarray = field(repr=False)
    seed: int = 0

    def coefficients(self, target: str = "X") -> tuple[np.ndarray, np.ndarray]:
        return coefficients(self.band, self.thetas[None, :], target)


@dataclass(frozen=True)
class CertifiedMax:
    """Grid maximum with an enclosure ``[value, upper_bound]`` of the true sup."""

    arg_h: float
    value: float
    upper_bound: float
    grid_step: float
    lipschitz_used: float

    @property
    def width(self) -> float:
        return self.upper_bound - self.value


def sample_field(band: PrimeBand, seed: int) -> FieldSample:
    thetas = phases(seed, band.start_index, band.size)
    thetas.setflags(write=False)
    return FieldSample(band=band, thetas=thetas, seed=int(seed))


def coefficients(band: PrimeBand, thetas: np.ndarray, target: str = "X"):
    """Per-sample ``(A, B)`` so that the target equals ``A cos(hL) + B sin(hL)`` summed."""
    target = _check_target(target)
    c = np.cos(thetas)
    s = np.sin(thetas)
    if target == "X":
        w = band.inv_sqrt_p
        return np.ascontiguousarray(c * w), np.ascontiguousarray(s * w)
    w = band.log_p * band.inv_sqrt_p
    return np.ascontiguousarray(s * w), np.ascontiguousarray(-c * w)


def eval_X(sample: FieldSample, h: float) -> float:
    band = sample.band
    terms = np.cos(sample.thetas - h * band.log_p) * band.inv_sqrt_p
    return math.fsum(terms)


def eval_X_prime(sample: FieldSample, h: float) -> float:
    band = sample.band
    terms = np.sin(sample.thetas - h * band.log_p) * (band.log_p * band.inv_sqrt_p)
    return math.fsum(terms)


def _uniform_step(grid: np.ndarray) -> float | None:
    n = grid.size
    if n < 3:
        return None
    step = (grid[-1] - grid[0]) / (n - 1)
    if step <= 0:
        return None
    ideal = grid[0] + step * np.arange(n)
    tol = 4 * np.finfo(float).eps * max(abs(grid[0]), abs(grid[-1]), step)
    return step if np.max(np.abs(grid - ideal)) <= tol else None


def eval_X_batch(sample: FieldSample, grid, target: str = "X") -> np.ndarray:
    """Evaluate the field (or ``X'``) at every point of a sorted grid."""
    grid = np.ascontiguousarray(grid, dtype=np.float64)
    if grid.ndim != 1:
        raise ValueError("grid must be one-dimensional")
    if grid.size and np.any(np.diff(grid) < 0):
        raise ValueError("grid must be sorted ascending")
    if grid.size == 0:
        return np.empty(0)
    A, B = sample.coefficients(target)
    step = _uniform_step(grid)
    if step is not None:
        out = _kernels.uniform_grid_values(A, B, sample.band.log_p, grid[0], step, grid.size)
    else:
        out = _kernels.grid_values(A, B, sample.band.log_p, grid)
    return out[0]


def deriv_sup_bound(band: PrimeBand, order: int) -> float:
    """``sum_p (log p)**order / sqrt(p)``, a bound on ``sup_h |X^(order)(h)|``.

    It is therefore a global Lipschitz constant for ``X^(order-1)``.
    """
    if order not in (1, 2, 3):
        raise ValueError(f"order must be 1, 2 or 3, got {order}")
    return math.fsum(band.log_p**order * band.inv_sqrt_p)


def variance_X_prime(band: PrimeBand) -> float:
    """Exact variance of ``X'(h)`` at a fixed ``h``: ``sum_p (log p)**2 / (2p)``."""
    p = band.p.astype(np.float64)
    return math.fsum(band.log_p**2 / (2.0 * p))


def default_resolution(k: int) -> float:
    """``2**(-3k) / 64``: the natural mesh ``2**(-3k) Z`` refined 64 times."""
    return math.ldexp(1.0, -3 * k - 6)


def certified_grid(lo: float, hi: float, resolution: float) -> tuple[float, int]:
    """Step and cell count of the certification grid on ``[lo, hi]``.

    The cell count is the smallest power of two giving ``step <= resolution``,
    so halving the resolution refines the grid by nesting.
    """
    if not resolution > 0:
        raise ValueError(f"resolution must be positive, got {resolution}")
    if not hi > lo:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    cells = 1
    while (hi - lo) / cells > resolution:
        cells *= 2
    return (hi - lo) / cells, cells


def lipschitz(band: PrimeBand, target: str) -> float:
    return deriv_sup_bound(band, 1 if _check_target(target) == "X" else 2)


def certified_max_many(band: PrimeBand, A: np.ndarray, B: np.ndarray, lo: float, hi: float,
                       target: str, resolution: float):
    """Vectorized :func:`certified_max` over rows of coefficients.

    Returns ``(arg_h, value, upper_bound, step, lipschitz)`` with array entries.
    """
    step, cells = certified_grid(lo, hi, resolution)
    lip = lipschitz(band, target)
    best, arg = _kernels.uniform_grid_max(A, B, band.log_p, lo, step, cells + 1)
    return lo + arg * step, best, best + lip * step / 2.0, step, lip


def certified_max(sample: FieldSample, lo: float, hi: float, target: str = "X",
                  resolution: float | None = None) -> CertifiedMax:
    """Certified maximum of ``X`` or ``X'`` over ``[lo, hi]``.

    Scans a uniform grid of step at most ``resolution`` (default
    :func:`default_resolution` of the band's ``k``). The true supremum lies in
    ``[value, value + Lambda * step / 2]`` where ``Lambda`` is the global
    Lipschitz constant from :func:`deriv_sup_bound`.
    """
    if resolution is None:
        resolution = default_resolution(sample.band.k)
    A, B = sample.coefficients(target)
    arg, best, upper, step, lip = certified_max_many(
        sample.band, A, B, lo, hi, target, resolution)
    return CertifiedMax(arg_h=float(arg[0]), value=float(best[0]),
                        upper_bound=float(upper[0]), grid_step=step, lipschitz_used=lip)
