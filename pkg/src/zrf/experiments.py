"""Monte Carlo estimates of the tail events, with exact binomial intervals.

Trial ``t`` of a run draws its phases from ``trial_seed(base_seed, t)``, so
every estimator called with the same :class:`TrialConfig` sees the same field
realizations. Trials are processed in fixed-size chunks whose boundaries
depend only on the band size; worker threads only change which chunk runs
where, never the numbers.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy import stats

from . import _kernels
from .bounds import BoundParams, build_grid, check_increment_box, increment_exponent, theorem_bound, GridSpec
from .field import certified_grid, coefficients, default_resolution, lipschitz, phases, trial_seed
from .primes import PrimeBand, band_scale, build_band

HIT, MISS, AMBIGUOUS = 1, 0, -1
AMBIGUITY_WARN_FRACTION = 1e-3
_CHUNK_CELLS = 1 << 21


class AmbiguityWarning(UserWarning):
    """Too many trials had a certified enclosure straddling the threshold."""


class FitError(RuntimeError):
    """No constants make the bound dominate every estimate."""


@dataclass(frozen=True)
class TrialConfig:
    r: int
    k: int
    n_trials: int
    base_seed: int
    resolution: float | None = None
    ci_level: float = 0.95
    C: float = 1.0

    def __post_init__(self):
        if not self.r < self.k:
            raise ValueError(f"need r < k, got r={self.r}, k={self.k}")
        if self.n_trials < 1:
            raise ValueError(f"n_trials must be >= 1, got {self.n_trials}")
        if self.resolution is None:
            object.__setattr__(self, "resolution", default_resolution(self.k))
        if not self.resolution > 0:
            raise ValueError(f"resolution must be positive, got {self.resolution}")
        if not 0 < self.ci_level < 1:
            raise ValueError(f"ci_level must lie in (0, 1), got {self.ci_level}")

    @property
    def v(self) -> float:
        return band_scale(self.r, self.k)

    @property
    def band(self) -> PrimeBand:
        return build_band(self.r, self.k)

    @property
    def half_window(self) -> float:
        """``2^(-3k-1)``, the radius of the windows in the interval events."""
        return math.ldexp(1.0, -3 * self.k - 1)

    def check_x(self, x: float) -> None:
        BoundParams(self.r, self.k, C=self.C).check_x(x)


def exact_binomial_ci(hits: int, n: int, level: float = 0.95) -> tuple[float, float]:
    """Two-sided Clopper-Pearson interval from beta quantiles."""
    if not 0 < level < 1:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    if not (n >= 1 and 0 <= hits <= n):
        raise ValueError(f"need 0 <= hits <= n and n >= 1, got hits={hits}, n={n}")
    alpha = 1.0 - level
    lo = 0.0 if hits == 0 else float(stats.beta.ppf(alpha / 2, hits, n - hits + 1))
    hi = 1.0 if hits == n else float(stats.beta.ppf(1 - alpha / 2, hits + 1, n - hits))
    return lo, hi


@dataclass(frozen=True)
class TailEstimate:
    threshold: float
    hits: int
    n: int
    p_hat: float
    ci_lo: float
    ci_hi: float
    ambiguous: int = 0
    ci_level: float = 0.95
    params: dict = field(default_factory=dict, compare=False)
    outcomes: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def misses(self) -> int:
        return self.n - self.hits - self.ambiguous

    @property
    def p_hat_pessimistic(self) -> float:
        """Hit frequency with every ambiguous trial counted as a hit."""
        return (self.hits + self.ambiguous) / self.n

    @property
    def ci_hi_pessimistic(self) -> float:
        return exact_binomial_ci(self.hits + self.ambiguous, self.n, self.ci_level)[1]

    def hit_mask(self) -> np.ndarray:
        return self.outcomes == HIT


def make_estimate(threshold: float, outcomes: np.ndarray, level: float,
                  params: dict | None = None) -> TailEstimate:
    outcomes = np.asarray(outcomes, dtype=np.int8)
    n = outcomes.size
    hits = int(np.count_nonzero(outcomes == HIT))
    ambiguous = int(np.count_nonzero(outcomes == AMBIGUOUS))
    lo, hi = exact_binomial_ci(hits, n, level)
    if ambiguous > AMBIGUITY_WARN_FRACTION * n:
        warnings.warn(f"{ambiguous} of {n} trials straddle the threshold {threshold}; "
                      "refine the resolution", AmbiguityWarning, stacklevel=3)
    return TailEstimate(threshold=float(threshold), hits=hits, n=n, p_hat=hits / n,
                        ci_lo=lo, ci_hi=hi, ambiguous=ambiguous, ci_level=level,
                        params=dict(params or {}), outcomes=outcomes)


def _chunk_bounds(n_trials: int, band_size: int) -> list[tuple[int, int]]:
    size = max(1, min(1024, _CHUNK_CELLS // max(1, band_size)))
    return [(s, min(s + size, n_trials)) for s in range(0, n_trials, size)]


def trial_phases(band: PrimeBand, base_seed: int, t0: int, t1: int) -> np.ndarray:
    out = np.empty((t1 - t0, band.size))
    for i, t in enumerate(range(t0, t1)):
        out[i] = phases(trial_seed(base_seed, t), band.start_index, band.size)
    return out


def trial_statistics(cfg: TrialConfig, point_hs: Sequence[float] = (),
                     interval_h: float | None = None, gap_grid: GridSpec | None = None,
                     threads: int = 1) -> dict:
    """Per-trial quantities shared by all estimators.

    Returns arrays keyed by:

    * ``"points"``: ``X'`` at each of ``point_hs``, shape ``(n, len(point_hs))``;
    * ``"interval_value"``, ``"interval_upper"``: certified enclosure of
      ``max X'`` over ``[interval_h - 2^(-3k-1), interval_h + 2^(-3k-1)]``,
      ``"interval_point"``: ``X'(interval_h)``;
    * ``"unit_value"``, ``"unit_upper"``: certified enclosure of ``max X``
      over ``[0, 1]`` and ``"grid_max"``: ``max X`` over ``gap_grid``.
    """
    band = cfg.band
    if band.size == 0:
        raise ValueError(f"band (r={cfg.r}, k={cfg.k}) holds no primes")
    point_hs = np.asarray(point_hs, dtype=np.float64)
    log_p = band.log_p
    if interval_h is not None:
        lo = interval_h - cfg.half_window
        istep, icells = certified_grid(lo, interval_h + cfg.half_window, cfg.resolution)
        ilip = lipschitz(band, "X'")
    if gap_grid is not None:
        ustep, ucells = certified_grid(0.0, 1.0, cfg.resolution)
        ulip = lipschitz(band, "X")

    def run(bounds):
        t0, t1 = bounds
        thetas = trial_phases(band, cfg.base_seed, t0, t1)
        out = {}
        if point_hs.size or interval_h is not None:
            A, B = coefficients(band, thetas, "X'")
            if point_hs.size:
                out["points"] = _kernels.grid_values(A, B, log_p, point_hs)
            if interval_h is not None:
                center = _kernels.grid_values(A, B, log_p, np.array([float(interval_h)]))[:, 0]
                best, _ = _kernels.uniform_grid_max(A, B, log_p, lo, istep, icells + 1)
                out["interval_point"] = center
                out["interval_value"] = np.maximum(best, center)
                out["interval_upper"] = best + ilip * istep / 2.0
        if gap_grid is not None:
            A, B = coefficients(band, thetas, "X")
            best, _ = _kernels.uniform_grid_max(A, B, log_p, 0.0, ustep, ucells + 1)
            gmax, _ = _kernels.uniform_grid_max(A, B, log_p, 0.0, 1.0 / (gap_grid.count - 1),
                                                gap_grid.count)
            out["unit_value"] = best
            out["unit_upper"] = best + ulip * ustep / 2.0
            out["grid_max"] = gmax
        return out

    chunks = _chunk_bounds(cfg.n_trials, band.size)
    if threads <= 1 or len(chunks) == 1:
        parts = [run(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            parts = list(pool.map(run, chunks))
    return {key: np.concatenate([p[key] for p in parts]) for key in parts[0]}


def _base_params(cfg: TrialConfig, event: str, **extra) -> dict:
    return {"event": event, "r": cfg.r, "k": cfg.k, "v": cfg.v, **extra}


def estimate_point_tail(cfg: TrialConfig, x_values: Sequence[float], h: float = 0.0,
                        side: str = "upper", threads: int = 1) -> list[TailEstimate]:
    """``P(X'(h) >= x)`` for each ``x`` (or ``P(X'(h) <= x)`` with ``side="lower"``)."""
    if side not in ("upper", "lower"):
        raise ValueError(f"side must be 'upper' or 'lower', got {side!r}")
    vals = trial_statistics(cfg, point_hs=[h], threads=threads)["points"][:, 0]
    out = []
    for x in x_values:
        hit = vals >= x if side == "upper" else vals <= x
        params = _base_params(cfg, "point_tail" if side == "upper" else "point_lower_tail",
                              x=float(x), h=float(h))
        out.append(make_estimate(x, np.where(hit, HIT, MISS), cfg.ci_level, params))
    return out


def _threshold_outcomes(value, upper, threshold, condition=None):
    out = np.where(value >= threshold, HIT, np.where(upper >= threshold, AMBIGUOUS, MISS))
    if condition is not None:
        out = np.where(condition, out, MISS)
    return out.astype(np.int8)


def estimate_interval_max_tail(cfg: TrialConfig, h: float, x: float, strict: bool = True,
                               threads: int = 1) -> TailEstimate:
    """``P(max_{|h'-h| <= 2^(-3k-1)} X'(h') >= x)`` through certified maxima.

    A trial is a hit when the certified lower value reaches ``x`` and
    ambiguous when only the enclosure's upper end does. ``strict`` enforces
    ``0 <= x <= C v``.
    """
    if strict:
        cfg.check_x(x)
    st = trial_statistics(cfg, interval_h=h, threads=threads)
    outcomes = _threshold_outcomes(st["interval_value"], st["interval_upper"], x)
    return make_estimate(x, outcomes, cfg.ci_level,
                         _base_params(cfg, "interval_max", x=float(x), h=float(h)))


def estimate_continuity_event(cfg: TrialConfig, h: float, x: float, a: float,
                              strict: bool = True, threads: int = 1) -> TailEstimate:
    """``P(max_{|h'-h| <= 2^(-3k-1)} X'(h') >= x + a, X'(h) <= x)``."""
    if strict:
        cfg.check_x(x)
        a_cap = math.ldexp(1.0, 6 * cfg.k) - x
        if not 2 <= a <= a_cap:
            raise ValueError(f"a={a} outside the hypothesis range 2 <= a <= 2^(6k) - x = {a_cap:g}")
    st = trial_statistics(cfg, interval_h=h, threads=threads)
    outcomes = _threshold_outcomes(st["interval_value"], st["interval_upper"], x + a,
                                   condition=st["interval_point"] <= x)
    return make_estimate(x + a, outcomes, cfg.ci_level,
                         _base_params(cfg, "continuity", x=float(x), a=float(a), h=float(h)))


def estimate_joint_increment(cfg: TrialConfig, x: float, y: float, h1: float, h2: float,
                             strict: bool = True, threads: int = 1) -> TailEstimate:
    """``P(X'(0) >= x, X'(h2) - X'(h1) >= y)`` from three point evaluations."""
    if strict:
        cfg.check_x(x)
        check_increment_box(cfg.k, y, h1, h2)
    pts = trial_statistics(cfg, point_hs=[0.0, h1, h2], threads=threads)["points"]
    hit = (pts[:, 0] >= x) & (pts[:, 2] - pts[:, 1] >= y)
    params = _base_params(cfg, "joint_increment", x=float(x), y=float(y),
                          h1=float(h1), h2=float(h2))
    return make_estimate(x, np.where(hit, HIT, MISS), cfg.ci_level, params)


@dataclass(frozen=True, eq=False)
class GapResult:
    K: float
    L: float
    grid: GridSpec
    gaps: dict
    exceed_freq: TailEstimate
    bound: float
    per_trial: np.ndarray | None = field(default=None, repr=False)


def gap_experiment(cfg: TrialConfig, K: float, L: float, threads: int = 1) -> GapResult:
    """Continuous versus grid maximum of ``X`` on ``[0, 1]``.

    Per trial the continuous maximum is a certified enclosure ``[lo, hi]``
    and the discrete maximum is taken over the equidistant grid of
    :func:`~zrf.bounds.build_grid`. The reported gap is the enclosure
    midpoint minus the discrete maximum; the exceedance event ``gap > K``
    counts as a hit only when it holds for the whole enclosure.
    """
    if not K > 0:
        raise ValueError(f"K must be positive, got {K}")
    grid = build_grid(cfg.r, cfg.k, L)
    st = trial_statistics(cfg, gap_grid=grid, threads=threads)
    gap_lo = st["unit_value"] - st["grid_max"]
    gap_hi = st["unit_upper"] - st["grid_max"]
    mid = 0.5 * (gap_lo + gap_hi)
    outcomes = _threshold_outcomes(gap_lo, gap_hi, np.nextafter(K, np.inf))
    params = _base_params(cfg, "gap", K=float(K), L=float(L), grid_count=grid.count)
    est = make_estimate(K, outcomes, cfg.ci_level, params)
    summary = {
        "mean": float(np.mean(mid)), "std": float(np.std(mid)),
        "min": float(np.min(mid)), "median": float(np.median(mid)),
        "q90": float(np.quantile(mid, 0.9)), "q99": float(np.quantile(mid, 0.99)),
        "max": float(np.max(mid)),
        "max_enclosure_width": float(np.max(st["unit_upper"] - st["unit_value"])),
        "negative_slack": int(np.count_nonzero(gap_lo < 0)),
        "min_lower_gap": float(np.min(gap_lo)),
    }
    return GapResult(K=float(K), L=float(L), grid=grid, gaps=summary, exceed_freq=est,
                     bound=theorem_bound(cfg.k, K, L), per_trial=mid)


class FitResult(NamedTuple):
    c: float
    c_tilde: float | None


_FORMS = ("lemma41", "prop32", "prop31", "lemma42")


def _fit_terms(est: TailEstimate, form: str) -> tuple[float, float]:
    # returns (2 x^2 / v, extra exponent multiplying c_tilde)
    p = est.params
    try:
        x, v = p["x"], p["v"]
    except KeyError as exc:
        raise ValueError(f"estimate lacks the parameter {exc} needed for a {form} fit") from None
    if x < 0:
        raise ValueError(f"x={x} outside the hypothesis range x >= 0")
    gauss = 2.0 * x * x / v
    if form in ("lemma41", "prop32"):
        return gauss, 0.0
    if form == "prop31":
        if p.get("a", 0) < 2:
            raise ValueError("prop31 fits need estimates with a >= 2")
        return gauss, p["a"] ** 1.5
    check_increment_box(p["k"], p["y"], p["h1"], p["h2"])
    return gauss, increment_exponent(p["k"], p["y"], p["h1"], p["h2"])


def fit_constants(estimates: Sequence[TailEstimate], bound_form: str,
                  c: float | None = None, c_tilde: float | None = None) -> FitResult:
    """Constants making ``bound_form`` dominate every estimate's ``ci_hi``.

    * Gaussian forms (``"lemma41"``, ``"prop32"``): the smallest ``c``.
    * ``"prop31"``/``"lemma42"`` with ``c_tilde`` given: the smallest ``c``.
    * with ``c`` given: the largest ``c_tilde >= 0``, i.e. the fastest
      decay compatible with that leading constant; :class:`FitError` if even
      ``c_tilde = 0`` fails.
    * with neither: ``c_tilde`` is the (nonnegative) decay rate of
      ``log ci_hi`` in the extra exponent by least squares, then ``c`` is the
      smallest for it.
    """
    if bound_form not in _FORMS:
        raise ValueError(f"bound_form must be one of {_FORMS}, got {bound_form!r}")
    if not estimates:
        raise ValueError("need at least one estimate")
    terms = np.array([_fit_terms(e, bound_form) for e in estimates])
    gauss, extra = terms[:, 0], terms[:, 1]
    log_hi = np.log([e.ci_hi for e in estimates])
    if bound_form in ("lemma41", "prop32"):
        return FitResult(float(np.exp(np.max(log_hi + gauss))), None)
    if c is None and c_tilde is None:
        if np.ptp(extra) > 0:
            slope = np.polyfit(extra, log_hi, 1)[0]
            c_tilde = max(0.0, -float(slope))
        else:
            c_tilde = 0.0
    if c_tilde is not None:
        if c_tilde < 0:
            raise ValueError(f"c_tilde must be >= 0, got {c_tilde}")
        return FitResult(float(np.exp(np.max(log_hi + gauss + c_tilde * extra))), float(c_tilde))
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    slack = math.log(c) - gauss - log_hi
    if np.any(slack < 0):
        raise FitError(f"no c_tilde >= 0 works with c={c}: the bound is below "
                       f"ci_hi already at c_tilde = 0")
    positive = extra > 0
    if not np.any(positive):
        raise FitError("estimates carry no information on c_tilde (zero extra exponent)")
    return FitResult(float(c), float(np.min(slack[positive] / extra[positive])))
