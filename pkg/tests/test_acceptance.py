"""Acceptance checks, each at its stated tolerance and time budget.

Run alone with ``pytest tests/test_acceptance.py -v``; the terminal summary
ends with one PASS/FAIL line per check.
"""

import math
import time
import warnings

import numpy as np
import pytest

from zrf import _kernels
from zrf.bessel import (bivariate_mgf_wp, bivariate_mgf_wp_quadrature,
                        expansion_remainder_constant, mgf_wp_prime, mgf_wp_prime_quadrature)
from zrf.cli import mgf_cases, run
from zrf.experiments import (AmbiguityWarning, TrialConfig, estimate_continuity_event,
                             estimate_interval_max_tail, estimate_point_tail, fit_constants,
                             gap_experiment, trial_phases)
from zrf.field import coefficients, variance_X_prime
from zrf.primes import build_band, lemma_a1_residual
from zrf.records import file_digest

CHECK_ORDER = [
    "test_bessel_series_matches_quadrature",
    "test_log_I0_remainder_constant_stable",
    "test_prime_log_power_residuals_settle",
    "test_derivative_variance_identity",
    "test_log_tail_slope_is_gaussian",
    "test_continuity_event_decays_in_jump",
    "test_grid_gap_exceedance_below_theorem_bound",
    "test_event_inclusion_and_sign_symmetry",
    "test_thread_count_does_not_change_csv",
]


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        if exc[0] is None:
            assert self.elapsed < self.seconds, f"took {self.elapsed:.1f}s, budget {self.seconds}s"


def test_bessel_series_matches_quadrature():
    with Budget(5):
        worst = 0.0
        for case in mgf_cases(50, seed=2024, k=3):
            if case["kind"] == "univariate":
                a = mgf_wp_prime(case["p"], case["lam1"])
                b = mgf_wp_prime_quadrature(case["p"], case["lam1"])
            else:
                args = (case["p"], case["lam1"], case["lam2"], case["h1"], case["h2"])
                a, b = bivariate_mgf_wp(*args), bivariate_mgf_wp_quadrature(*args)
            worst = max(worst, abs(a - b))
    print(f"max |series - quadrature| = {worst:.3e}")
    assert worst <= 1e-10


def test_log_I0_remainder_constant_stable():
    with Budget(5):
        series = expansion_remainder_constant("series")
        quad = expansion_remainder_constant("quadrature")
    print(f"remainder constant: series {series:.10f}, quadrature {quad:.10f}")
    assert math.isfinite(series) and math.isfinite(quad)
    assert abs(quad - series) <= 0.01 * series


def test_prime_log_power_residuals_settle():
    Qs = [1e4, 1e5, 1e6, 1e7, 1e8]
    with Budget(120):
        table = {m: [lemma_a1_residual(1.0, Q, m) for Q in Qs] for m in (1, 2, 3)}
    for m, res in table.items():
        print(f"m={m}: residuals {[round(r, 4) for r in res]}")
        assert all(math.isfinite(r) for r in res)
        # |res(10 Q) - res(Q)| for Q = 1e4 .. 1e7
        diffs = [abs(b - a) for a, b in zip(res, res[1:])]
        assert all(later < earlier for earlier, later in zip(diffs, diffs[1:])), (m, diffs)


def test_derivative_variance_identity():
    band = build_band(-1, 2)
    with Budget(30):
        var = variance_X_prime(band)
        thetas = trial_phases(band, 4242, 0, 100_000)
        A, B = coefficients(band, thetas, "X'")
        vals = _kernels.grid_values(A, B, band.log_p, np.array([0.0]))[:, 0]
    n = vals.size
    emp = vals.var(ddof=1)
    centered = vals - vals.mean()
    se = math.sqrt((np.mean(centered**4) - emp**2) / n)
    print(f"variance {var:.6f}, v/4 - variance {band.v / 4 - var:.4f}, "
          f"empirical {emp:.4f} (se {se:.4f})")
    assert abs(var - 3.2441) <= 1e-3
    assert abs((band.v / 4 - var) - 0.70) <= 0.01
    assert abs(emp - var) <= 4 * se


def test_log_tail_slope_is_gaussian():
    cfg = TrialConfig(-1, 3, 100_000, 31415)
    xs = [2.0, 4.0, 6.0, 8.0]
    with Budget(300):
        ests = estimate_point_tail(cfg, xs, threads=4)
    p = np.array([e.p_hat for e in ests])
    assert np.all(np.diff(p) < 0)
    assert np.all(p > 0), f"empty tail bin: {p}"
    slope = np.polyfit(np.square(xs) / cfg.v, np.log(p), 1)[0]
    print(f"p_hat {p.tolist()}, slope {slope:.3f}")
    assert -2.3 <= slope <= -1.7, f"slope {slope:.3f} outside [-2.3, -1.7]"


def test_continuity_event_decays_in_jump():
    cfg = TrialConfig(-1, 3, 100_000, 2718)
    x, jumps = 2.0, [2.0, 4.0, 6.0]
    with Budget(600):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", AmbiguityWarning)
            ests = [estimate_continuity_event(cfg, 0.0, x, a, threads=4) for a in jumps]
        # leading constant shared with the one-point tail bound at the same level
        c = fit_constants(estimate_point_tail(cfg, [x], threads=4), "lemma41").c
        fit = fit_constants(ests, "prop31", c=c)
    p = [e.p_hat for e in ests]
    pess = [e.p_hat_pessimistic for e in ests]
    print(f"p_hat {p}, pessimistic {pess}, ambiguous {[e.ambiguous for e in ests]}, "
          f"c {c:.4f}, fitted c_tilde {fit.c_tilde:.4f}")
    assert all(b <= a for a, b in zip(p, p[1:]))
    assert all(b <= a for a, b in zip(pess, pess[1:]))
    assert fit.c_tilde > 0


def test_grid_gap_exceedance_below_theorem_bound():
    cfg = TrialConfig(-1, 3, 1000, 1)
    with Budget(600):
        res = gap_experiment(cfg, 2.0, 1.755, threads=4)
    est = res.exceed_freq
    print(f"bound {res.bound:.6f}, hits {est.hits}, ambiguous {est.ambiguous}, "
          f"ci_hi {est.ci_hi:.6f}, gap max {res.gaps['max']:.4f}")
    assert res.bound == pytest.approx(0.178, abs=5e-4)
    assert est.ci_hi <= 0.178
    assert est.ambiguous < 1e-3 * est.n


def test_event_inclusion_and_sign_symmetry():
    cfg = TrialConfig(-1, 3, 20_000, 99)
    x, a = 1.0, 2.0
    with Budget(120):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", AmbiguityWarning)
            cont = estimate_continuity_event(cfg, 0.0, x, a, threads=4)
            imax = estimate_interval_max_tail(cfg, 0.0, x + a, threads=4)
        up = estimate_point_tail(cfg, [1.0], side="upper", threads=4)[0]
        down = estimate_point_tail(cfg, [-1.0], side="lower", threads=4)[0]
    cont_hits = cont.outcomes == 1
    print(f"continuity hits {cont.hits} within interval-max hits {imax.hits}; "
          f"P(X'>=1) in [{up.ci_lo:.4f}, {up.ci_hi:.4f}], P(X'<=-1) in [{down.ci_lo:.4f}, {down.ci_hi:.4f}]")
    assert np.all(imax.outcomes[cont_hits] == 1)
    assert up.ci_lo <= down.ci_hi and down.ci_lo <= up.ci_hi


def test_thread_count_does_not_change_csv(tmp_path):
    commands = [
        ["tail", "--trials", "4000", "--x", "0,1,2,4"],
        ["tail", "--trials", "3000", "--event", "interval", "--x", "1,3"],
        ["continuity", "--trials", "3000", "--x", "1", "--a", "2,3"],
        ["joint", "--trials", "3000", "--x", "0", "--y", "0.5"],
        ["gap", "--trials", "200", "--K", "0.01"],
    ]
    with Budget(120):
        for i, cmd in enumerate(commands):
            digests = []
            for threads in ("1", "8"):
                out = tmp_path / f"{i}_{threads}.csv"
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", AmbiguityWarning)
                    assert run([*cmd, "--threads", threads, "--out", str(out)]) == 0
                digests.append(file_digest(out))
            assert digests[0] == digests[1], cmd
