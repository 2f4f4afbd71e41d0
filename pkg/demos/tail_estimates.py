"""Monte Carlo tails of the derivative field against Chernoff-type bounds.

Point tails of X'(0) are compared with exp(-2x^2/v).  The interval maximum
over a window of width 2^(-3k) is only slightly more likely to be large, and
a jump of size a above a point value is much rarer still.
"""
import warnings

import numpy as np

from zrf import (BoundParams, TrialConfig, estimate_continuity_event, estimate_interval_max_tail,
                 estimate_point_tail, fit_constants, lemma41_bound)
from zrf.experiments import AmbiguityWarning

cfg = TrialConfig(-1, 3, 20_000, base_seed=1)
params = BoundParams(-1, 3)
xs = [0.0, 2.0, 4.0, 6.0, 8.0]

print("   x   p_hat     95% CI                exp(-2x^2/v)")
ests = estimate_point_tail(cfg, xs, threads=4)
for x, e in zip(xs, ests):
    print(f"{x:4.0f}  {e.p_hat:.5f}  [{e.ci_lo:.5f}, {e.ci_hi:.5f}]  {lemma41_bound(params, x):.5f}")
c = fit_constants(ests, "lemma41").c
print(f"smallest c making c*exp(-2x^2/v) cover every CI: {c:.4f}")

pos = [e for e in ests[1:] if e.p_hat > 0]
slope = np.polyfit([e.threshold**2 / cfg.v for e in pos], [np.log(e.p_hat) for e in pos], 1)[0]
print(f"log-tail slope in x^2/v: {slope:.2f}")

with warnings.catch_warnings():
    warnings.simplefilter("ignore", AmbiguityWarning)
    for x in (2.0, 4.0):
        e = estimate_interval_max_tail(cfg, 0.5, x, threads=4)
        print(f"P(window max >= {x}) = {e.p_hat:.5f}  (ambiguous {e.ambiguous})")
    for a in (2.0, 4.0):
        e = estimate_continuity_event(cfg, 0.0, 0.0, a, threads=4)
        print(f"P(window max >= {a}, X'(0) <= 0) = {e.p_hat:.5f}")
