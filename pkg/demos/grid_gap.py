"""How far a discrete grid maximum falls below the true maximum.

For a grid of spacing about 1/(L sqrt(v log 2^k)) the probability that the
gap exceeds K is bounded by exp(-(k/4)(1 - e^(-K))^2 L^2).  The empirical
gaps are far smaller than the bound allows.
"""
from zrf import TrialConfig, build_grid, gap_experiment, required_L, theorem_bound

cfg = TrialConfig(-1, 3, 500, base_seed=1)
for L in (0.5, 1.0, 1.755, 3.0):
    grid = build_grid(-1, 3, L)
    res = gap_experiment(cfg, 0.25, L, threads=4)
    g, e = res.gaps, res.exceed_freq
    print(f"L = {L:5.3f}: {grid.count:>3} points, gap mean {g['mean']:.4f} max {g['max']:.4f}; "
          f"P(gap > 0.25) <= {e.ci_hi:.4f} vs bound {theorem_bound(3, 0.25, L):.4f}")

print(f"\nL needed for K = 2 at derivative level 1: {required_L(2.0, 1.0):.4f}")
