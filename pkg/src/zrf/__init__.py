"""Random Euler-product model of log|zeta| on the critical line."""

__version__ = "0.1.0"

from .primes import (PrimeBand, PrimeEntry, ResourceLimitError, band_scale, build_band,
                     lemma_a1_residual, prime_log_power_sum, residual_table, sieve_primes)
from .field import (CertifiedMax, FieldSample, certified_max, default_resolution,
                    deriv_sup_bound, eval_X, eval_X_batch, eval_X_prime, sample_field,
                    variance_X_prime)
from .bessel import (bessel_I0, bivariate_mgf_wp, circular_mgf_identity_check,
                     log_I0_expansion, mgf_wp_prime)
from .bounds import (BoundParams, GridSpec, build_grid, chernoff_lambda1, chernoff_lambda2,
                     lemma41_bound, lemma42_bound, prop31_bound, prop32_bound, required_L,
                     theorem_bound)
from .experiments import (FitResult, GapResult, TailEstimate, TrialConfig, exact_binomial_ci,
                          estimate_continuity_event, estimate_interval_max_tail,
                          estimate_joint_increment, estimate_point_tail, fit_constants,
                          gap_experiment)
