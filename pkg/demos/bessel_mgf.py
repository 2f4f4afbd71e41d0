"""Moment generating functions of one prime's contribution.

The mean of exp(w sin(theta)) over a uniform phase is I0(w).  The power
series and a trapezoid rule over the circle agree to near machine precision,
and log I0(u) matches u^2/4 - u^4/64 up to a sixth-order remainder.
"""
import math

from zrf import bessel_I0, bivariate_mgf_wp, log_I0_expansion, mgf_wp_prime
from zrf.bessel import (bivariate_mgf_wp_quadrature, expansion_remainder_constant,
                        mgf_wp_prime_quadrature)

for p in (2, 3, 101, 10007):
    series, quad = mgf_wp_prime(p, 1.0), mgf_wp_prime_quadrature(p, 1.0)
    print(f"p = {p:>5}: E exp(X'_p) = {series:.12f}  (quadrature diff {abs(series - quad):.1e})")

print()
for u in (0.1, 0.3, 0.5):
    err = math.log(bessel_I0(u)) - log_I0_expansion(u)
    print(f"u = {u}: log I0 - expansion = {err:.3e}, ratio to u^6 = {err / u**6:.6f}")
print(f"sup ratio over (0, 1): {expansion_remainder_constant():.10f} (1/576 = {1 / 576:.10f})")

print()
# at |h2 - h1| = 2^-10 and k = 3 the increment box allows lam2 up to 1024
h2 = 2.0**-10
for lam2 in (10.0, 100.0, 1024.0):
    s = bivariate_mgf_wp(3, 1.0, lam2, 0.0, h2)
    q = bivariate_mgf_wp_quadrature(3, 1.0, lam2, 0.0, h2)
    print(f"increment mgf, lam2 = {lam2:.0e}: {s:.12f} (diff {abs(s - q):.1e})")
