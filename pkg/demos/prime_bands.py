"""Prime bands and weighted prime sums.

A band collects the primes with 2^r < log p <= 2^k.  The field variance
scale v = 2^(2k) - 2^(2r) grows fourfold per extra level, and the weighted
sum of (log p)^m / p over P < p <= Q tracks (log Q)^m / m with a residual
that settles as Q grows.
"""
from zrf import build_band, residual_table

for k in range(1, 5):
    band = build_band(-1, k)
    print(f"band(-1,{k}): {band.p.size:>7} primes, largest {band.p[-1]:>8}, v = {band.v}")

print()
print("   m        Q      residual")
for row in residual_table([1, 2, 3], [10.0**e for e in range(3, 8)]):
    print(f"{row['m']:>4} {row['Q']:>8.0e} {row['residual']:>13.6f}")

# for m = 1 the limit is minus the constant in Mertens' second-form estimate
print("\nm = 1 limit: -1.332582")
