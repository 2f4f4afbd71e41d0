import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from zrf.primes import (PrimeEntry, ResourceLimitError, band_scale, build_band,
                        lemma_a1_residual, prime_log_power_sum, read_prime_cache,
                        residual_table, sieve_primes, write_prime_cache)


def naive_primes(n):
    """Plain full-array sieve, independent of the segmented implementation."""
    is_p = np.ones(n + 1, dtype=bool)
    is_p[:2] = False
    for q in range(2, math.isqrt(n) + 1):
        if is_p[q]:
            is_p[q * q::q] = False
    return np.flatnonzero(is_p)


def test_small_limits():
    assert sieve_primes(10).tolist() == [2, 3, 5, 7]
    assert sieve_primes(2).tolist() == [2]
    assert sieve_primes(3).tolist() == [2, 3]


def test_million_matches_naive_sieve():
    got = sieve_primes(10**6)
    assert got.size == 78498
    np.testing.assert_array_equal(got, naive_primes(10**6))


def _forget_sieves():
    import zrf.primes as mod
    mod._largest[:] = [0, np.empty(0, dtype=np.int64)]


def test_segment_boundaries_match_naive_sieve():
    # spans several odd-only segments
    n = 9_000_001
    _forget_sieves()
    np.testing.assert_array_equal(sieve_primes(n), naive_primes(n))


@given(st.integers(min_value=2, max_value=200_000))
def test_sieve_matches_naive(n):
    _forget_sieves()
    np.testing.assert_array_equal(sieve_primes(n), naive_primes(n))


def test_sieve_rejects():
    with pytest.raises(ValueError):
        sieve_primes(1)
    with pytest.raises(ResourceLimitError, match="ceiling 1000"):
        sieve_primes(5000, ceiling=1000)


def test_output_is_read_only():
    arr = sieve_primes(100)
    with pytest.raises(ValueError):
        arr[0] = 4


def test_cache_round_trip(tmp_path):
    primes = naive_primes(1000)
    path = tmp_path / "p.bin"
    write_prime_cache(path, primes)
    raw = path.read_bytes()
    assert int.from_bytes(raw[:8], "little") == primes.size
    assert len(raw) == 8 * (primes.size + 1)
    np.testing.assert_array_equal(read_prime_cache(path), primes)


def test_cache_directory_from_environment(tmp_path, monkeypatch):
    import zrf.primes as mod
    monkeypatch.setenv("ZRF_PRIME_CACHE", str(tmp_path))
    monkeypatch.setattr(mod, "_largest", [0, np.empty(0, dtype=np.int64)])
    got = sieve_primes(12_345)
    cached = tmp_path / "primes_12345.bin"
    assert cached.exists()
    np.testing.assert_array_equal(read_prime_cache(cached), got)


def test_corrupt_cache_detected(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(np.array([5, 2, 3], dtype="<u8").tobytes())
    with pytest.raises(OSError):
        read_prime_cache(path)


def test_band_small():
    band = build_band(-1, 1)
    assert band.p.tolist() == [2, 3, 5, 7]
    assert band.v == 3.75
    assert band.start_index == 0
    entries = band.entries()
    assert isinstance(entries[0], PrimeEntry)
    assert entries[1].log_p == math.log(3)
    assert entries[1].inv_sqrt_p == pytest.approx(3 ** -0.5, rel=1e-15)


def test_empty_band():
    band = build_band(2, 2)
    assert band.size == 0 and band.v == 0.0


def test_full_band_k4_count():
    band = build_band(-1, 4)
    limit = math.floor(math.exp(16))
    assert band.v == 255.75
    assert band.size == naive_primes(limit).size
    assert band.p[-1] <= math.exp(16) < band.p[-1] + 200


def test_band_membership_exact():
    band = build_band(1, 3)
    lp = np.log(band.p.astype(float))
    assert np.all(lp > 2) and np.all(lp <= 8)
    all_p = sieve_primes(3000)
    outside = all_p[~np.isin(all_p, band.p)]
    lo = np.log(outside.astype(float))
    assert np.all((lo <= 2) | (lo > 8))
    assert np.all(np.diff(band.p) > 0)


@given(st.integers(-1, 3).flatmap(
    lambda r: st.tuples(st.just(r), st.integers(r, 4)).flatmap(
        lambda rs: st.tuples(st.just(rs[0]), st.just(rs[1]), st.integers(rs[1], 4)))))
def test_band_partition(rsk):
    r, s, k = rsk
    lower, upper, whole = build_band(r, s), build_band(s, k), build_band(r, k)
    joined = np.concatenate([lower.p, upper.p])
    np.testing.assert_array_equal(joined, whole.p)
    assert upper.start_index == lower.start_index + lower.size
    assert band_scale(r, s) + band_scale(s, k) == pytest.approx(band_scale(r, k))


def test_band_errors():
    with pytest.raises(ValueError):
        build_band(3, 2)
    with pytest.raises(ValueError):
        build_band(-2, 2)
    with pytest.raises(ResourceLimitError, match="ceiling"):
        build_band(-1, 5)
    with pytest.raises(ResourceLimitError, match=r"e\^\(2\^k\)"):
        build_band(-1, 99)


def test_log_power_sum_examples():
    assert prime_log_power_sum(1, 2, 1) == pytest.approx(math.log(2) / 2, rel=1e-15)
    assert prime_log_power_sum(8, 10, 1) == 0.0
    four = math.log(2) / 2 + math.log(3) / 3 + math.log(5) / 5 + math.log(7) / 7
    assert prime_log_power_sum(1, 10, 1) == pytest.approx(four, rel=1e-15)
    assert four == pytest.approx(1.312653, abs=1e-6)
    with pytest.raises(ValueError):
        prime_log_power_sum(10, 5, 1)
    with pytest.raises(ValueError):
        prime_log_power_sum(1, 5, 0)


def test_residual_examples():
    assert lemma_a1_residual(1, 10, 1) == pytest.approx(1.312653 - math.log(10), abs=1e-6)
    assert lemma_a1_residual(8, 10, 1) == pytest.approx(math.log(8) - math.log(10), rel=1e-14)
    assert lemma_a1_residual(1, 1 + 1e-9, 1) == pytest.approx(0.0, abs=1e-8)


@given(st.floats(1, 5000), st.floats(0, 5000), st.floats(0, 5000), st.integers(1, 3))
def test_log_power_sum_additive(P, d1, d2, m):
    R, Q = P + d1, P + d1 + d2
    whole = prime_log_power_sum(P, Q, m)
    parts = prime_log_power_sum(P, R, m) + prime_log_power_sum(R, Q, m)
    assert parts == pytest.approx(whole, rel=1e-12, abs=1e-300)


def test_residual_table_bounded():
    rows = residual_table([1, 2], [1e3, 1e4, 1e5])
    assert len(rows) == 6
    for row in rows:
        assert row["residual"] == pytest.approx(row["sum"] - row["main_term"], abs=1e-9)
        assert abs(row["residual"]) < 10
