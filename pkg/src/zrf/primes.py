"""Prime generation, dyadic log-bands and prime log-power sums.

A band ``(r, k)`` holds the primes with ``2**r < log p <= 2**k``. Every band
remembers the global index of its first prime (``pi(p) - 1``), which is what
keys the random phases in :mod:`zrf.field`, so overlapping bands share phases.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

DEFAULT_CEILING = 10**9
_SEGMENT_ODDS = 1 << 21
CACHE_ENV = "ZRF_PRIME_CACHE"


class ResourceLimitError(RuntimeError):
    """A request needs primes beyond the configured sieve ceiling."""


def _small_sieve(limit: int) -> np.ndarray:
    is_p = np.ones(limit + 1, dtype=bool)
    is_p[:2] = False
    for q in range(2, math.isqrt(limit) + 1):
        if is_p[q]:
            is_p[q * q :: q] = False
    return np.flatnonzero(is_p)


def _segmented_sieve(limit: int) -> np.ndarray:
    # odd-only storage: index i of a segment starting at odd `lo` is lo + 2 i
    base = _small_sieve(math.isqrt(limit))[1:]  # odd base primes
    chunks = [np.array([2], dtype=np.int64)]
    lo = 3
    while lo <= limit:
        n = min(_SEGMENT_ODDS, (limit - lo) // 2 + 1)
        hi = lo + 2 * (n - 1)
        seg = np.ones(n, dtype=bool)
        for q in base:
            q = int(q)
            qq = q * q
            if qq > hi:
                break
            start = max(qq, ((lo + q - 1) // q) * q)
            if start % 2 == 0:
                start += q
            seg[(start - lo) // 2 :: q] = False
        chunks.append(lo + 2 * np.flatnonzero(seg).astype(np.int64))
        lo = hi + 2
    return np.concatenate(chunks)


def _cache_path(limit: int, cache_dir: str | os.PathLike | None) -> Path | None:
    cache_dir = cache_dir if cache_dir is not None else os.environ.get(CACHE_ENV)
    if not cache_dir:
        return None
    return Path(cache_dir) / f"primes_{limit}.bin"


def read_prime_cache(path: str | os.PathLike) -> np.ndarray:
    """Read a cache file: little-endian uint64 count followed by the primes."""
    raw = Path(path).read_bytes()
    count = int(np.frombuffer(raw[:8], dtype="<u8")[0])
    primes = np.frombuffer(raw[8:], dtype="<u8")
    if primes.size != count:
        raise OSError(f"corrupt prime cache {path}: header says {count}, found {primes.size}")
    return primes.astype(np.int64)


def write_prime_cache(path: str | os.PathLike, primes: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    with open(tmp, "wb") as fh:
        fh.write(np.array([primes.size], dtype="<u8").tobytes())
        fh.write(np.asarray(primes, dtype="<u8").tobytes())
    os.replace(tmp, path)


_largest: list = [0, np.empty(0, dtype=np.int64)]


def _sieve_cached(limit: int, cache_dir: str | None) -> np.ndarray:
    top, primes = _largest
    if limit <= top:
        return primes[: np.searchsorted(primes, limit, side="right")]
    path = _cache_path(limit, cache_dir)
    if path is not None and path.exists():
        primes = read_prime_cache(path)
    else:
        primes = _small_sieve(limit) if limit < 1 << 16 else _segmented_sieve(limit)
        if path is not None:
            write_prime_cache(path, primes)
    primes.setflags(write=False)
    _largest[:] = [limit, primes]
    return primes


def sieve_primes(limit: int, ceiling: int = DEFAULT_CEILING,
                 cache_dir: str | os.PathLike | None = None) -> np.ndarray:
    """All primes ``<= limit`` in increasing order (read-only int64 array).

    Uses a segmented, odd-only sieve of Eratosthenes. When ``cache_dir`` or the
    ``ZRF_PRIME_CACHE`` environment variable names a directory, results are
    persisted there keyed by ``limit``. Smaller requests are served from the
    largest sieve computed so far in this process.
    """
    limit = int(limit)
    if limit < 2:
        raise ValueError(f"limit must be >= 2, got {limit}")
    if limit > ceiling:
        raise ResourceLimitError(
            f"sieve limit {limit} exceeds the sieve ceiling {ceiling}")
    return _sieve_cached(limit, None if cache_dir is None else str(cache_dir))


def _primes_upto(x: float, ceiling: int) -> np.ndarray:
    if x < 2:
        return np.empty(0, dtype=np.int64)
    return sieve_primes(math.floor(x), ceiling=ceiling)


@dataclass(frozen=True)
class PrimeEntry:
    p: int
    log_p: float
    inv_sqrt_p: float


@dataclass(frozen=True, eq=False)
class PrimeBand:
    """Primes with ``2**r < log p <= 2**k`` and the band scale ``v``.

    Arrays are read-only; ``start_index`` is the global index (``pi(p) - 1``)
    of the first entry.
    """

    r: int
    k: int
    p: np.ndarray = field(repr=False)
    log_p: np.ndarray = field(repr=False)
    inv_sqrt_p: np.ndarray = field(repr=False)
    start_index: int = 0

    @property
    def v(self) -> float:
        return band_scale(self.r, self.k)

    @property
    def size(self) -> int:
        return int(self.p.size)

    def __len__(self) -> int:
        return self.size

    def entries(self) -> list[PrimeEntry]:
        return [PrimeEntry(int(p), float(lp), float(s))
                for p, lp, s in zip(self.p, self.log_p, self.inv_sqrt_p)]

    def __repr__(self) -> str:
        return f"PrimeBand(r={self.r}, k={self.k}, size={self.size}, v={self.v})"


def band_scale(r: int, k: int) -> float:
    """``2**(2k) - 2**(2r)``, exact in binary64 for the supported range."""
    return math.ldexp(1.0, 2 * k) - math.ldexp(1.0, 2 * r)


def band_limit(k: int) -> float:
    """``e**(2**k)``, the largest value a band ending at ``k`` reaches."""
    try:
        return math.exp(math.ldexp(1.0, k))
    except OverflowError:
        return math.inf


def _check_band_args(r: int, k: int, ceiling: int) -> None:
    if r < -1:
        raise ValueError(f"r must be >= -1, got r={r}")
    if r > k:
        raise ValueError(f"need r <= k, got r={r}, k={k}")
    if band_limit(k) > ceiling:
        raise ResourceLimitError(
            f"band (r={r}, k={k}) needs primes up to e^(2^k) = e^{2.0**k:g}, "
            f"beyond the sieve ceiling {ceiling}")


@lru_cache(maxsize=32)
def _build_band(r: int, k: int, ceiling: int) -> PrimeBand:
    primes = _primes_upto(band_limit(k), ceiling)
    log_p = np.log(primes.astype(np.float64))
    lo = np.searchsorted(log_p, math.ldexp(1.0, r), side="right")
    hi = np.searchsorted(log_p, math.ldexp(1.0, k), side="right")
    p = np.ascontiguousarray(primes[lo:hi])
    lp = np.ascontiguousarray(log_p[lo:hi])
    inv = 1.0 / np.sqrt(p.astype(np.float64))
    for arr in (p, lp, inv):
        arr.setflags(write=False)
    return PrimeBand(r=r, k=k, p=p, log_p=lp, inv_sqrt_p=inv, start_index=int(lo))


def build_band(r: int, k: int, ceiling: int = DEFAULT_CEILING) -> PrimeBand:
    """Primes with ``2**r < log p <= 2**k``; ``r = k`` gives the empty band."""
    r, k = int(r), int(k)
    _check_band_args(r, k, ceiling)
    return _build_band(r, k, ceiling)


def _log_power_terms(P: float, Q: float, m: int, ceiling: int) -> np.ndarray:
    if m < 1:
        raise ValueError(f"m must be a positive integer, got {m}")
    if P < 1:
        raise ValueError(f"P must be >= 1, got {P}")
    if Q < P:
        raise ValueError(f"need P <= Q, got P={P}, Q={Q}")
    primes = _primes_upto(Q, ceiling)
    primes = primes[primes > P]
    pf = primes.astype(np.float64)
    return np.log(pf) ** m / pf


def prime_log_power_sum(P: float, Q: float, m: int,
                        ceiling: int = DEFAULT_CEILING) -> float:
    """``sum_{P < p <= Q} (log p)**m / p`` by direct, correctly rounded summation."""
    return math.fsum(_log_power_terms(P, Q, m, ceiling))


def lemma_a1_residual(P: float, Q: float, m: int,
                      ceiling: int = DEFAULT_CEILING) -> float:
    """Prime log-power sum minus its integral main term ``((log Q)^m - (log P)^m) / m``."""
    terms = _log_power_terms(P, Q, m, ceiling)
    main = (math.log(Q) ** m - math.log(P) ** m) / m
    return math.fsum(np.append(terms, -main))


def residual_table(m_values, Q_values, P: float = 1.0,
                   ceiling: int = DEFAULT_CEILING) -> list[dict]:
    """Residual rows for every ``(m, Q)`` pair, sieving once up to ``max(Q)``."""
    rows = []
    for m in m_values:
        for Q in sorted(Q_values):
            s = prime_log_power_sum(P, Q, m, ceiling)
            main = (math.log(Q) ** m - math.log(P) ** m) / m
            rows.append({"m": int(m), "P": float(P), "Q": float(Q), "sum": s,
                         "main_term": main,
                         "residual": lemma_a1_residual(P, Q, m, ceiling)})
    return rows
