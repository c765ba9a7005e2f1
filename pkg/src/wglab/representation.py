"""Counting and coverage for sums of prime k-th powers.

Exact representation counts by nested loops or FFT power of the indicator
polynomial, bit-parallel reachability for coverage probes over admissible
windows, the many-fold convolution gauge on its concentration window, and
the closed-form parameter thresholds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .bitsets import bits_from, line_power
from .core_arith import compute_Rk
from .majorant import PrimeSubset, WeightedSequence

__all__ = [
    "FFTPrecisionError",
    "CoverageReport",
    "ConvolutionProfile",
    "ThresholdReport",
    "admissible_filter",
    "count_representations",
    "coverage_probe",
    "transference_gauge",
    "theorem_thresholds",
]

BRUTE_S_CAP = 3
BRUTE_N_CAP = 10**5
FFT_GRID_CAP = 10**9
FFT_EXACT_LIMIT = float(1 << 52)


class FFTPrecisionError(RuntimeError):
    """FFT counts left the exact-integer range of double precision."""


def admissible_filter(n: int, s: int, k: int) -> bool:
    """Does n satisfy the necessary congruence n = s modulo the classical
    modulus for sums of s prime k-th powers?"""
    return (n - s) % compute_Rk(k).value == 0


def _prime_powers(subset: PrimeSubset, k: int, hi: int) -> list[int]:
    ps = subset.primes()
    out = []
    for p in map(int, ps):
        pk = p**k
        if pk > hi:
            break
        out.append(pk)
    return out


def count_representations(
    subset: PrimeSubset, k: int, s: int, hi: int, method: str = "fft"
) -> np.ndarray:
    """Ordered-tuple representation counts for every n in [0, hi].

    brute: nested loops, capped at s <= 3 and hi <= 1e5.  fft: s-th power
    of the indicator polynomial with integer recovery by rounding, refused
    if any count could reach 2^52.  bitset: reachability only; the
    returned array holds 0/1 flags, not counts.
    """
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    if hi < 0:
        raise ValueError(f"hi must be >= 0, got {hi}")
    powers = _prime_powers(subset, k, hi)
    if method == "brute":
        if s > BRUTE_S_CAP or hi > BRUTE_N_CAP:
            raise ValueError(f"brute method capped at s <= {BRUTE_S_CAP}, hi <= {BRUTE_N_CAP}")
        counts = np.zeros(hi + 1, dtype=np.int64)
        if s == 1:
            for v in powers:
                counts[v] += 1
            return counts
        if s == 2:
            for v1 in powers:
                for v2 in powers:
                    if v1 + v2 > hi:
                        break
                    counts[v1 + v2] += 1
            return counts
        for v1 in powers:
            for v2 in powers:
                if v1 + v2 > hi:
                    break
                for v3 in powers:
                    if v1 + v2 + v3 > hi:
                        break
                    counts[v1 + v2 + v3] += 1
        return counts
    if method == "fft":
        if s * hi > FFT_GRID_CAP:
            raise ValueError(f"fft grid s*hi = {s * hi} beyond cap {FFT_GRID_CAP}")
        if not powers:
            return np.zeros(hi + 1, dtype=np.int64)
        span = s * max(powers)
        grid = 1 << (span + 1).bit_length()
        poly = np.zeros(grid)
        poly[powers] = 1.0
        conv = np.fft.irfft(np.fft.rfft(poly) ** s, grid)
        if conv.max() >= FFT_EXACT_LIMIT:
            raise FFTPrecisionError(
                f"count magnitude {conv.max():.3g} >= 2^52; "
                "use brute for counts or bitset for coverage"
            )
        rounded = np.rint(conv)
        drift = float(np.abs(conv - rounded).max())
        if drift > 1e-2:
            raise FFTPrecisionError(f"rounding residual {drift:.3g} too large to trust")
        counts = rounded.astype(np.int64)
        counts[counts < 0] = 0
        return counts[: hi + 1]
    if method == "bitset":
        if not powers:
            return np.zeros(hi + 1, dtype=np.int64)
        reach = line_power(bits_from(powers), s, hi)
        out = np.zeros(hi + 1, dtype=np.int64)
        for n in range(hi + 1):
            if (reach >> n) & 1:
                out[n] = 1
        return out
    raise ValueError(f"unknown method {method!r}")


@dataclass
class CoverageReport:
    """Admissible integers in a window versus those actually representable."""

    k: int
    s: int
    subset: str
    window: tuple[int, int]
    modulus: int
    filtered: bool
    admissible_count: int
    represented_count: int
    exceptions: list[int]

    def to_json(self) -> str:
        d = {
            "k": self.k,
            "s": self.s,
            "subset": self.subset,
            "window": list(self.window),
            "modulus": self.modulus,
            "filtered": self.filtered,
            "admissible_count": self.admissible_count,
            "represented_count": self.represented_count,
            "exception_count": len(self.exceptions),
            "exceptions": self.exceptions,
        }
        return json.dumps(d, sort_keys=True, indent=2) + "\n"

    def csv_rows(self, reach) -> list[str]:
        lo, hi = self.window
        rows = ["n,admissible,represented"]
        g = self.modulus
        for n in range(lo, hi + 1):
            adm = 1 if (not self.filtered or (n - self.s) % g == 0) else 0
            rep = 1 if (reach >> n) & 1 else 0
            rows.append(f"{n},{adm},{rep}")
        return rows


def coverage_probe(
    subset: PrimeSubset,
    k: int,
    s: int,
    window: tuple[int, int],
    use_filter: bool = True,
) -> tuple[CoverageReport, int]:
    """Mark every sum of s subset-prime k-th powers up to the window top by
    bitset doubling, then list the admissible integers left unrepresented.

    Returns the report together with the reachability bitmask (useful for
    CSV emission and cross-checks).
    """
    lo, hi = window
    if not 0 <= lo <= hi:
        raise ValueError(f"bad window {window}")
    powers = _prime_powers(subset, k, hi)
    reach = line_power(bits_from(powers), s, hi) if powers else 0
    modulus = compute_Rk(k).value
    exceptions = []
    admissible = 0
    represented = 0
    for n in range(lo, hi + 1):
        if use_filter and (n - s) % modulus != 0:
            continue
        admissible += 1
        if (reach >> n) & 1:
            represented += 1
        else:
            exceptions.append(n)
    report = CoverageReport(
        k=k,
        s=s,
        subset=subset.spec.describe(),
        window=(lo, hi),
        modulus=modulus,
        filtered=use_filter,
        admissible_count=admissible,
        represented_count=represented,
        exceptions=exceptions,
    )
    return report, reach


@dataclass
class ConvolutionProfile:
    """The s-fold convolution on its concentration window, rescaled.

    values[i] is the convolution at window_lo + i divided by N^(s-1); the
    gauge is the minimum of those rescaled values.  kappa = epsilon/32
    fixes the window ((1-kappa^2) sN/2, (1+kappa) sN/2).
    """

    s: int
    N: int
    epsilon: float
    kappa: float
    window: tuple[int, int]
    values: np.ndarray
    gauge: float
    means: list[float]
    mean_each_ok: bool
    mean_sum_ok: bool
    numeric_warning: bool

    def to_json(self) -> str:
        d = {
            "s": self.s,
            "N": self.N,
            "epsilon": self.epsilon,
            "kappa": self.kappa,
            "window": list(self.window),
            "gauge": self.gauge,
            "means": self.means,
            "mean_each_ok": self.mean_each_ok,
            "mean_sum_ok": self.mean_sum_ok,
            "numeric_warning": self.numeric_warning,
        }
        return json.dumps(d, sort_keys=True, indent=2) + "\n"


def transference_gauge(f_list: list[WeightedSequence], epsilon: float = 0.1) -> ConvolutionProfile:
    """Convolve s nonnegative sequences and gauge the window minimum.

    Works on the normalized transforms (each sequence divided by N) so the
    pointwise product of s spectra stays O(1); the inverse transform is
    rescaled back by N^(s-1).  Also records whether the two mean
    hypotheses hold: every mean above epsilon/2, and the mean sum above
    s(1+epsilon)/2.  A warning flag is raised when the window minimum sits
    more than six decimal digits below the crude transform-mass bound,
    meaning the computed digits are mostly cancellation.
    """
    s = len(f_list)
    if s < 2:
        raise ValueError(f"need at least two sequences, got {s}")
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    N = f_list[0].N
    if any(f.N != N for f in f_list):
        raise ValueError("all sequences must share one length")
    kappa = epsilon / 32.0
    grid = 1 << (s * N + 2).bit_length()
    # group identical arrays so repeated factors cost one FFT each
    groups: dict[bytes, tuple[np.ndarray, int]] = {}
    for f in f_list:
        key = f.values.tobytes()
        arr, mult = groups.get(key, (f.values, 0))
        groups[key] = (arr, mult + 1)
    prod = None
    for arr, mult in groups.values():
        padded = np.zeros(grid)
        padded[1 : N + 1] = arr / N
        ft = np.fft.rfft(padded)
        term = ft**mult
        prod = term if prod is None else prod * term
    conv_scaled = np.fft.irfft(prod, grid) * N  # convolution / N^(s-1)
    lo = math.floor((1 - kappa**2) * s * N / 2) + 1
    hi = math.ceil((1 + kappa) * s * N / 2) - 1
    window_vals = conv_scaled[lo : hi + 1].copy()
    mass_bound = float(np.sum(np.abs(prod)) / grid * N)
    noise_floor = 1e-12 * max(mass_bound, 1.0)
    if window_vals.size and window_vals.min() < -noise_floor:
        raise RuntimeError(
            f"convolution of nonnegative sequences went negative: {window_vals.min():.3g}"
        )
    np.clip(window_vals, 0.0, None, out=window_vals)
    gauge = float(window_vals.min()) if window_vals.size else 0.0
    means = [f.mean() for f in f_list]
    mean_each_ok = all(m > epsilon / 2 for m in means)
    mean_sum_ok = sum(means) > s * (1 + epsilon) / 2
    numeric_warning = bool(gauge < 1e-6 * mass_bound)
    return ConvolutionProfile(
        s=s,
        N=N,
        epsilon=epsilon,
        kappa=kappa,
        window=(lo, hi),
        values=window_vals,
        gauge=gauge,
        means=means,
        mean_each_ok=mean_each_ok,
        mean_sum_ok=mean_sum_ok,
        numeric_warning=numeric_warning,
    )


@dataclass
class ThresholdReport:
    """Closed-form parameter thresholds at a given power k."""

    k: int
    s_min_theorem: int
    s_min_local: int
    delta_threshold: Fraction

    def to_json(self) -> str:
        d = {
            "k": self.k,
            "s_min_theorem": self.s_min_theorem,
            "s_min_local": self.s_min_local,
            "delta_threshold": [self.delta_threshold.numerator, self.delta_threshold.denominator],
        }
        return json.dumps(d, sort_keys=True, indent=2) + "\n"


def _omega(k: int) -> int:
    n = k
    count = 0
    d = 2
    while d * d <= n:
        if n % d == 0:
            count += 1
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        count += 1
    return count


def theorem_thresholds(k: int) -> ThresholdReport:
    """Exact integer thresholds at power k.

    s_min_theorem is the smallest term count above the strict bound
    max(16 k omega(k) + 4k + 3, k^2 + k); s_min_local is the smallest term
    count with the guaranteed majority-sumset covering property of the
    progression modulus, 8 k omega(k) + 2k + 2; delta_threshold is the
    relative density bound 1 - 1/(2k).
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    om = _omega(k)
    s_min_theorem = max(16 * k * om + 4 * k + 3, k * k + k) + 1
    s_min_local = 8 * k * om + 2 * k + 2
    return ThresholdReport(
        k=k,
        s_min_theorem=s_min_theorem,
        s_min_local=s_min_local,
        delta_threshold=Fraction(2 * k - 1, 2 * k),
    )
