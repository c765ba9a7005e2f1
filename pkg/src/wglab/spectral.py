"""Circle-method numerics on the unit circle.

Exact-to-roundoff Fourier spectra of weighted sequences on a uniform
grid, major/minor arc decomposition, complete exponential sums with
their smooth/rough factorization and vanishing law, the major-arc main
term, a uniform pseudorandomness gauge, and restriction-norm constants.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass

import numpy as np

from .core_arith import FactoredModulus, LimitExceededError, rational_approx
from .majorant import KIND_CODES, WeightedSequence

__all__ = [
    "Spectrum",
    "ArcParams",
    "Arc",
    "ExpSumValue",
    "FactorParts",
    "GaugeReport",
    "RestrictionReport",
    "dft_spectrum",
    "transform_at",
    "interval_transform_at",
    "arc_decompose",
    "exp_sum_Sstar",
    "exp_sum_factor",
    "integral_I",
    "major_arc_model",
    "major_arc_residual",
    "pseudorandom_gauge",
    "restriction_norm",
]

TWO_PI = 2.0 * math.pi
_ARC_SCAN_CAP = 10**6


def default_grid(N: int, factor: int = 8) -> int:
    """factor times the next power of two at or above N."""
    return factor * (1 << (N - 1).bit_length())


@dataclass
class Spectrum:
    """Samples of a sequence's Fourier transform on the grid j/M.

    values[j] = sum_n seq(n) e(n j / M); entry 0 is the plain mass and the
    grid is fine enough that the samples determine the polynomial exactly.
    """

    M: int
    values: np.ndarray
    source: dict

    def alpha(self, j: int) -> float:
        return j / self.M

    def to_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write("j,re,im\n")
            for j, v in enumerate(self.values):
                fh.write(f"{j},{v.real:.12g},{v.imag:.12g}\n")

    def to_binary(self, path) -> None:
        """Same header layout as a weighted sequence (kind, W, b, k, M),
        then 2M float64: interleaved re, im."""
        code = KIND_CODES.get(self.source.get("kind", "custom"), 6)
        header = struct.pack(
            "<5q",
            code,
            self.source.get("W", 0),
            self.source.get("b", 0),
            self.source.get("k", 0),
            self.M,
        )
        inter = np.empty(2 * self.M)
        inter[0::2] = self.values.real
        inter[1::2] = self.values.imag
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(inter.astype("<f8").tobytes())


def dft_spectrum(seq: WeightedSequence, M: int | None = None) -> Spectrum:
    """Exact grid samples of the transform via a zero-padded FFT.

    Requires M >= 2N so arcs of interest are resolved and downstream
    quadrature is stable.
    """
    N = seq.N
    if M is None:
        M = default_grid(N)
    if M < 2 * N:
        raise ValueError(f"grid M = {M} must be >= 2N = {2 * N}")
    arr = np.zeros(M)
    arr[1 : N + 1] = seq.values
    values = np.conj(np.fft.fft(arr))  # conj flips to the e(+n alpha) convention
    source = {"kind": seq.kind, "W": seq.W, "b": seq.b, "k": seq.k, "N": N}
    return Spectrum(M=M, values=values, source=source)


def transform_at(seq: WeightedSequence, alpha: float) -> complex:
    """Direct evaluation of the transform at one frequency (support only)."""
    idx = np.flatnonzero(seq.values)
    ns = idx + 1
    return complex(np.sum(seq.values[idx] * np.exp(2j * np.pi * alpha * ns)))


def interval_transform_at(N: int, alpha: float) -> complex:
    """Closed form of sum_{n=1..N} e(n alpha)."""
    if abs(alpha - round(alpha)) < 1e-15:
        return complex(N)
    z = np.exp(2j * np.pi * alpha)
    return complex(z * (z**N - 1) / (z - 1))


@dataclass
class ArcParams:
    """Arc decomposition parameters: denominators up to P are major and
    arcs have halfwidth 1/Q.  Degenerate decompositions (P >= Q) are
    rejected outright."""

    sigma: float
    sigma0: float
    L: float
    P: float
    Q: float

    def __post_init__(self):
        if not self.P < self.Q:
            raise ValueError(f"P = {self.P:.6g} must be < Q = {self.Q:.6g}")

    @classmethod
    def for_sequence(
        cls, W: int, N: int, k: int, sigma: float = 4.0, sigma0: float = 2.0
    ) -> "ArcParams":
        L = math.log(W * N + W) / k
        return cls(sigma=sigma, sigma0=sigma0, L=L, P=L**sigma, Q=W * N / L**sigma)


@dataclass
class Arc:
    """A rational center with the classification of the queried frequency."""

    q: int
    a: int
    center: float
    halfwidth: float
    classification: str  # major | minor


def arc_decompose(params: ArcParams, alpha: float) -> Arc:
    """Classify alpha as major (within 1/Q of some a/q, q <= P) or minor.

    Major detection scans every denominator q <= P directly, which matches
    the set-theoretic definition; the minor witness is the Dirichlet pair
    from the continued-fraction approximation with bound Q.
    """
    if not 0 <= alpha < 1:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    Pint = int(params.P)
    if Pint > _ARC_SCAN_CAP:
        raise LimitExceededError(f"P = {params.P:.3g} beyond the scan cap {_ARC_SCAN_CAP}")
    hw = 1.0 / params.Q
    for q in range(1, Pint + 1):
        a = round(alpha * q)
        if math.gcd(a, q) == 1 and abs(alpha - a / q) <= hw:
            return Arc(q=q, a=a, center=a / q, halfwidth=hw, classification="major")
    a, q = rational_approx(alpha, max(int(params.Q), 1))
    return Arc(q=q, a=a, center=a / q if q else 0.0, halfwidth=hw, classification="minor")


@dataclass
class ExpSumValue:
    """One complete exponential sum over a residue progression."""

    q: int
    a: int
    z: int
    W: int
    k: int
    b: int
    value: complex


def exp_sum_Sstar(
    q: int, a: int, W: FactoredModulus, k: int, b: int, z: int
) -> ExpSumValue:
    """Sum of e_q(a ((z+Wr)^k - b)/W) over r < q with z+Wr coprime to Wq.

    Needs z^k = b (mod W) so the exponent argument is an exact integer;
    the argument is reduced mod q before any complex exponential, which
    keeps the phase exact for huge powers.
    """
    Wv = W.value
    if q < 1 or math.gcd(a, q) != 1:
        raise ValueError(f"need (a, q) = 1 with q >= 1, got a = {a}, q = {q}")
    if math.gcd(z, Wv) != 1:
        raise ValueError(f"z = {z} is not coprime to W = {Wv}")
    if pow(z, k, Wv) != b % Wv:
        raise ValueError(f"z^k = {pow(z, k, Wv)} (mod W) but b = {b % Wv}")
    total = 0j
    for r in range(q):
        t = z + Wv * r
        if math.gcd(t, Wv * q) != 1:
            continue
        T = (t**k - b) // Wv
        total += np.exp(2j * np.pi * ((a * T) % q) / q)
    return ExpSumValue(q=q, a=a, z=z, W=Wv, k=k, b=b % Wv, value=complex(total))


def _egcd(a: int, b: int) -> tuple[int, int, int]:
    if a == 0:
        return b, 0, 1
    g, x, y = _egcd(b % a, a)
    return g, y - (b // a) * x, x


def _diamond_sum(m: int, am: int, W: int, k: int, z: int) -> complex:
    """Sum of e_m(am * ((z+Wr)^k - z^k)/W) over r < m with (z+Wr, m) = 1."""
    total = 0j
    zk = z**k
    for r in range(m):
        t = z + W * r
        if math.gcd(t, m) != 1:
            continue
        poly = (t**k - zk) // W
        total += np.exp(2j * np.pi * ((am * poly) % m) / m)
    return complex(total)


@dataclass
class FactorParts:
    """A b-free exponential sum next to its smooth/rough factorization.

    q splits as u * v with u carrying exactly the primes of W; the sum then
    factors as the u-part times the v-part at twisted numerators, and the
    u-part vanishes outright unless gcd(u, W) divides k.
    """

    q: int
    a: int
    z: int
    W: int
    k: int
    u: int
    v: int
    a1: int
    a2: int
    direct: complex
    s_u: complex
    s_v: complex
    product: complex
    h: int
    vanishing_forced: bool

    @property
    def identity_gap(self) -> float:
        return abs(self.direct - self.product)


def exp_sum_factor(q: int, a: int, W: FactoredModulus, k: int, z: int) -> FactorParts:
    """Evaluate the b-free sum directly and as its smooth/rough product."""
    Wv = W.value
    if q < 1 or math.gcd(a, q) != 1:
        raise ValueError(f"need (a, q) = 1 with q >= 1, got a = {a}, q = {q}")
    if math.gcd(z, Wv) != 1:
        raise ValueError(f"z = {z} is not coprime to W = {Wv}")
    qf = FactoredModulus.from_value(q)
    u_fm, v_fm = qf.split_by_support(W.prime_support)
    u, v = u_fm.value, v_fm.value
    g, ubar, vbar = _egcd(u, v)
    # u*ubar + v*vbar = 1 since u and v are coprime by construction
    a1 = (a * vbar) % u if u > 1 else 0
    a2 = (a * ubar) % v if v > 1 else 0
    direct = _diamond_sum(q, a, Wv, k, z)
    s_u = _diamond_sum(u, a1, Wv, k, z)
    s_v = _diamond_sum(v, a2, Wv, k, z)
    h = math.gcd(u, Wv)
    return FactorParts(
        q=q,
        a=a,
        z=z,
        W=Wv,
        k=k,
        u=u,
        v=v,
        a1=a1,
        a2=a2,
        direct=direct,
        s_u=s_u,
        s_v=s_v,
        product=complex(s_u * s_v),
        h=h,
        vanishing_forced=(k % h != 0),
    )


def integral_I(beta: float, N: int) -> complex:
    """Integral of e(beta t) over [0, N], with the removable pole at 0."""
    if abs(beta) < 1e-15:
        return complex(N)
    return complex((np.exp(2j * np.pi * beta * N) - 1) / (2j * np.pi * beta))


def major_arc_model(
    q: int, a: int, beta: float, W: FactoredModulus, k: int, b: int, N: int
) -> complex:
    """Main-term prediction for the transform of nu near a/q.

    phi(W) / (phi(Wq) sigma(b)) times the z-sum of the complete exponential
    sums, times the interval integral at offset beta.
    """
    Wv = W.value
    zs = [z for z in range(1, Wv + 1) if math.gcd(z, Wv) == 1 and pow(z, k, Wv) == b % Wv]
    if not zs:
        raise ValueError(f"b = {b} is not a unit k-th power residue mod {Wv}")
    sigma = len(zs)
    Wq = W.scaled_by(FactoredModulus.from_value(q))
    coef = W.euler_phi / (Wq.euler_phi * sigma)
    total = sum(exp_sum_Sstar(q, a, W, k, b, z).value for z in zs)
    return coef * total * integral_I(beta, N)


def major_arc_residual(
    seq: WeightedSequence, q: int, a: int, beta: float = 0.0
) -> tuple[float, complex, complex]:
    """|transform - model| / N at alpha = a/q + beta for a nu-type sequence."""
    W = FactoredModulus.from_value(seq.W)
    alpha = (a / q + beta) % 1.0
    hat = transform_at(seq, alpha)
    model = major_arc_model(q, a, beta, W, seq.k, seq.b, seq.N)
    return abs(hat - model) / seq.N, hat, model


def _w_of(W: int) -> int:
    if W <= 1:
        return 0
    return max(FactoredModulus.from_value(W).prime_support)


@dataclass
class GaugeReport:
    """Uniform distance between a sequence's spectrum and the interval's."""

    D: float
    argmax_j: int
    argmax_alpha: float
    N: int
    M: int
    W: int
    b: int
    k: int
    sigma: float | None
    arc: Arc | None

    def to_json_row(self) -> str:
        row = {
            "N": self.N,
            "M": self.M,
            "w": _w_of(self.W),
            "k": self.k,
            "b": self.b,
            "sigma": self.sigma,
            "value": self.D,
        }
        return json.dumps(row, sort_keys=True) + "\n"


def pseudorandom_gauge(
    nu: WeightedSequence,
    M: int | None = None,
    sigma_chain: tuple[float, ...] = (4.0, 3.0, 2.0, 1.5, 1.0),
) -> GaugeReport:
    """Grid maximum of |transform(nu) - transform(interval)| / N.

    The argmax frequency is classified into major/minor arcs using the
    first exponent in sigma_chain that yields a nondegenerate P < Q; the
    exponent actually used is recorded in the report.
    """
    N = nu.N
    if M is None:
        M = default_grid(N)
    if M < 2 * N:
        raise ValueError(f"grid M = {M} must be >= 2N = {2 * N}")
    spec = dft_spectrum(nu, M)
    ones = dft_spectrum(WeightedSequence.indicator(N), M)
    diff = np.abs(spec.values - ones.values)
    j = int(diff.argmax())
    D = float(diff[j]) / N
    arc = None
    sigma_used = None
    if nu.W > 1:
        for sigma in sigma_chain:
            try:
                params = ArcParams.for_sequence(nu.W, N, nu.k, sigma=sigma)
            except ValueError:
                continue
            arc = arc_decompose(params, j / M)
            sigma_used = sigma
            break
    return GaugeReport(
        D=D,
        argmax_j=j,
        argmax_alpha=j / M,
        N=N,
        M=M,
        W=nu.W,
        b=nu.b,
        k=nu.k,
        sigma=sigma_used,
        arc=arc,
    )


@dataclass
class RestrictionReport:
    """A grid L^q norm of the spectrum and its scale-free constant."""

    norm: float
    constant: float
    exponent: float
    N: int
    M: int
    W: int
    b: int
    k: int

    def to_json_row(self) -> str:
        row = {
            "N": self.N,
            "M": self.M,
            "w": _w_of(self.W),
            "k": self.k,
            "b": self.b,
            "sigma": None,
            "value": self.constant,
        }
        return json.dumps(row, sort_keys=True) + "\n"


def restriction_norm(
    seq: WeightedSequence, exponent: float, M: int | None = None
) -> RestrictionReport:
    """Riemann-grid L^exponent norm of the spectrum, and K = norm/N^(1-1/q).

    Exponents below 2 are rejected; exponent exactly 2 is kept as a
    reference mode where the constant is pinned to 1 for the interval by
    the energy identity.
    """
    if exponent < 2:
        raise ValueError(f"exponent must be >= 2, got {exponent}")
    N = seq.N
    if M is None:
        M = max(default_grid(N), 4 * N)
    if M < 4 * N:
        raise ValueError(f"grid M = {M} must be >= 4N = {4 * N}")
    arr = np.zeros(M)
    arr[1 : N + 1] = seq.values
    hat = np.abs(np.fft.fft(arr))
    norm = float((np.sum(hat**exponent) / M) ** (1.0 / exponent))
    constant = norm / N ** (1.0 - 1.0 / exponent)
    return RestrictionReport(
        norm=norm,
        constant=constant,
        exponent=exponent,
        N=N,
        M=M,
        W=seq.W,
        b=seq.b,
        k=seq.k,
    )
