"""W-tricked weighted sequences over progressions of prime k-th powers.

Builders for the weighted prime-power indicator nu, its subset-thinned
variants, the all-k-th-powers envelope mu, and per-residue mean values
with their density margins.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass

import numpy as np

from .core_arith import FactoredModulus, PrimeSet, iroot, sieve_primes
from .local_structure import power_residues

__all__ = [
    "SubsetSpec",
    "PrimeSubset",
    "WeightedSequence",
    "MeanReport",
    "gen_subset",
    "build_nu",
    "build_f",
    "build_mu",
    "mean_g",
    "parse_subset_spec",
]

KIND_CODES = {"nu": 0, "f": 1, "bold-f": 2, "mu": 3, "psi": 4, "indicator": 5, "custom": 6}
_CODE_KINDS = {v: k for k, v in KIND_CODES.items()}


@dataclass(frozen=True)
class SubsetSpec:
    """Recipe for a deterministic subset of the primes.

    kinds: all | bernoulli | residue-classes | prefix-drop | window-drop.
    intended_density is the analytically known relative density where one
    exists (None for window-drop, whose observable proxy is measured).
    """

    kind: str
    delta: float | None = None
    seed: int = 0
    modulus: int | None = None
    allowed: frozenset[int] | None = None
    cutoff: int | None = None
    windows: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.kind not in ("all", "bernoulli", "residue-classes", "prefix-drop", "window-drop"):
            raise ValueError(f"unknown subset kind {self.kind!r}")
        if self.kind == "bernoulli" and not (self.delta is not None and 0 <= self.delta <= 1):
            raise ValueError("bernoulli subset needs delta in [0, 1]")
        if self.kind == "residue-classes" and (self.modulus is None or self.allowed is None):
            raise ValueError("residue-classes subset needs modulus and allowed set")
        if self.kind == "prefix-drop" and self.cutoff is None:
            raise ValueError("prefix-drop subset needs a cutoff")
        if self.kind == "window-drop" and not self.windows:
            raise ValueError("window-drop subset needs at least one interval")

    @classmethod
    def all(cls) -> "SubsetSpec":
        return cls(kind="all")

    @classmethod
    def bernoulli(cls, delta: float, seed: int) -> "SubsetSpec":
        return cls(kind="bernoulli", delta=delta, seed=seed)

    @classmethod
    def residue_classes(cls, modulus: int, allowed) -> "SubsetSpec":
        return cls(kind="residue-classes", modulus=modulus, allowed=frozenset(allowed))

    @classmethod
    def drop_classes(cls, modulus: int, dropped) -> "SubsetSpec":
        allowed = frozenset(range(modulus)) - frozenset(c % modulus for c in dropped)
        return cls(kind="residue-classes", modulus=modulus, allowed=allowed)

    @classmethod
    def prefix_drop(cls, cutoff: int) -> "SubsetSpec":
        return cls(kind="prefix-drop", cutoff=cutoff)

    @classmethod
    def window_drop(cls, windows) -> "SubsetSpec":
        return cls(kind="window-drop", windows=tuple((int(a), int(b)) for a, b in windows))

    @property
    def intended_density(self) -> float | None:
        if self.kind == "all" or self.kind == "prefix-drop":
            return 1.0
        if self.kind == "bernoulli":
            return self.delta
        if self.kind == "residue-classes":
            m = self.modulus
            coprime = [c for c in range(m) if math.gcd(c, m) == 1]
            kept = [c for c in coprime if c in self.allowed]
            return len(kept) / len(coprime) if coprime else 0.0
        return None

    def describe(self) -> str:
        if self.kind == "all":
            return "all"
        if self.kind == "bernoulli":
            return f"bernoulli:{self.delta:g}:{self.seed}"
        if self.kind == "residue-classes":
            return f"classes:{self.modulus}:" + ",".join(map(str, sorted(self.allowed)))
        if self.kind == "prefix-drop":
            return f"prefix-drop:{self.cutoff}"
        return "window-drop:" + ",".join(f"{a}-{b}" for a, b in self.windows)


def parse_subset_spec(text: str) -> SubsetSpec:
    """Parse the CLI form of a subset recipe.

    all | bernoulli:DELTA:SEED | classes:M:c1,c2,... | drop-class:M:c1,...
    | prefix-drop:X | window-drop:lo-hi,lo-hi,...
    """
    parts = text.split(":")
    kind = parts[0]
    try:
        if kind == "all":
            return SubsetSpec.all()
        if kind == "bernoulli":
            return SubsetSpec.bernoulli(float(parts[1]), int(parts[2]) if len(parts) > 2 else 0)
        if kind == "classes":
            return SubsetSpec.residue_classes(int(parts[1]), {int(c) for c in parts[2].split(",")})
        if kind == "drop-class":
            return SubsetSpec.drop_classes(int(parts[1]), {int(c) for c in parts[2].split(",")})
        if kind == "prefix-drop":
            return SubsetSpec.prefix_drop(int(parts[1]))
        if kind == "window-drop":
            windows = [tuple(map(int, w.split("-"))) for w in parts[1].split(",")]
            return SubsetSpec.window_drop(windows)
    except (IndexError, ValueError) as exc:
        raise ValueError(f"cannot parse subset spec {text!r}: {exc}") from None
    raise ValueError(f"cannot parse subset spec {text!r}")


def _bernoulli_keep(seed: int, p: int, delta: float) -> bool:
    # counter-based hash so membership is independent of iteration order
    digest = hashlib.blake2b(struct.pack("<qq", seed, p), digest_size=8).digest()
    return int.from_bytes(digest, "little") < delta * 2.0**64


@dataclass
class PrimeSubset:
    """A realized subset of the primes up to a limit, with measured density."""

    spec: SubsetSpec
    limit: int
    members: np.ndarray  # bool over 0..limit, True only at kept primes
    prime_count: int
    kept_count: int
    density: float
    density_min_prefix: float | None = None

    def __contains__(self, p: int) -> bool:
        return 0 <= p <= self.limit and bool(self.members[p])

    def primes(self) -> np.ndarray:
        return np.flatnonzero(self.members).astype(np.int64)


def gen_subset(spec: SubsetSpec, limit: int, primes: PrimeSet | None = None) -> PrimeSubset:
    """Realize a subset recipe up to limit and measure its relative density.

    For window-drop the reported headline density is the minimum over
    geometric prefix checkpoints (an observable stand-in for a liminf).
    """
    if limit < 100:
        raise ValueError(f"limit must be >= 100, got {limit}")
    ps = primes if primes is not None and primes.limit >= limit else sieve_primes(limit)
    mask = ps.bool_mask(limit).copy()
    plist = np.flatnonzero(mask)
    if spec.kind == "bernoulli":
        keep = np.array([_bernoulli_keep(spec.seed, int(p), spec.delta) for p in plist])
        mask[plist[~keep]] = False
    elif spec.kind == "residue-classes":
        allowed = np.zeros(spec.modulus, dtype=bool)
        allowed[list(spec.allowed)] = True
        keep = allowed[plist % spec.modulus]
        mask[plist[~keep]] = False
    elif spec.kind == "prefix-drop":
        mask[: min(spec.cutoff, limit) + 1] = False
    elif spec.kind == "window-drop":
        for lo, hi in spec.windows:
            if lo <= limit:
                mask[lo : min(hi, limit) + 1] = False
    prime_count = len(plist)
    kept = int(mask.sum())
    density = kept / prime_count if prime_count else 0.0
    min_prefix = None
    if spec.kind == "window-drop":
        checkpoints = []
        x = 100
        while x < limit:
            checkpoints.append(x)
            x *= 2
        checkpoints.append(limit)
        ratios = []
        for x in checkpoints:
            total = int(np.count_nonzero(plist <= x))
            keep_x = int(np.count_nonzero(mask[: x + 1]))
            if total:
                ratios.append(keep_x / total)
        min_prefix = min(ratios) if ratios else None
    return PrimeSubset(
        spec=spec,
        limit=limit,
        members=mask,
        prime_count=prime_count,
        kept_count=kept,
        density=density,
        density_min_prefix=min_prefix,
    )


@dataclass
class WeightedSequence:
    """A nonnegative weight array over n = 1..N with its construction data.

    values[i] is the weight at n = i + 1.  Y is the largest admissible
    k-th root and L the logarithmic normalizer log((WN+W)^(1/k)); both are
    meaningful only for the arithmetic kinds (W > 0).
    """

    values: np.ndarray
    kind: str
    W: int
    b: int
    k: int
    subset: SubsetSpec | None = None

    def __post_init__(self):
        if self.kind not in KIND_CODES:
            raise ValueError(f"unknown sequence kind {self.kind!r}")
        self.values = np.asarray(self.values, dtype=np.float64)

    @property
    def N(self) -> int:
        return len(self.values)

    @property
    def Y(self) -> int:
        return iroot(self.W * self.N + self.b, self.k) if self.W else 0

    @property
    def L(self) -> float:
        return math.log(self.W * self.N + self.W) / self.k if self.W else 1.0

    def value_at(self, n: int) -> float:
        if not 1 <= n <= self.N:
            raise IndexError(f"n = {n} outside 1..{self.N}")
        return float(self.values[n - 1])

    def total(self) -> float:
        return float(self.values.sum())

    def mean(self) -> float:
        return self.total() / self.N

    def support(self) -> np.ndarray:
        """The supported n values (1-based)."""
        return np.flatnonzero(self.values) + 1

    @classmethod
    def indicator(cls, N: int) -> "WeightedSequence":
        return cls(values=np.ones(N), kind="indicator", W=0, b=0, k=0)

    @classmethod
    def spike(cls, N: int, mass: float | None = None, at: int = 1) -> "WeightedSequence":
        v = np.zeros(N)
        v[at - 1] = N if mass is None else mass
        return cls(values=v, kind="custom", W=0, b=0, k=0)

    def to_binary(self, path) -> None:
        """Header of five little-endian int64 (kind code, W, b, k, N), then
        N little-endian float64 weights."""
        with open(path, "wb") as fh:
            fh.write(struct.pack("<5q", KIND_CODES[self.kind], self.W, self.b, self.k, self.N))
            fh.write(self.values.astype("<f8").tobytes())

    @classmethod
    def from_binary(cls, path) -> "WeightedSequence":
        with open(path, "rb") as fh:
            code, W, b, k, N = struct.unpack("<5q", fh.read(40))
            values = np.frombuffer(fh.read(8 * N), dtype="<f8").astype(np.float64)
        return cls(values=values, kind=_CODE_KINDS[code], W=W, b=b, k=k)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write("n,value\n")
            for i, v in enumerate(self.values):
                fh.write(f"{i + 1},{v:.12g}\n")


def _supported_weights(
    W: FactoredModulus, b: int, k: int, N: int, primes: PrimeSet
) -> tuple[np.ndarray, np.ndarray]:
    """(n, p) pairs with W n + b = p^k, p prime, 1 <= n <= N."""
    Y = iroot(W.value * N + b, k)
    ps = primes.primes(2, Y)
    if (Y + 1) ** k >= 2**62:
        keep_n, keep_p = [], []
        for p in map(int, ps):
            pk = p**k
            if (pk - b) % W.value == 0:
                n = (pk - b) // W.value
                if 1 <= n <= N:
                    keep_n.append(n)
                    keep_p.append(p)
        return np.array(keep_n, dtype=np.int64), np.array(keep_p, dtype=np.int64)
    pk = ps**k
    n = (pk - b) // W.value
    mask = ((pk - b) % W.value == 0) & (n >= 1) & (n <= N)
    return n[mask], ps[mask]


def _require_unit_power(W: FactoredModulus, k: int, b: int) -> int:
    table = power_residues(W, k)
    if b % W.value not in table.unit_residues:
        raise ValueError(f"b = {b} is not a unit k-th power residue mod {W.value}")
    return table.multiplicity[b % W.value]


def build_nu(
    W: FactoredModulus, b: int, k: int, N: int, primes: PrimeSet | None = None
) -> WeightedSequence:
    """The weighted indicator of W n + b = p^k over all primes p.

    Weight (phi(W)/(W sigma(b))) k p^(k-1) log p at each supported n, with
    the natural logarithm, so the sequence has mean about 1.
    """
    sigma = _require_unit_power(W, k, b)
    Y = iroot(W.value * N + b, k)
    ps = primes if primes is not None and primes.limit >= Y else sieve_primes(max(Y, 2))
    ns, pvals = _supported_weights(W, b, k, N, ps)
    values = np.zeros(N)
    coef = W.euler_phi / (W.value * sigma)
    values[ns - 1] = coef * k * pvals.astype(np.float64) ** (k - 1) * np.log(pvals)
    return WeightedSequence(values=values, kind="nu", W=W.value, b=b % W.value, k=k)


def build_f(
    W: FactoredModulus,
    b: int,
    k: int,
    N: int,
    subset: PrimeSubset,
    kind: str = "f",
    primes: PrimeSet | None = None,
) -> WeightedSequence:
    """As build_nu but restricted to primes kept by the subset; pointwise
    dominated by the unrestricted sequence by construction."""
    if kind not in ("f", "bold-f"):
        raise ValueError(f"kind must be f or bold-f, got {kind!r}")
    sigma = _require_unit_power(W, k, b)
    Y = iroot(W.value * N + b, k)
    if subset.limit < Y:
        raise ValueError(f"subset realized to {subset.limit} but Y = {Y} needed")
    ps = primes if primes is not None and primes.limit >= Y else sieve_primes(max(Y, 2))
    ns, pvals = _supported_weights(W, b, k, N, ps)
    keep = subset.members[pvals]
    ns, pvals = ns[keep], pvals[keep]
    values = np.zeros(N)
    coef = W.euler_phi / (W.value * sigma)
    values[ns - 1] = coef * k * pvals.astype(np.float64) ** (k - 1) * np.log(pvals)
    return WeightedSequence(
        values=values, kind=kind, W=W.value, b=b % W.value, k=k, subset=subset.spec
    )


def build_mu(W: FactoredModulus, b: int, k: int, N: int):
    """The envelope supported on every k-th power (prime or not), plus a
    rescaler turning any dominated sequence into its 1/L version.

    Returns (mu, psi_of) where psi_of(phi) = phi / L and asserts the
    rescaled sequence stays under mu pointwise.
    """
    sigma = _require_unit_power(W, k, b)
    Wv = W.value
    Y = iroot(Wv * N + b, k)
    xs = np.arange(1, Y + 1, dtype=np.int64)
    xk = xs**k
    n = (xk - b) // Wv
    mask = ((xk - b) % Wv == 0) & (n >= 1) & (n <= N)
    values = np.zeros(N)
    values[n[mask] - 1] = (1.0 / sigma) * k * xs[mask].astype(np.float64) ** (k - 1)
    mu = WeightedSequence(values=values, kind="mu", W=Wv, b=b % Wv, k=k)

    def psi_of(phi: WeightedSequence) -> WeightedSequence:
        if phi.N != N:
            raise ValueError(f"length mismatch: {phi.N} != {N}")
        psi_vals = phi.values / mu.L
        bad = np.flatnonzero(psi_vals > mu.values + 1e-12)
        if bad.size:
            n0 = int(bad[0]) + 1
            raise ValueError(
                f"rescaled sequence exceeds the envelope at n = {n0}: "
                f"{psi_vals[bad[0]]:.6g} > {mu.values[bad[0]]:.6g}"
            )
        return WeightedSequence(
            values=psi_vals, kind="psi", W=Wv, b=b % Wv, k=k, subset=phi.subset
        )

    return mu, psi_of


@dataclass
class MeanReport:
    """Per-residue mean values of the subset-thinned sequences, with the
    analytic density margin and floor they are compared against."""

    W: int
    k: int
    N: int
    subset: SubsetSpec
    epsilon: float
    per_b: dict[int, float]
    aggregate: float
    margin: float | None  # k * delta - (k - 1) for the intended density
    floor: float | None  # (1 - epsilon) * delta

    def to_json_dict(self) -> dict:
        return {
            "W": self.W,
            "k": self.k,
            "N": self.N,
            "subset": self.subset.describe(),
            "epsilon": self.epsilon,
            "per_b": {str(b): v for b, v in sorted(self.per_b.items())},
            "aggregate": self.aggregate,
            "margin": self.margin,
            "floor": self.floor,
        }


def mean_g(
    W: FactoredModulus,
    k: int,
    N: int,
    subset: PrimeSubset,
    epsilon: float = 0.1,
    primes: PrimeSet | None = None,
) -> MeanReport:
    """Mean weight per residue class and the aggregate over all classes.

    One pass over the primes up to Y: each kept prime lands in the unique
    class b = p^k mod W it can support.  The report carries the density
    margin k*delta - (k-1) and the floor (1-epsilon)*delta computed from
    the subset's intended density when that is known.
    """
    table = power_residues(W, k)
    Wv = W.value
    phi = W.euler_phi
    Ymax = iroot(Wv * N + Wv, k)
    if subset.limit < Ymax:
        raise ValueError(f"subset realized to {subset.limit} but Y = {Ymax} needed")
    ps = primes if primes is not None and primes.limit >= Ymax else sieve_primes(max(Ymax, 2))
    sums: dict[int, float] = {b: 0.0 for b in table.unit_residues}
    for p in map(int, ps.primes(2, Ymax)):
        if not subset.members[p]:
            continue
        pk = p**k
        b = pk % Wv
        if b not in sums:  # p divides W
            continue
        n = (pk - b) // Wv
        if 1 <= n <= N:
            sums[b] += (phi / (Wv * table.multiplicity[b])) * k * p ** (k - 1) * math.log(p)
    per_b = {b: v / N for b, v in sums.items()}
    aggregate = sum(per_b.values()) / len(per_b)
    delta = subset.spec.intended_density
    margin = k * delta - (k - 1) if delta is not None else None
    floor = (1 - epsilon) * delta if delta is not None else None
    return MeanReport(
        W=Wv,
        k=k,
        N=N,
        subset=subset.spec,
        epsilon=epsilon,
        per_b=per_b,
        aggregate=aggregate,
        margin=margin,
        floor=floor,
    )
