"""Bit-parallel sumset arithmetic on arbitrary-precision integers.

Sets of residues (cyclic, mod q) or of nonnegative integers (half-line,
clipped at a bound) are stored as bitmasks; sumset addition is a shift-or
over the set bits of the sparser operand, and s-fold sumsets use repeated
doubling on the binary expansion of s.
"""

from __future__ import annotations

__all__ = [
    "bits_from",
    "bit_positions",
    "cyclic_add",
    "cyclic_power",
    "cyclic_power_stepwise",
    "line_add",
    "line_power",
]


def bits_from(values) -> int:
    mask = 0
    for v in values:
        mask |= 1 << v
    return mask


def bit_positions(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _iter_bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def cyclic_add(X: int, Y: int, q: int) -> int:
    """Sumset {x + y mod q} of two residue bitmasks of width q."""
    if X == 0 or Y == 0:
        return 0
    if X.bit_count() < Y.bit_count():
        X, Y = Y, X
    full = (1 << q) - 1
    out = 0
    for r in _iter_bits(Y):
        out |= (X << r) | (X >> (q - r)) if r else X
    return out & full


def cyclic_power(B: int, s: int, q: int) -> int:
    """s-fold sumset of a residue bitmask mod q by repeated doubling."""
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    result = None
    cur = B
    while s:
        if s & 1:
            result = cur if result is None else cyclic_add(result, cur, q)
        s >>= 1
        if s:
            cur = cyclic_add(cur, cur, q)
    return result


def cyclic_power_stepwise(B: int, s: int, q: int) -> int:
    """s-fold sumset by s-1 single additions; slow, used to re-verify."""
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    result = B
    for _ in range(s - 1):
        result = cyclic_add(result, B, q)
    return result


def line_add(X: int, Y: int, hi: int) -> int:
    """Sumset {x + y} of two integer bitmasks, clipped to [0, hi]."""
    if X == 0 or Y == 0:
        return 0
    if X.bit_count() < Y.bit_count():
        X, Y = Y, X
    full = (1 << (hi + 1)) - 1
    out = 0
    for r in _iter_bits(Y):
        out |= X << r
    return out & full


def line_power(B: int, s: int, hi: int) -> int:
    """s-fold integer sumset clipped to [0, hi], by repeated doubling."""
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    result = None
    cur = B
    while s:
        if s & 1:
            result = cur if result is None else line_add(result, cur, hi)
        s >>= 1
        if s:
            cur = line_add(cur, cur, hi)
    return result
