"""Arithmetic backends: native 53-bit floats and fixed-point big integers.

Orbit recursions lose roughly one bit of accuracy per iterate (the maps are
expanding), so native floats are only trusted to depth ~48.  Deeper symbolic
work runs on integer fixed-point values with P fraction bits; Python bigints
make this deterministic and thread-safe with no global state.  mpmath is used
only at the edges, to take logarithms of fixed-point values at full precision.
"""

from __future__ import annotations

import math
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction

import mpmath

__all__ = [
    "PrecisionContext",
    "NATIVE",
    "to_fixed",
    "fixed_to_float",
    "fixed_log",
    "context_for_bits",
    "mp_guard",
]

_MP_LOCK = threading.Lock()

LN2 = math.log(2.0)


@contextmanager
def mp_guard(bits: int):
    """Lock-guarded mpmath working precision (mpmath's context is global)."""
    with _MP_LOCK:
        with mpmath.workprec(bits):
            yield mpmath


@dataclass(frozen=True)
class PrecisionContext:
    """Working precision for orbit computations.

    bits=53 selects the native float backend.  Any other value must be >= 128
    and selects the fixed-point backend with `bits` fraction bits.
    """

    bits: int = 53

    def __post_init__(self):
        if self.bits != 53 and self.bits < 128:
            raise ValueError(
                "extended precision requires at least 128 mantissa bits"
            )

    @property
    def native(self) -> bool:
        return self.bits == 53

    @property
    def guard(self) -> float:
        """Below this distance from the turning point, a computed sign is
        untrustworthy."""
        if self.native:
            return 1e-13
        return math.ldexp(1.0, -(self.bits - 10))

    @property
    def guard_fixed(self) -> int:
        # guard = 2^-(P-10) at scale 2^P is exactly 2^10
        return 1 << 10

    @property
    def default_depth(self) -> int:
        """Default symbolic depth: error doubles per iterate, keep headroom."""
        if self.native:
            return 48
        return int(0.8 * self.bits)

    def __repr__(self):  # compact in logs/JSON
        return f"PrecisionContext(bits={self.bits})"


NATIVE = PrecisionContext()


def context_for_bits(bits: int | None) -> PrecisionContext:
    if bits is None or bits <= 53:
        return NATIVE
    return PrecisionContext(max(128, bits))


def to_fixed(x, frac_bits: int) -> int:
    """Exact embedding of a float/int/Fraction into fixed point (truncating
    only when x is a Fraction with a non-dyadic denominator)."""
    if isinstance(x, int):
        return x << frac_bits
    f = Fraction(x)
    num = f.numerator << frac_bits
    if f.denominator == 1:
        return num
    # round to nearest to keep bisection midpoints well behaved
    q, r = divmod(num, f.denominator)
    if 2 * r >= f.denominator:
        q += 1
    return q


def fixed_to_float(v: int, frac_bits: int) -> float:
    """Nearest-float value of v / 2^frac_bits, safe for huge frac_bits."""
    if v == 0:
        return 0.0
    sign = -1.0 if v < 0 else 1.0
    a = abs(v)
    nb = a.bit_length()
    shift = nb - 54
    if shift > 0:
        mant = a >> shift
    else:
        mant = a << (-shift)
    try:
        return sign * math.ldexp(float(mant), shift - frac_bits)
    except OverflowError:
        return sign * math.inf


def fixed_log(v: int, frac_bits: int, out_bits: int):
    """ln(v / 2^frac_bits) as an mpf carrying out_bits of precision.

    v must be positive.  The single mpmath call is guarded by a lock because
    mpmath's working precision is process-global.
    """
    if v <= 0:
        raise ValueError("fixed_log needs a positive value")
    with _MP_LOCK:
        with mpmath.workprec(out_bits + 16):
            return mpmath.log(mpmath.mpf(v)) - frac_bits * mpmath.log(2)


def float_log(x: float, out_bits: int):
    """ln(x) as an mpf (x converted exactly)."""
    with _MP_LOCK:
        with mpmath.workprec(out_bits + 16):
            return mpmath.log(mpmath.mpf(x))
