"""Symbolic dynamics of the critical orbit.

The itinerary records the sign of the map's derivative at successive images
of the critical value: L = -1, R = +1, C = 0 (orbit point within guard of the
turning point; the itinerary truncates there).  For the quadratic family the
symbol at step i is sgn(f^{i+1}(0)); for the tent family it is -sgn(T^{i+1}(0)).

Itineraries of tent maps are monotone non-decreasing in the slope b under the
parity-twisted lexicographic order implemented by `itinerary_compare`; that
monotonicity is what turns kneading data into an entropy bisection.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import InvalidParameterError
from .maps import Family, FamilyParam
from .precision import NATIVE, PrecisionContext, to_fixed

__all__ = [
    "Symbol",
    "Ordering",
    "Itinerary",
    "KneadingData",
    "kneading_itinerary",
    "sign_products",
    "itinerary_compare",
    "deflate_symbols",
    "periodic_extension",
]


class Symbol(enum.IntEnum):
    L = -1
    C = 0
    R = +1


class Ordering(enum.Enum):
    LESS = -1
    EQUAL = 0
    GREATER = 1
    INCOMPARABLE = 2


_CHARS = {-1: "L", 0: "C", 1: "R"}
_VALS = {"L": -1, "C": 0, "R": 1}


@dataclass(frozen=True)
class Itinerary:
    """Kneading symbols plus reliability metadata.

    terminated: a C occurred and the sequence was truncated there (at most one
    C, always final).  ambiguous_at: first index whose orbit point came within
    10*guard of the turning point without being flagged C — signs from that
    index on should not be trusted.
    """

    symbols: tuple
    terminated: bool
    ambiguous_at: Optional[int] = None

    def __post_init__(self):
        if len(self.symbols) < 1:
            raise InvalidParameterError("itinerary must contain >= 1 symbol")

    def __len__(self):
        return len(self.symbols)

    def __str__(self):
        return "".join(_CHARS[s] for s in self.symbols)

    @staticmethod
    def from_string(s: str, ambiguous_at: Optional[int] = None) -> "Itinerary":
        syms = tuple(_VALS[ch] for ch in s)
        return Itinerary(syms, terminated=(syms and syms[-1] == 0), ambiguous_at=ambiguous_at)


@dataclass(frozen=True)
class KneadingData:
    """Cumulative sign products d_i (d_0 = 1), the determinant coefficients."""

    d: tuple
    source: Itinerary


def _symbol_run_native(kind_quad: bool, c: float, N: int, guard: float):
    """Shared native-orbit symbol extraction.

    kind_quad: x_{i+1} = x_i^2 + c starting at x = c, symbol = sgn(x);
    tent:      x_{i+1} = 1 - c|x_i| starting at x = 1, symbol = -sgn(x).
    """
    syms = []
    amb = None
    x = c if kind_quad else 1.0
    amb_guard = 10.0 * guard
    for i in range(N):
        ax = abs(x)
        if ax <= guard:
            syms.append(0)
            return syms, True, amb
        if amb is None and ax <= amb_guard:
            amb = i
        if kind_quad:
            syms.append(1 if x > 0 else -1)
            x = x * x + c
        else:
            syms.append(-1 if x > 0 else 1)
            x = 1.0 - c * ax
    return syms, False, amb


def _symbol_run_fixed(kind_quad: bool, c_fixed: int, N: int, ctx: PrecisionContext):
    fb = ctx.bits
    one = 1 << fb
    guard = ctx.guard_fixed
    amb_guard = 10 * guard
    syms = []
    amb = None
    x = c_fixed if kind_quad else one
    for i in range(N):
        ax = x if x >= 0 else -x
        if ax <= guard:
            syms.append(0)
            return syms, True, amb
        if amb is None and ax <= amb_guard:
            amb = i
        if kind_quad:
            syms.append(1 if x > 0 else -1)
            x = ((x * x) >> fb) + c_fixed
        else:
            syms.append(-1 if x > 0 else 1)
            x = one - ((c_fixed * ax) >> fb)
    return syms, False, amb


def kneading_itinerary(
    param: FamilyParam, N: int, ctx: PrecisionContext = NATIVE
) -> Itinerary:
    """Itinerary of the critical value to depth N."""
    if N < 1:
        raise InvalidParameterError("itinerary depth N must be >= 1")
    quad = param.family is Family.QUADRATIC
    if ctx.native:
        syms, term, amb = _symbol_run_native(quad, param.value, N, ctx.guard)
    else:
        syms, term, amb = _symbol_run_fixed(
            quad, to_fixed(param.value, ctx.bits), N, ctx
        )
    return Itinerary(tuple(syms), term, amb)


def sign_products(it: Itinerary) -> KneadingData:
    """d_0 = 1 and d_i = prod_{j<=i} k_j; products stop at a C (d = 0 there)."""
    d = [1]
    acc = 1
    for s in it.symbols:
        acc *= s
        d.append(acc)
        if acc == 0:
            break
    return KneadingData(tuple(d), it)


def compare_symbol_seqs(x: Sequence[int], y: Sequence[int]):
    """Core twisted-lexicographic comparison.

    Returns (cmp, idx): cmp = -1 (x < y), +1 (x > y) with idx the deciding
    index, or cmp = 0 with idx = compared length (prefix agreement, including
    simultaneous C-termination).
    """
    n = min(len(x), len(y))
    eps = 1
    for i in range(n):
        a = x[i]
        b = y[i]
        if a != b:
            return (-1 if eps * (a - b) > 0 else 1), i
        if a == 0:
            return 0, i + 1
        eps *= a
    return 0, n


def itinerary_compare(x: Itinerary, y: Itinerary) -> Ordering:
    """Unimodal kneading order, oriented so tent itineraries are monotone
    non-decreasing in the slope.  Equal means one sequence is a prefix of the
    other up to the common length.  Ambiguous symbols inside the compared
    prefix make the answer Incomparable.
    """
    cmp, idx = compare_symbol_seqs(x.symbols, y.symbols)
    for it in (x, y):
        if it.ambiguous_at is not None and it.ambiguous_at <= (
            idx if cmp != 0 else idx - 1
        ):
            return Ordering.INCOMPARABLE
    if cmp < 0:
        return Ordering.LESS
    if cmp > 0:
        return Ordering.GREATER
    return Ordering.EQUAL


def deflate_symbols(symbols: Sequence[int]):
    """Period-two (Feigenbaum) deflation of a symbol sequence.

    The once-renormalised map's i-th symbol is the product of the source's
    symbols at indices 2i+1 and 2i+2 (derivative chain rule for g^2); a C in
    either slot terminates the deflated sequence with C.
    """
    out = []
    i = 1
    n = len(symbols)
    while i < n:
        s1 = symbols[i]
        if s1 == 0:
            out.append(0)
            return out, True
        if i + 1 >= n:
            break
        s2 = symbols[i + 1]
        if s2 == 0:
            out.append(0)
            return out, True
        out.append(s1 * s2)
        i += 2
    return out, False


def periodic_extension(kd: KneadingData, length: int) -> tuple:
    """Extend a C-terminated d-sequence to `length` coefficients.

    A superattracting kneading block of period p is completed with the two
    one-sided sign choices and tiled with period 2p (the block followed by the
    block with the completion sign flipped); both completions share the same
    smallest determinant root, matching the limit of nearby non-periodic
    parameters.  Non-terminated data is returned unchanged (truncated/padded
    by its own symbols up to length).
    """
    it = kd.source
    if not it.terminated:
        return kd.d[: length + 1]
    ks = list(it.symbols)
    p = len(ks)  # period: C sits at index p-1
    if p < 2:
        # degenerate fixed critical point (a=0 style): entropy-0 data
        return tuple([1] + [0] * length)
    head = ks[:-1]
    block = head + [1] + head + [-1]
    d = [1]
    acc = 1
    i = 0
    while len(d) <= length:
        acc *= block[i % len(block)]
        d.append(acc)
        i += 1
    return tuple(d)
