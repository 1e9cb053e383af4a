"""Tent-family parameter dynamics.

phi_n(b) = T_b^n(1) with its b-derivative, periodic tent slopes (roots of
phi_{p-1}), safe preimages of the turning point, smallest-period slopes in a
gap, and the small-derivative/attracting-orbit check in the style of
Przytycki's lemma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    DerivativeUndefinedError,
    InvalidParameterError,
    NotApplicableError,
)
from .maps import Family, FamilyParam, invariant_interval
from .precision import NATIVE, PrecisionContext, fixed_to_float, to_fixed

__all__ = [
    "PhiTrace",
    "SafeSet",
    "PrzytyckiReport",
    "phi_with_derivative",
    "growth_check",
    "periodic_tent_slopes",
    "refine_periodic_slope",
    "safe_elements",
    "periodic_slope_in_gap",
    "przytycki_check",
    "attracting_period",
]

SQRT8 = 2.0 * math.sqrt(2.0)


@dataclass(frozen=True)
class PhiTrace:
    """phi_j and phi'_j sequences; phi' entries after zero_hit are NaN
    (the derivative fails to exist past a zero of the critical orbit)."""

    phi: np.ndarray
    phi_prime: np.ndarray
    zero_hit: Optional[int]


@dataclass(frozen=True)
class SafeSet:
    """Preimages of the turning point that avoid the forward critical orbit;
    they admit continuations under perturbation of the slope."""

    b: float
    depth: int
    elements: np.ndarray


@dataclass(frozen=True)
class PrzytyckiReport:
    lhs: float
    rhs: float
    passed: bool
    c_const: float
    gamma: float


def _validate_b(b: float) -> float:
    b = float(b)
    if not (1.0 < b <= 2.0):
        raise InvalidParameterError(f"tent slope b={b} outside (1, 2]")
    return b


def phi_with_derivative(
    b: float, n: int, ctx: PrecisionContext = NATIVE
) -> PhiTrace:
    """Critical-value orbit of T_b with db-derivative.

    phi_0 = 1, phi'_0 = 0; with the branch sign k = -sgn(phi_{i-1}),
    phi_i = 1 + k b phi_{i-1} and phi'_i = k (phi_{i-1} + b phi'_{i-1}).
    """
    b = _validate_b(b)
    if n < 0:
        raise InvalidParameterError("n must be >= 0")
    guard = ctx.guard
    phi = np.empty(n + 1)
    phip = np.full(n + 1, np.nan)
    phi[0] = 1.0
    phip[0] = 0.0
    x = 1.0
    xp = 0.0
    hit: Optional[int] = None
    alive = True
    for i in range(1, n + 1):
        k = -1.0 if x > 0 else 1.0
        if alive:
            xp = k * (x + b * xp)
        x = 1.0 + k * b * x
        phi[i] = x
        if alive:
            phip[i] = xp
        if hit is None and abs(x) <= guard:
            hit = i
            alive = False
    return PhiTrace(phi, phip, hit)


def growth_check(b: float, n: int) -> float:
    """Measured two-sided growth constant: max over 5<=j<=n of
    max(|phi'_j|/b^j, b^j/|phi'_j|)."""
    b = _validate_b(b)
    if n < 5:
        raise InvalidParameterError("n must be >= 5")
    tr = phi_with_derivative(b, n)
    if tr.zero_hit is not None and tr.zero_hit < n:
        raise DerivativeUndefinedError(
            f"derivative undefined beyond j={tr.zero_hit} (critical orbit zero)"
        )
    c = 1.0
    bj = b**5
    for j in range(5, n + 1):
        mag = abs(tr.phi_prime[j])
        c = max(c, mag / bj, bj / mag)
        bj *= b
    return c


def _phi_scalar(b: float, n: int) -> float:
    x = 1.0
    for _ in range(n):
        x = 1.0 - b * abs(x)
    return x


def _phi_grid(bs: np.ndarray, n: int) -> np.ndarray:
    x = np.ones_like(bs)
    for _ in range(n):
        x = 1.0 - bs * np.abs(x)
    return x


def _true_period(b: float, p: int, tol: float = 1e-10) -> bool:
    x = 1.0
    for j in range(1, p - 1):
        x = 1.0 - b * abs(x)
        if abs(x) <= tol:
            return False
    return True


def periodic_tent_slopes(p: int, lo: float, hi: float) -> list:
    """All slopes in [lo, hi] whose turning point is periodic with period
    exactly p: sign-scan of phi_{p-1} on a 2^14 grid, bisection to 1e-14,
    then the period filter.  Each root must satisfy b^p >= 2*sqrt(2)."""
    if p < 3:
        raise InvalidParameterError("period is necessarily at least 3")
    if p > 20:
        raise InvalidParameterError("period capped at 20 (root count ~2^p)")
    lo = max(float(lo), 1.0 + 1e-9)
    hi = min(float(hi), 2.0)
    if not lo < hi:
        raise InvalidParameterError("need lo < hi inside (1, 2]")
    n = p - 1
    grid = np.linspace(lo, hi, (1 << 14) + 1)
    vals = _phi_grid(grid, n)
    sgn = np.sign(vals)
    idx = np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]
    seeds = [(float(grid[i]), float(grid[i + 1]), float(vals[i])) for i in idx]
    for i in np.nonzero(sgn == 0.0)[0]:
        seeds.append((float(grid[i]), float(grid[i]), 0.0))
    seeds.sort()
    roots = []
    for b1, b2, f1 in seeds:
        for _ in range(80):
            if b2 - b1 <= 1e-15:
                break
            bm = 0.5 * (b1 + b2)
            fm = _phi_scalar(bm, n)
            if fm == 0.0:
                b1 = b2 = bm
                break
            if f1 * fm < 0:
                b2 = bm
            else:
                b1, f1 = bm, fm
        root = 0.5 * (b1 + b2)
        if not _true_period(root, p):
            continue
        if roots and abs(root - roots[-1]) <= 1e-12:
            continue
        if root**p < SQRT8 - 1e-9:
            raise InvalidParameterError(
                f"periodic slope {root} violates b^p >= 2*sqrt(2)"
            )
        roots.append(root)
    return roots


def refine_periodic_slope(b0: float, p: int, ctx: PrecisionContext) -> int:
    """Fixed-point refinement of a periodic slope to ctx precision.

    Returns the slope as a fixed-point integer at ctx.bits fraction bits;
    used where a window's exact entropy log(b) is needed far beyond float
    accuracy.
    """
    if ctx.native:
        raise InvalidParameterError("refinement needs an extended context")
    fb = ctx.bits
    one = 1 << fb
    n = p - 1

    def phi_fix(b: int) -> int:
        x = one
        for _ in range(n):
            ax = x if x >= 0 else -x
            x = one - ((b * ax) >> fb)
        return x

    span = to_fixed(1e-9, fb)
    lo = to_fixed(b0, fb) - span
    hi = to_fixed(b0, fb) + span
    flo = phi_fix(lo)
    fhi = phi_fix(hi)
    if flo * fhi > 0:
        raise InvalidParameterError("seed does not bracket a periodic slope")
    for _ in range(fb + 8):
        mid = (lo + hi) >> 1
        if mid <= lo or mid >= hi:
            break
        fm = phi_fix(mid)
        if fm == 0:
            return mid
        if flo * fm < 0:
            hi = mid
        else:
            lo, flo = mid, fm
    return (lo + hi) >> 1


def safe_elements(b: float, N: int) -> SafeSet:
    """Backward tree of the turning point to depth N, minus points on (the
    first 4N points of) the forward critical orbit."""
    b = _validate_b(b)
    if not (1 <= N <= 12):
        raise InvalidParameterError("safe-set depth N must be in [1, 12]")
    guard = NATIVE.guard
    iv = invariant_interval(FamilyParam(Family.TENT, b))
    atol = 1e-13 * max(1.0, iv.width)
    level = np.array([0.0])
    collected = []
    for _ in range(N):
        y = level[level <= 1.0]
        r = (1.0 - y) / b
        cand = np.concatenate([r, -r])
        cand = cand[(cand >= iv.lo - atol) & (cand <= iv.hi + atol)]
        cand = np.sort(cand)
        if cand.size:
            keep = np.ones(cand.size, dtype=bool)
            keep[1:] = np.diff(cand) > atol
            cand = cand[keep]
        level = cand
        collected.append(level)
    pts = np.sort(np.concatenate(collected)) if collected else np.array([])
    if pts.size:
        keep = np.ones(pts.size, dtype=bool)
        keep[1:] = np.diff(pts) > atol
        pts = pts[keep]
    # forward orbit of the turning point, 4N points
    orb = np.empty(4 * N + 1)
    x = 0.0
    for i in range(4 * N + 1):
        orb[i] = x
        x = 1.0 - b * abs(x)
    cut = 10.0 * guard
    mask = np.array([np.min(np.abs(orb - e)) > cut for e in pts])
    return SafeSet(b, N, pts[mask])


def periodic_slope_in_gap(
    b1: float, b2: float, max_period: int
) -> Optional[tuple]:
    """Smallest-period periodic slope strictly inside (b1, b2); ties broken
    by smaller slope.  None when no period <= max_period exists there."""
    if not (1.0 < b1 < b2 <= 2.0):
        raise InvalidParameterError("need 1 < b1 < b2 <= 2")
    edge = 1e-12
    for p in range(3, max_period + 1):
        roots = periodic_tent_slopes(p, b1, b2)
        inside = [r for r in roots if b1 + edge < r < b2 - edge]
        if inside:
            return min(inside), p
    return None


def attracting_period(
    a: float, max_period: int, transient: int = 4096, tol: float = 1e-9
) -> Optional[int]:
    """Heuristic attracting-cycle detector for x -> x^2 + a: iterate the
    critical orbit past a transient and look for a short return with cycle
    multiplier < 1."""
    x = 0.0
    for _ in range(transient):
        x = x * x + a
    ref = x
    pts = [x]
    for _ in range(max_period):
        x = x * x + a
        pts.append(x)
    for q in range(1, max_period + 1):
        if abs(pts[q] - ref) < tol:
            mult = 1.0
            for j in range(q):
                mult *= 2.0 * pts[j]
            if abs(mult) < 0.999:
                return q
            break
    return None


def przytycki_check(param: FamilyParam, n: int) -> PrzytyckiReport:
    """Lower bound on |map^{n+1}(0)| from the absence of short attracting
    orbits: |g^{n+1}(0)| > 2^-2 C^-1 gamma^-n whenever |g'(x)| <= min(C|x|,
    gamma) and no attracting orbit of period <= n+1 exists.

    Quadratic: C = 2, gamma = max|f'| on the invariant interval; the
    no-attracting-orbit precondition is checked heuristically.  Tent: the
    C|x| bound only holds away from the guard neighbourhood, so C = b/guard
    and the check passes trivially (there are never attracting orbits).
    """
    if n < 1:
        raise InvalidParameterError("n must be >= 1")
    if param.family is Family.QUADRATIC:
        a = param.value
        q = attracting_period(a, min(n + 1, 64))
        if q is not None:
            raise NotApplicableError(
                f"attracting orbit of period {q} detected; lemma not applicable"
            )
        c_const = 2.0
        iv = invariant_interval(param)
        gamma = 2.0 * max(abs(iv.lo), abs(iv.hi))
        x = 0.0
        for _ in range(n + 1):
            x = x * x + a
        lhs = abs(x)
    else:
        b = param.value
        c_const = b / NATIVE.guard
        gamma = b
        x = 0.0
        for _ in range(n + 1):
            x = 1.0 - b * abs(x)
        lhs = abs(x)
    rhs = 0.25 / c_const / gamma**n
    return PrzytyckiReport(lhs, rhs, lhs > rhs, c_const, gamma)
