"""Renormalisation structure of the quadratic family.

Superattracting centers (critical orbit periodic), entropy-level band-merging
parameters a_m with h(a_m) = log2 / 2^m, ratio extrapolation to the first
Feigenbaum constant and to the cascade accumulation point, and flat-window
detection around a parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .entropy import LOG2, quad_entropy
from .errors import InvalidParameterError
from .precision import NATIVE, PrecisionContext, mp_guard

__all__ = [
    "RenormWindow",
    "CascadeTable",
    "superattracting_parameters",
    "band_merging_cascade",
    "feigenbaum_aF",
    "detect_window",
    "xi_derivative_bound_check",
    "FEIGENBAUM_DELTA",
]

# reference value of the first Feigenbaum constant (for reporting only;
# the cascade estimates it independently)
FEIGENBAUM_DELTA = 4.669201609102990


@dataclass(frozen=True)
class RenormWindow:
    period: int
    interval: tuple
    center: float
    feig_depth: int

    def contains(self, a: float) -> bool:
        return self.interval[0] < a < self.interval[1]


@dataclass(frozen=True)
class CascadeTable:
    """Band-merging parameters and their gap-ratio extrapolation.

    a_m[m] solves h = log2/2^m (a_m[0] = -2); ratios[i] is the gap quotient
    (a_{i+1}-a_i)/(a_{i+2}-a_{i+1}) ... stored as successive-gap ratios
    converging to the Feigenbaum constant.
    """

    a_m: tuple
    h_err: tuple
    ratios: tuple
    delta_star: float
    delta_star_unc: float
    a_F: float
    a_F_unc: float
    superstable: bool = False
    warning: Optional[str] = None

    @property
    def depth(self) -> int:
        return len(self.a_m) - 1


# ---------------------------------------------------------------------------
# superattracting parameters
# ---------------------------------------------------------------------------


def _xi_grid(a: np.ndarray, steps: int) -> np.ndarray:
    x = a.copy()
    for _ in range(steps):
        x = x * x + a
    return x


def _xi_scalar(a: float, steps: int) -> float:
    x = a
    for _ in range(steps):
        x = x * x + a
    return x


def _xi_and_deriv(a: float, steps: int):
    x = a
    d = 1.0
    for _ in range(steps):
        d = 1.0 + 2.0 * x * d
        x = x * x + a
    return x, d


def _true_period_quad(a: float, p: int, tol: float = 1e-10) -> bool:
    if p <= 1:
        return True
    x = a
    for _ in range(p - 2):
        if abs(x) <= tol:
            return False
        x = x * x + a
    return abs(x) > tol


def superattracting_parameters(period: int, lo: float, hi: float) -> List[float]:
    """Roots of xi_{period-1}(a) = 0 in [lo, hi] with no earlier critical hit
    (the critical orbit is periodic with period exactly `period`)."""
    if not (1 <= period <= 24):
        raise InvalidParameterError("period must be in [1, 24]")
    return _superattracting_roots(period, lo, hi)


def _superattracting_roots(period: int, lo: float, hi: float) -> List[float]:
    lo = max(float(lo), -2.0)
    hi = min(float(hi), 0.25)
    if not lo < hi:
        return []
    steps = period - 1
    grid = np.linspace(lo, hi, (1 << 14) + 1)
    vals = _xi_grid(grid, steps)
    sgn = np.sign(vals)
    idx = np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]
    seeds = [(float(grid[i]), float(grid[i + 1]), float(vals[i])) for i in idx]
    # grid points landing exactly on a root carry no sign change
    for i in np.nonzero(sgn == 0.0)[0]:
        seeds.append((float(grid[i]), float(grid[i]), 0.0))
    seeds.sort()
    roots: List[float] = []
    for a1, a2, f1 in seeds:
        for _ in range(80):
            if a2 - a1 <= 1e-15:
                break
            am = 0.5 * (a1 + a2)
            fm = _xi_scalar(am, steps)
            if fm == 0.0:
                a1 = a2 = am
                break
            if f1 * fm < 0:
                a2 = am
            else:
                a1, f1 = am, fm
        root = 0.5 * (a1 + a2)
        # Newton polish: pushes the critical-orbit residual to ~1 ulp so the
        # itinerary at the center genuinely terminates with C
        for _ in range(3):
            v, d = _xi_and_deriv(root, steps)
            if d == 0.0:
                break
            step = v / d
            if not math.isfinite(step) or abs(step) > 1e-6:
                break
            root -= step
        root = min(max(root, -2.0), 0.25)
        if not _true_period_quad(root, period):
            continue
        if roots and abs(root - roots[-1]) <= 1e-13:
            continue
        roots.append(root)
    return roots


# ---------------------------------------------------------------------------
# band-merging cascade
# ---------------------------------------------------------------------------

_DEFLATED_DEPTH = 26  # matched symbols after full deflation; ~1e-8 in h-hat


def _cascade_context(m: int, deflated_depth: int) -> tuple:
    n_m = (1 << m) * (deflated_depth + 2)
    bits = max(192, int(1.25 * n_m) + 64)
    return PrecisionContext(bits), n_m


def _aitken(x0: float, x1: float, x2: float) -> float:
    denom = (x2 - x1) - (x1 - x0)
    if denom == 0.0:
        return x2
    return x2 - (x2 - x1) ** 2 / denom


def _extrapolate(a_list: List[float], ratios: List[float]):
    if len(ratios) >= 3:
        delta = _aitken(*ratios[-3:])
        prev = _aitken(*ratios[-4:-1]) if len(ratios) >= 4 else ratios[-1]
        unc = abs(delta - prev) + 1e-6
    else:
        delta = ratios[-1]
        unc = abs(ratios[-1] - ratios[0]) + 0.5
    gap = a_list[-1] - a_list[-2]
    a_f = a_list[-1] + gap / (delta - 1.0)
    a_f_alt = a_list[-1] + gap / (ratios[-1] - 1.0)
    a_f_unc = abs(a_f - a_f_alt) + abs(gap) * unc / (delta - 1.0) ** 2 + 1e-9
    return delta, unc, a_f, a_f_unc


def band_merging_cascade(
    M: int,
    ctx: Optional[PrecisionContext] = None,
    superstable: bool = False,
    deflated_depth: int = _DEFLATED_DEPTH,
) -> CascadeTable:
    """Parameters a_m with h(a_m) = log2/2^m for m = 0..M, gap ratios and
    their extrapolation.  Precision escalates with m unless an explicit
    context is supplied (a too-shallow context yields a partial table with a
    warning, per the interface contract).
    """
    if not (2 <= M <= 10):
        raise InvalidParameterError("cascade depth M must be in [2, 10]")
    if superstable:
        return _superstable_cascade(M)
    a_list = [-2.0]
    errs = [0.0]
    warning = None
    for m in range(1, M + 1):
        auto_ctx, n_m = _cascade_context(m, deflated_depth)
        if ctx is not None:
            if ctx.default_depth < n_m:
                warning = (
                    f"requested context ({ctx.bits} bits) too shallow for "
                    f"depth m={m}; table truncated"
                )
                break
            use_ctx = ctx
        else:
            use_ctx = auto_ctx
        with mp_guard(use_ctx.bits) as mp:
            target = mp.log(2) / (1 << m)

        def above(a: float) -> bool:
            return quad_entropy(a, N=n_m, ctx=use_ctx).value > target

        # seed the bracket from the previous gap (ratios stay in [3.3, 5.5]
        # along the cascade); probes inside it are deeply renormalisable, so
        # the matcher stays on the cheap deflation path
        lo, hi = a_list[-1], -1.35
        if m >= 2:
            gap = a_list[-1] - a_list[-2]
            lo_try = a_list[-1] + gap / 5.5
            hi_try = a_list[-1] + gap / 3.3
            if above(lo_try) and not above(hi_try):
                lo, hi = lo_try, hi_try
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if above(mid):
                lo = mid
            else:
                hi = mid
        a_list.append(0.5 * (lo + hi))
        res = quad_entropy(a_list[-1], N=n_m, ctx=use_ctx)
        errs.append(float(res.error_radius))
    if len(a_list) < 3:
        raise InvalidParameterError(
            "cascade needs at least two resolved levels; " + (warning or "")
        )
    gaps = [a_list[i + 1] - a_list[i] for i in range(len(a_list) - 1)]
    ratios = [gaps[i] / gaps[i + 1] for i in range(len(gaps) - 1)]
    delta, unc, a_f, a_f_unc = _extrapolate(a_list, ratios)
    return CascadeTable(
        tuple(a_list),
        tuple(errs),
        tuple(ratios),
        delta,
        unc,
        a_f,
        a_f_unc,
        superstable=False,
        warning=warning,
    )


def _superstable_cascade(M: int) -> CascadeTable:
    """Cross-check variant: superattracting centers of period 2^m."""
    s = [0.0, -1.0]
    for m in range(2, M + 1):
        gap = s[-1] - s[-2]
        guess_ratio = 4.0 if m == 2 else max(3.0, (s[-2] - s[-3]) / gap)
        pred_gap = gap / guess_ratio
        lo = s[-1] + 2.2 * pred_gap
        hi = s[-1] + 0.3 * pred_gap
        cands = _superattracting_roots(1 << m, lo, hi)
        if not cands:
            cands = _superattracting_roots(1 << m, s[-1] + 1.2 * gap, s[-1])
        if not cands:
            raise InvalidParameterError(
                f"superstable cascade lost the period-{1 << m} center"
            )
        pred = s[-1] + pred_gap
        s.append(min(cands, key=lambda c: abs(c - pred)))
    gaps = [s[i + 1] - s[i] for i in range(len(s) - 1)]
    ratios = [gaps[i] / gaps[i + 1] for i in range(len(gaps) - 1)]
    delta, unc, a_f, a_f_unc = _extrapolate(s, ratios)
    return CascadeTable(
        tuple(s),
        tuple(0.0 for _ in s),
        tuple(ratios),
        delta,
        unc,
        a_f,
        a_f_unc,
        superstable=True,
    )


def feigenbaum_aF(table: CascadeTable) -> tuple:
    """Extrapolated cascade accumulation point with its uncertainty."""
    if len(table.a_m) < 4:
        raise InvalidParameterError("need a cascade table with >= 4 rows")
    return table.a_F, table.a_F_unc


# ---------------------------------------------------------------------------
# window detection
# ---------------------------------------------------------------------------


def _cycle_newton(a: float, p: int, x_seed: float):
    """Newton solve of f_a^p(x) = x from x_seed.

    Returns (x*, multiplier) or None; rejects runs that leave the seed's
    neighbourhood (continuation guard) or collapse to a shorter period.
    """
    x = x_seed
    for _ in range(100):
        v = x
        d = 1.0
        for _ in range(p):
            d *= 2.0 * v
            v = v * v + a
        fp = d - 1.0
        res = v - x
        if abs(res) < 1e-13 * max(1.0, abs(x)):
            break
        if fp == 0.0 or not math.isfinite(v):
            return None
        step = res / fp
        if not math.isfinite(step) or abs(step) > 1.0:
            return None
        x -= step
    else:
        return None
    if abs(x - x_seed) > 0.25:
        return None
    if not math.isfinite(x) or abs(x) > 3.0:
        return None
    # true period p: orbit points pairwise distinct from x
    v = x
    mult = 1.0
    for j in range(p):
        mult *= 2.0 * v
        v = v * v + a
        if j < p - 1 and abs(v - x) < 1e-7:
            return None
    return x, mult


def _window_right_edge(center: float, p: int) -> float:
    """Saddle-node boundary: continuation of the period-p orbit to the right
    until it ceases to exist with multiplier below +1."""

    def ok(a: float, seed: float):
        if a > 0.25:
            return None
        res = _cycle_newton(a, p, seed)
        if res is None:
            return None
        x, mult = res
        if mult >= 1.0 + 1e-12:
            return None
        return x

    a_ok = center
    seed = 0.0
    step = max(1e-10, 0.02 * 4.0 ** (-(p - 1)))
    a_bad = None
    for _ in range(200):
        a_try = min(a_ok + step, 0.2500000001)
        x = ok(a_try, seed)
        if x is not None:
            a_ok, seed = a_try, x
            if a_try >= 0.25:
                return 0.25
            step *= 1.7
        else:
            a_bad = a_try
            break
    if a_bad is None:
        return 0.25
    for _ in range(64):
        mid = 0.5 * (a_ok + a_bad)
        if mid <= a_ok or mid >= a_bad:
            break
        x = ok(mid, seed)
        if x is not None:
            a_ok, seed = mid, x
        else:
            a_bad = mid
    return 0.5 * (a_ok + a_bad)


def _window_left_edge(
    center: float, p: int, h_c: float, err_c: float, ctx: PrecisionContext
) -> float:
    """Entropy-exit boundary: leftmost parameter where h still equals the
    window value within noise.  Probe errors are capped so a foggy probe
    (native precision near the cascade accumulation) cannot stall the exit
    test."""

    def exceeded(a: float) -> bool:
        if a <= -2.0:
            return True
        r = quad_entropy(a, ctx=ctx)
        err = err_c + min(float(r.error_radius), 1e-2)
        return float(r.value) > h_c + 3.0 * err

    step = max(1e-9, 0.02 * 4.0 ** (-(p - 1)))
    a_in = center
    a_out = None
    for _ in range(200):
        a_try = max(center - step, -2.0 - 1e-9)
        if exceeded(a_try):
            a_out = a_try
            break
        a_in = a_try
        if a_try <= -2.0:
            break
        step *= 1.7
    if a_out is None:
        return -2.0
    for _ in range(64):
        mid = 0.5 * (a_out + a_in)
        if mid <= a_out or mid >= a_in:
            break
        if exceeded(mid):
            a_out = mid
        else:
            a_in = mid
    return 0.5 * (a_out + a_in)


def detect_window(
    a: float, max_period: int = 24, ctx: PrecisionContext = NATIVE
) -> Optional[RenormWindow]:
    """Smallest-period flat window containing a, or None.

    Heuristic: windows whose plausible width falls below float resolution
    near `a` are not searched (they are unresolvable at native precision).
    """
    if not (-2.0 <= a <= 0.25):
        raise InvalidParameterError(f"quadratic parameter a={a} outside [-2, 0.25]")
    if not (1 <= max_period <= 24):
        raise InvalidParameterError("max_period must be in [1, 24]")
    for p in range(1, max_period + 1):
        width = 2.6 * 4.0 ** (-(p - 1))
        if width < 1e-12 * max(1.0, abs(a)):
            break
        cands = superattracting_parameters(p, a - width, a + width)
        cands = sorted(cands, key=lambda c: abs(c - a))[:4]
        for c in cands:
            right = _window_right_edge(c, p)
            if a >= right:
                continue
            res_c = quad_entropy(c, ctx=ctx)
            left = _window_left_edge(
                c, p, float(res_c.value), float(res_c.error_radius), ctx
            )
            if left < a < right:
                feig = (p & -p).bit_length() - 1
                return RenormWindow(p, (left, right), c, feig)
    return None


def xi_derivative_bound_check(
    a: float, n: int, m: int, gamma: float
) -> dict:
    """Compare |xi'_{2^m n - 1}(a)| against gamma^(n+3m).

    The bound holds with gamma a universal renormalisation-derivative
    constant, supplied by the caller.
    """
    if gamma <= 1.0:
        raise InvalidParameterError("gamma must exceed 1")
    if n < 1 or m < 0:
        raise InvalidParameterError("need n >= 1 and m >= 0")
    k = (1 << m) * n - 1
    if k > 4000:
        raise InvalidParameterError("2^m * n - 1 capped at 4000")
    x = a
    d = 1.0
    for _ in range(k):
        d = 1.0 + 2.0 * x * d
        x = x * x + a
    lhs = abs(d)
    rhs = gamma ** (n + 3 * m)
    return {"lhs": lhs, "rhs": rhs, "pass": bool(lhs < rhs)}
