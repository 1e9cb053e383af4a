"""Topological entropy by three routes.

* tent_entropy: exact formula log b for the slope-b tent map.
* quad_entropy: monotone bisection matching the quadratic kneading itinerary
  against tent itineraries.  When the running estimate drops below half of
  log 2 the symbolic data is period-two deflated and the result rescaled by
  2^m, which keeps relative accuracy through the period-doubling cascade.
* kneading_root_entropy: smallest root of the truncated kneading determinant
  1 + sum d_i t^i, reported as -log s with a truncation-tail error radius.
* lap_count: exact monotone-lap census of the n-th iterate (cross-validation
  oracle; exponential cost, capped).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import mpmath
import numpy as np

from .errors import InsufficientPrecisionError, InvalidParameterError
from .kneading import (
    KneadingData,
    compare_symbol_seqs,
    deflate_symbols,
    kneading_itinerary,
    periodic_extension,
)
from .maps import Family, FamilyParam, core_interval, quadratic
from .precision import (
    NATIVE,
    PrecisionContext,
    fixed_log,
    fixed_to_float,
    mp_guard,
    to_fixed,
)

__all__ = [
    "Method",
    "EntropyResult",
    "tent_entropy",
    "quad_entropy",
    "kneading_root_entropy",
    "lap_count",
    "lap_entropy_estimate",
    "LOG2",
]

LOG2 = math.log(2.0)

# Estimated constant in the depth resolution C * b^-N of kneading agreement
# intervals (Birkhoff-type growth of the tent critical-value derivative).
DEPTH_ERR_COEFF = 8.0

# Deflate when the running entropy estimate is below (log 2)/2, with 1%
# hysteresis so values at exactly half entropy do not flap.
DEFLATE_TRIGGER = 0.5 * LOG2 * 0.99
MIN_DEFLATE_LEN = 32
MAX_DEFLATIONS = 30


class Method(enum.Enum):
    TENT_EXACT = "TentExact"
    KNEAD_BISECT = "KneadBisect"
    KNEAD_ROOT = "KneadRoot"
    LAP_COUNT = "LapCount"


@dataclass(frozen=True)
class EntropyResult:
    """Entropy in nats with an error radius and provenance.

    value/error_radius are floats in native precision and mpmath mpf in
    extended precision (differences far below 1e-16 stay meaningful).
    """

    value: object
    error_radius: object
    method: Method
    renorm_depth: int = 0
    note: Optional[str] = None

    def as_floats(self):
        return float(self.value), float(self.error_radius)


def tent_entropy(b: float) -> EntropyResult:
    if not (1.0 < b <= 2.0):
        raise InvalidParameterError(f"tent slope b={b} outside (1, 2]")
    return EntropyResult(math.log(b), 0.0, Method.TENT_EXACT, 0)


# ---------------------------------------------------------------------------
# quadratic entropy via kneading bisection against the tent family
# ---------------------------------------------------------------------------


def _cmp_syms_tent_native(syms, b: float, guard: float) -> int:
    """Compare a quadratic symbol prefix against K(T_b), lazily.

    Returns -1 if the prefix precedes the tent kneading, +1 if it follows,
    0 on agreement to the full prefix length (including a simultaneous C).
    """
    eps = 1
    x = 1.0
    for sq in syms:
        ax = abs(x)
        if ax <= guard:
            st = 0
        else:
            st = -1 if x > 0 else 1
        if sq != st:
            return -1 if eps * (sq - st) > 0 else 1
        if sq == 0:
            return 0
        eps *= sq
        x = 1.0 - b * ax
    return 0


def _cmp_syms_tent_fixed(syms, b_fix: int, fb: int, guard_fix: int) -> int:
    eps = 1
    one = 1 << fb
    x = one
    for sq in syms:
        ax = x if x >= 0 else -x
        if ax <= guard_fix:
            st = 0
        else:
            st = -1 if x > 0 else 1
        if sq != st:
            return -1 if eps * (sq - st) > 0 else 1
        if sq == 0:
            return 0
        eps *= sq
        x = one - ((b_fix * ax) >> fb)
    return 0


def _tent_match_native(syms, terminated: bool, iters: int, guard: float,
                       stop_below: Optional[float] = None):
    """Bisect the tent slope whose kneading matches the given symbols.

    Returns (h, err, status) with status in {"bracket", "equal", "bottom",
    "defer"}.  Less/Greater outcomes are exact one-sided entropy bounds; only
    an Equal-at-depth collapse carries the b^-depth agreement-interval
    radius.  Terminated (periodic) data pins the full kneading, so its Equal
    radius is guard-scale, not depth-scale.  When stop_below is set, the
    search aborts with "defer" as soon as the entropy upper bound log(hi)
    falls below it (the caller will deflate and retry, so finishing the
    bisection at this level would be wasted work).
    """
    lo, hi = 1.0 + 1e-9, 2.0
    hi_stop = math.exp(stop_below) if stop_below is not None else 0.0
    depth = len(syms)
    status = "bracket"
    for _ in range(max(iters, depth + 80)):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        c = _cmp_syms_tent_native(syms, mid, guard)
        if c == 0:
            lo = hi = mid
            status = "equal"
            break
        if c > 0:
            lo = mid
        else:
            hi = mid
            if hi < hi_stop:
                return math.log(hi), LOG2, "defer"
    mid = 0.5 * (lo + hi)
    if status != "equal" and hi <= 1.0 + 4e-9:
        return 0.0, min(LOG2, math.log(hi)), "bottom"
    err_depth = min(LOG2, DEPTH_ERR_COEFF * mid ** (-depth))
    if status == "equal":
        err = 10.0 * guard if terminated else err_depth
    else:
        err = 0.5 * (math.log(hi) - math.log(lo)) + err_depth
    return math.log(mid), min(err, LOG2), status


def _tent_match_fixed(syms, terminated: bool, iters: int, ctx: PrecisionContext,
                      stop_below: Optional[float] = None):
    fb = ctx.bits
    one = 1 << fb
    guard_fix = ctx.guard_fixed
    lo = one + (one >> 30)
    hi = 2 * one
    hi_stop = to_fixed(math.exp(stop_below), fb) if stop_below is not None else 0
    depth = len(syms)
    status = "bracket"
    for _ in range(max(iters, depth + 80)):
        mid = (lo + hi) >> 1
        if mid <= lo or mid >= hi:
            break
        c = _cmp_syms_tent_fixed(syms, mid, fb, guard_fix)
        if c == 0:
            lo = hi = mid
            status = "equal"
            break
        if c > 0:
            lo = mid
        else:
            hi = mid
            if hi < hi_stop:
                return mpmath.mpf(0), mpmath.mpf(LOG2), "defer"
    mid = (lo + hi) >> 1
    if status != "equal" and hi <= one + (one >> 28):
        return mpmath.mpf(0), fixed_log(hi, fb, ctx.bits), "bottom"
    bmid = fixed_to_float(mid, fb)
    # error terms need magnitude only; evaluate in log space to dodge underflow
    with mp_guard(64) as mp:
        err_depth = mp.exp(
            mp.log(DEPTH_ERR_COEFF) - depth * mp.log(mp.mpf(bmid))
        )
        if status == "equal":
            err = (
                mp.mpf(10) * mp.ldexp(1, -(ctx.bits - 10))
                if terminated
                else err_depth
            )
        else:
            width = hi - lo
            err_bracket = (
                mp.mpf(width) / mp.mpf(lo) / 2 if width > 0 else mp.mpf(0)
            )
            err = err_bracket + err_depth
        if err > LOG2:
            err = mp.mpf(LOG2)
    value = fixed_log(mid, fb, ctx.bits)
    return value, err, status


def quad_entropy(
    a: float,
    N: Optional[int] = None,
    iters: int = 200,
    ctx: PrecisionContext = NATIVE,
) -> EntropyResult:
    """Topological entropy of x -> x^2 + a by kneading bisection."""
    param = quadratic(a)
    if N is None:
        N = ctx.default_depth
    if N < 16:
        raise InvalidParameterError("kneading depth N must be >= 16")
    if iters < 32:
        raise InvalidParameterError("iters must be >= 32")
    it = kneading_itinerary(param, N, ctx)
    syms = list(it.symbols)
    terminated = it.terminated
    window_center = it.terminated
    if it.ambiguous_at is not None:
        if it.ambiguous_at < 16:
            bracket = None
            if it.ambiguous_at >= 2:
                h, err, _ = _match(syms[: it.ambiguous_at], False, iters, ctx)
                h, err = float(h), float(err)
                bracket = (max(0.0, h - err), min(LOG2, h + err))
            raise InsufficientPrecisionError(
                f"itinerary ambiguous at depth {it.ambiguous_at} < 16 "
                f"(orbit point within 10*guard of the turning point)",
                bracket=bracket,
            )
        syms = syms[: it.ambiguous_at]
        terminated = False

    m = 0
    while True:
        can_deflate = len(syms) >= MIN_DEFLATE_LEN and m < MAX_DEFLATIONS
        h_hat, err_hat, status = _match(
            syms, terminated, iters, ctx,
            DEFLATE_TRIGGER if can_deflate else None,
        )
        if can_deflate and (status == "defer" or h_hat < DEFLATE_TRIGGER):
            syms, terminated = deflate_symbols(syms)
            m += 1
            continue
        break

    scale = 1 << m
    if ctx.native:
        value = h_hat / scale
        err = err_hat / scale
    else:
        # mpf arithmetic rounds to the *current* working precision; rescale
        # under the context's precision so extended digits survive
        with mp_guard(ctx.bits + 16):
            value = h_hat / scale
            err = err_hat / scale
    note = "window-center" if window_center else None
    if value < 1e-4 and m >= 12:
        return EntropyResult(
            0.0, math.ldexp(LOG2, -m), Method.KNEAD_BISECT, m, "cascade-floor"
        )
    if status == "bottom":
        return EntropyResult(
            0.0 * value, err, Method.KNEAD_BISECT, m, note or "below-resolution"
        )
    return EntropyResult(value, err, Method.KNEAD_BISECT, m, note)


def _match(syms, terminated, iters, ctx, stop_below=None):
    if not syms:
        return 0.0, LOG2, "bottom"
    if ctx.native:
        return _tent_match_native(syms, terminated, iters, ctx.guard, stop_below)
    return _tent_match_fixed(syms, terminated, iters, ctx, stop_below)


# ---------------------------------------------------------------------------
# kneading determinant root
# ---------------------------------------------------------------------------


def _poly_eval(d, t: float) -> float:
    acc = 0.0
    for c in reversed(d):
        acc = acc * t + c
    return acc


def _first_sign_change(f, lo: float, hi: float, grid: int):
    ts = np.linspace(lo, hi, grid)
    prev_t = ts[0]
    prev_v = f(prev_t)
    for t in ts[1:]:
        v = f(t)
        if prev_v == 0.0:
            return prev_t, prev_t
        if prev_v * v < 0.0:
            return prev_t, t
        prev_t, prev_v = t, v
    return None


def _bisect(f, lo: float, hi: float, tol: float) -> float:
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol:
            break
        v = f(mid)
        if v == 0.0:
            return mid
        if flo * v < 0.0:
            hi = mid
        else:
            lo, flo = mid, v
    return 0.5 * (lo + hi)


def kneading_root_entropy(kd: KneadingData, tol: float = 1e-12) -> EntropyResult:
    """Entropy -log s from the smallest root s of the truncated determinant.

    Terminated (periodic) kneading data is first extended with the
    period-doubled completion.  The error radius brackets the root between
    the zeros of D_N(t) -/+ t^(N+1)/(1-t), the truncation tail envelope.
    """
    if tol <= 0:
        raise InvalidParameterError("tol must be > 0")
    if kd.source.terminated:
        d = periodic_extension(kd, max(4 * len(kd.d), 256))
    else:
        d = kd.d
    if len(d) < 8:
        raise InvalidParameterError("need at least 8 determinant coefficients")
    N = len(d) - 1
    t_hi = 1.0 - max(tol, 1e-6)

    def tail(t: float) -> float:
        return t ** (N + 1) / (1.0 - t)

    def D(t: float) -> float:
        return _poly_eval(d, t)

    br = _first_sign_change(D, 1e-6, t_hi, 4096)
    if br is None:
        lo_br = _first_sign_change(lambda t: D(t) - tail(t), 1e-6, t_hi, 4096)
        err = 0.0
        if lo_br is not None:
            s_lo = _bisect(lambda t: D(t) - tail(t), lo_br[0], lo_br[1], tol)
            err = -math.log(s_lo)
        return EntropyResult(0.0, err, Method.KNEAD_ROOT, 0, "no-root")
    s = _bisect(D, br[0], br[1], tol)
    # bracket the root of every tail-consistent completion of the series
    s_lo = s
    lo_br = _first_sign_change(lambda t: D(t) - tail(t), 1e-6, s + 1e-9, 4096)
    if lo_br is not None:
        s_lo = _bisect(lambda t: D(t) - tail(t), lo_br[0], lo_br[1], tol)
    hi_br = _first_sign_change(lambda t: D(t) + tail(t), max(1e-6, s - 1e-9), t_hi, 4096)
    s_hi = _bisect(lambda t: D(t) + tail(t), hi_br[0], hi_br[1], tol) if hi_br else t_hi
    err = max(abs(math.log(s_lo) - math.log(s)), abs(math.log(s_hi) - math.log(s)))
    err += tol / s
    value = -math.log(s)
    return EntropyResult(value, err, Method.KNEAD_ROOT, 0)


# ---------------------------------------------------------------------------
# lap counting (exact, exponential cost)
# ---------------------------------------------------------------------------


def lap_count(param: FamilyParam, n: int) -> int:
    """Number of maximal monotone pieces of the n-th iterate on the core.

    Computed exactly as 1 + #(critical points of map^n), the critical points
    being the backward tree of the turning point to depth n-1.
    """
    if n > 22:
        raise InvalidParameterError("lap_count refuses n > 22 (exponential cost)")
    if n < 0:
        raise InvalidParameterError("n must be >= 0")
    if n == 0:
        return 1
    core = core_interval(param)
    lo, hi = core.lo, core.hi
    atol = 1e-13 * max(1.0, hi - lo)
    quad = param.family is Family.QUADRATIC
    cval = param.value
    level = np.array([0.0])
    all_pts = [level]
    for _ in range(n - 1):
        y = level
        if quad:
            rad2 = y - cval
            rad2 = rad2[rad2 >= 0.0]
            r = np.sqrt(rad2)
        else:
            yy = y[y <= 1.0]
            r = (1.0 - yy) / cval
        cand = np.concatenate([r, -r])
        cand = cand[(cand >= lo - atol) & (cand <= hi + atol)]
        if cand.size == 0:
            level = cand
            break
        cand = np.sort(cand)
        keep = np.ones(cand.size, dtype=bool)
        keep[1:] = np.diff(cand) > atol
        level = cand[keep]
        all_pts.append(level)
    pts = np.sort(np.concatenate(all_pts))
    if pts.size:
        keep = np.ones(pts.size, dtype=bool)
        keep[1:] = np.diff(pts) > atol
        pts = pts[keep]
        interior = pts[(pts > lo + atol) & (pts < hi - atol)]
        count = int(interior.size)
    else:
        count = 0
    return 1 + count


def lap_entropy_estimate(param: FamilyParam, n: int) -> float:
    """(1/n) log lap_count(n), the finite-n entropy proxy."""
    if n < 1:
        raise InvalidParameterError("n must be >= 1")
    return math.log(lap_count(param, n)) / n
