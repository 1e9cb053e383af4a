"""Local regularity experiments for the entropy function a -> h(a).

The local Hölder exponent is estimated by regressing log|h(a±t) - h(a)| on
log t over a geometric t-grid and compared with the theoretical quotient
h(a)/lambda(a).  Near saddle-node (parabolic) window boundaries the entropy
is instead super-flat, |dh| ~ exp(-c/sqrt(t)); the flatness fit extracts the
exponent kappa from log(-log|dh|) ~ log c + kappa*log(1/t).  At the cascade
accumulation point the exponent follows from the gap table: slope of
log h(a_m) against log(a_m - a_F).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .critical_orbit import lyapunov_summary
from .entropy import LOG2, quad_entropy
from .errors import (
    InsufficientPrecisionError,
    InvalidParameterError,
    NotApplicableError,
)
from .precision import NATIVE, PrecisionContext, fixed_log, mp_guard
from .renorm import CascadeTable, detect_window
from .tent_dynamics import periodic_tent_slopes, refine_periodic_slope

__all__ = [
    "Side",
    "HolderEstimate",
    "TwoSidedEstimate",
    "FlatnessFit",
    "AccumulationExponent",
    "theoretical_exponent",
    "estimate_local_exponent",
    "parabolic_flatness_fit",
    "flatness_fit_from_points",
    "holder_at_aF",
    "uniform_holder_fit",
]


class Side(enum.Enum):
    LEFT = "left"
    RIGHT = "right"
    BOTH = "both"


@dataclass(frozen=True)
class HolderEstimate:
    a: float
    side: Side
    slope: float
    stderr: float
    t_range: tuple
    points_used: int
    theoretical: Optional[float]
    flat: bool
    unreliable: bool
    clipped: bool = False


@dataclass(frozen=True)
class TwoSidedEstimate:
    left: HolderEstimate
    right: HolderEstimate

    @property
    def both_sides_active(self) -> bool:
        """Neither side flat: the one-point-fibre heuristic for h^-1(h(a))."""
        return not (self.left.flat or self.right.flat)


@dataclass(frozen=True)
class FlatnessFit:
    a: float
    kappa: float
    c: float
    residual: float
    points_used: int
    t_range: tuple
    kappa_log_corrected: Optional[float] = None


@dataclass(frozen=True)
class AccumulationExponent:
    slope: float
    stderr: float
    reference: float
    flagged: bool

    def __float__(self):
        return self.slope


def _ols(x: np.ndarray, y: np.ndarray):
    n = x.size
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    slope = float(((x - xm) * (y - ym)).sum()) / sxx
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    rss = float((resid**2).sum())
    stderr = math.sqrt(rss / max(n - 2, 1) / sxx) if n > 2 else math.inf
    rms = math.sqrt(rss / n)
    return slope, intercept, stderr, rms


def theoretical_exponent(
    a: float, n: int = 4000, ctx: PrecisionContext = NATIVE
) -> float:
    """h(a)/lambda(a) with lambda from the finite-time window proxies.

    Refuses when the lower/upper proxies have not converged (gap >= 0.01) or
    the exponent is too small to be meaningful.
    """
    lam = lyapunov_summary(a, n, ctx)
    if not lam.converged:
        raise NotApplicableError(
            f"lambda(a) not resolved: window gap {lam.gap:.4f} >= 0.01 "
            "(the pointwise exponent need not exist)"
        )
    if lam.value <= 0.05:
        raise NotApplicableError(
            f"lambda(a) = {lam.value:.4f} <= 0.05; exponent quotient undefined"
        )
    h = float(quad_entropy(a, ctx=ctx).value)
    return h / lam.value


def _abs_log(delta) -> float:
    """log|delta| for float or mpf deltas (tiny extended-precision values)."""
    if isinstance(delta, float):
        return math.log(abs(delta))
    with mp_guard(64) as mp:
        return float(mp.log(abs(delta)))


def _sub(x, y, ctx: PrecisionContext):
    """x - y at the context's precision (mpf ops round to the active
    working precision, which defaults to 53 bits)."""
    if ctx.native:
        return x - y
    with mp_guard(ctx.bits + 16):
        return x - y


def _one_side(
    a: float,
    sgn: int,
    t0: float,
    ratio: float,
    count: int,
    ctx: PrecisionContext,
    N: Optional[int],
) -> HolderEstimate:
    side = Side.RIGHT if sgn > 0 else Side.LEFT
    h0 = quad_entropy(a, N=N, ctx=ctx)
    ts = []
    clipped = False
    t = t0
    for _ in range(count):
        probe = a + sgn * t
        if -2.0 <= probe <= 0.25:
            ts.append(t)
        else:
            clipped = True
        t *= ratio
    xs, ys, signs = [], [], []
    for t in ts:
        hk = quad_entropy(a + sgn * t, N=N, ctx=ctx)
        delta = _sub(hk.value, h0.value, ctx)
        thresh = 10.0 * (float(hk.error_radius) + float(h0.error_radius))
        if abs(delta) > thresh:
            xs.append(math.log(t))
            ys.append(_abs_log(delta))
            signs.append(1 if delta > 0 else -1)
    try:
        theo = theoretical_exponent(a, ctx=ctx)
    except Exception:
        theo = None
    if not xs:
        return HolderEstimate(
            a, side, math.nan, math.inf, (min(ts, default=0), max(ts, default=0)),
            0, theo, flat=True, unreliable=False, clipped=clipped,
        )
    x = np.array(xs)
    y = np.array(ys)
    slope, _c, stderr, _rms = _ols(x, y) if x.size >= 2 else (math.nan, 0, math.inf, 0)
    monotone = all(s == signs[0] for s in signs)
    unreliable = x.size < 5 or not monotone
    return HolderEstimate(
        a, side, slope, stderr, (float(np.exp(x.min())), float(np.exp(x.max()))),
        int(x.size), theo, flat=False, unreliable=unreliable, clipped=clipped,
    )


def estimate_local_exponent(
    a: float,
    side: Side = Side.BOTH,
    t0: float = 1e-3,
    ratio: float = 0.5,
    count: int = 20,
    ctx: PrecisionContext = NATIVE,
    N: Optional[int] = None,
):
    """Regression estimate of the local Hölder exponent of h at a.

    Only increments exceeding ten times the entropy error radius enter the
    regression; a side with no such increments is reported flat.
    """
    if not (-2.0 <= a <= 0.25):
        raise InvalidParameterError(f"a={a} outside [-2, 0.25]")
    if t0 > 1e-2:
        raise InvalidParameterError("t0 must be <= 1e-2")
    if not (0.0 < ratio < 1.0):
        raise InvalidParameterError("ratio must lie in (0, 1)")
    if count < 8:
        raise InvalidParameterError("count must be >= 8")
    if side is Side.BOTH:
        return TwoSidedEstimate(
            left=_one_side(a, -1, t0, ratio, count, ctx, N),
            right=_one_side(a, +1, t0, ratio, count, ctx, N),
        )
    return _one_side(a, +1 if side is Side.RIGHT else -1, t0, ratio, count, ctx, N)


# ---------------------------------------------------------------------------
# parabolic flatness
# ---------------------------------------------------------------------------


def flatness_fit_from_points(
    a: float,
    ts: Sequence[float],
    deltas: Sequence,
    log_correction: bool = False,
) -> FlatnessFit:
    """Fit log(-log|dh|) = log c + kappa log(1/t) on given (t, dh) pairs."""
    xs, ys = [], []
    for t, d in zip(ts, deltas):
        if d == 0:
            continue
        ld = _abs_log(d)
        if ld >= 0.0:
            continue
        xs.append(math.log(1.0 / t))
        ys.append(math.log(-ld))
    if len(xs) < 6:
        raise InsufficientPrecisionError(
            f"insufficient signal: only {len(xs)} usable flatness points"
        )
    x = np.array(xs)
    y = np.array(ys)
    if (x.max() - x.min()) < 1.5 * math.log(10.0):
        raise InsufficientPrecisionError(
            "flatness points span fewer than 1.5 decades of t"
        )
    kappa, logc, _se, rms = _ols(x, y)
    kappa_corr = None
    if log_correction:
        # model -log|dh| = c t^-kappa / |log t|
        y2 = y + np.log(x)
        kappa_corr, _c2, _se2, _r2 = _ols(x, y2)
    return FlatnessFit(
        a, kappa, math.exp(logc), rms, int(x.size),
        (float(np.exp(-x.max())), float(np.exp(-x.min()))), kappa_corr,
    )


def parabolic_flatness_fit(
    a: float,
    side: str = "auto",
    t_grid: Optional[Sequence[float]] = None,
    ctx: Optional[PrecisionContext] = None,
    log_correction: bool = False,
) -> FlatnessFit:
    """Super-flatness exponent at a saddle-node window boundary.

    The reference entropy is the window's exact value log(periodic tent
    slope), refined to working precision, so the measured increments stay
    meaningful down to exp(-hundreds).  Requires an extended context.
    """
    if ctx is None or ctx.native:
        raise InvalidParameterError(
            "parabolic flatness needs an extended precision context"
        )
    probe = max(a - 1e-7, -2.0)
    w = detect_window(probe, max_period=12)
    if w is None or abs(w.interval[1] - a) > 1e-5:
        raise NotApplicableError(
            f"a={a} is not (near) a saddle-node window boundary"
        )
    edge = w.interval[1]
    # window reference entropy at full precision: log of the matching
    # periodic tent slope for the window's primitive period
    p_prim = w.period >> w.feig_depth
    h_c = float(quad_entropy(w.center).value)
    b_seed = math.exp(h_c * (1 << w.feig_depth))
    slopes = periodic_tent_slopes(
        p_prim, max(1.0 + 1e-9, b_seed - 1e-3), min(2.0, b_seed + 1e-3)
    )
    if not slopes:
        raise NotApplicableError("window tent slope not found for reference")
    b_fix = refine_periodic_slope(
        min(slopes, key=lambda s: abs(s - b_seed)), p_prim, ctx
    )
    with mp_guard(ctx.bits + 16):
        h_ref = fixed_log(b_fix, ctx.bits, ctx.bits) / (1 << w.feig_depth)

    sides = [+1, -1] if side == "auto" else [+1 if side == "right" else -1]
    if t_grid is None:
        t_grid = [3e-3 * 0.52**k for k in range(22)]
    last_err: Optional[Exception] = None
    for sgn in sides:
        ts, deltas = [], []
        for t in t_grid:
            probe_a = edge + sgn * t
            if not (-2.0 <= probe_a <= 0.25):
                continue
            res = quad_entropy(probe_a, ctx=ctx)
            delta = _sub(res.value, h_ref, ctx)
            if abs(delta) <= 30 * res.error_radius:
                break
            ts.append(t)
            deltas.append(delta)
        try:
            return flatness_fit_from_points(edge, ts, deltas, log_correction)
        except InsufficientPrecisionError as exc:
            last_err = exc
            continue
    raise last_err if last_err else NotApplicableError("no flatness signal")


# ---------------------------------------------------------------------------
# exponent at the cascade accumulation
# ---------------------------------------------------------------------------


def holder_at_aF(table: CascadeTable) -> AccumulationExponent:
    """Slope of log h(a_m) vs log(a_m - a_F) over the cascade table.

    h(a_m) = log2/2^m by construction; the reference value is
    log 2 / log(delta* estimate).
    """
    if table.depth < 5:
        raise InvalidParameterError("need a cascade table of depth >= 5")
    xs, ys = [], []
    for m in range(1, table.depth + 1):
        dist = table.a_m[m] - table.a_F
        if dist <= 0:
            continue
        xs.append(math.log(dist))
        ys.append(math.log(LOG2 / (1 << m)))
    x = np.array(xs)
    y = np.array(ys)
    slope, _c, stderr, _rms = _ols(x, y)
    ref = LOG2 / math.log(table.delta_star)
    return AccumulationExponent(slope, stderr, ref, flagged=stderr > 0.01)


# ---------------------------------------------------------------------------
# uniform envelope fit
# ---------------------------------------------------------------------------


def _hinge_obj(c: float, beta: float, x: np.ndarray, y: np.ndarray) -> float:
    r = y - c - beta * x
    r = np.maximum(r, 0.0)
    return float((r**2).sum())


def _fit_c(beta: float, x: np.ndarray, y: np.ndarray) -> float:
    # one-dimensional convex minimization over the intercept
    lo = float((y - beta * x).min()) - 1.0
    hi = float((y - beta * x).max()) + 1.0
    for _ in range(80):
        m1 = lo + (hi - lo) * 0.382
        m2 = lo + (hi - lo) * 0.618
        if _hinge_obj(m1, beta, x, y) < _hinge_obj(m2, beta, x, y):
            hi = m2
        else:
            lo = m1
    return 0.5 * (lo + hi)


def uniform_holder_fit(
    lo: float,
    hi: float,
    grid: int,
    pair_budget: int = 4000,
    seed: int = 0,
    ctx: PrecisionContext = NATIVE,
) -> tuple:
    """One-sided envelope fit (C, beta) with |dh| <= C |da|^beta over sampled
    parameter pairs.  Flat pairs (increment below the noise floor) never bind
    the envelope.
    """
    if not (-2.0 <= lo < hi <= 0.25):
        raise InvalidParameterError("[lo, hi] must sit inside [-2, 0.25]")
    if grid < 100:
        raise InvalidParameterError("grid must be >= 100")
    a_grid = np.linspace(lo, hi, grid)
    hs = np.empty(grid)
    errs = np.empty(grid)
    for i, a in enumerate(a_grid):
        r = quad_entropy(float(a), ctx=ctx)
        hs[i] = float(r.value)
        errs[i] = float(r.error_radius)
    rng = np.random.default_rng(seed)
    pairs = [(i, i + 1) for i in range(grid - 1)]
    extra = max(0, pair_budget - len(pairs))
    if extra:
        ii = rng.integers(0, grid, size=extra)
        jj = rng.integers(0, grid, size=extra)
        pairs += [(int(i), int(j)) for i, j in zip(ii, jj) if i != j]
    xs, ys = [], []
    for i, j in pairs:
        dh = abs(hs[i] - hs[j])
        if dh <= 10.0 * (errs[i] + errs[j]):
            continue
        xs.append(math.log(abs(a_grid[i] - a_grid[j])))
        ys.append(math.log(dh))
    if len(xs) < 10:
        raise InsufficientPrecisionError("too few resolvable pairs for a fit")
    x = np.array(xs)
    y = np.array(ys)
    # golden-section over beta of the hinge loss (jointly convex)
    b_lo, b_hi = 0.05, 1.5
    for _ in range(60):
        m1 = b_lo + (b_hi - b_lo) * 0.382
        m2 = b_lo + (b_hi - b_lo) * 0.618
        f1 = _hinge_obj(_fit_c(m1, x, y), m1, x, y)
        f2 = _hinge_obj(_fit_c(m2, x, y), m2, x, y)
        if f1 < f2:
            b_hi = m2
        else:
            b_lo = m1
    beta_fit = 0.5 * (b_lo + b_hi)
    c_fit = _fit_c(beta_fit, x, y)
    # largest beta keeping the bound valid for every sampled pair at this C
    ratios = (y - c_fit) / x  # x < 0 for |da| < 1
    beta_env = float(np.minimum.reduce(ratios)) if ratios.size else beta_fit
    beta = max(0.0, min(beta_fit, beta_env))
    return math.exp(c_fit), beta
