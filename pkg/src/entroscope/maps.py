"""The two map families and their orbit plumbing.

Quadratic family  f_a(x) = x^2 + a   for a in [-2, 1/4],
tent family       T_b(x) = 1 - b|x|  for b in (1, 2].

Both are unimodal on their invariant intervals; every other module sits on
top of the evaluation/orbit routines here.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import (
    DerivativeUndefinedError,
    EscapingPointError,
    InvalidParameterError,
)
from .precision import NATIVE, PrecisionContext, fixed_to_float, to_fixed

__all__ = [
    "Family",
    "FamilyParam",
    "DynInterval",
    "OrbitTrace",
    "quadratic",
    "tent",
    "eval_map",
    "deriv",
    "invariant_interval",
    "core_interval",
    "orbit_with_derivative",
    "MAX_STORED_POINTS",
]

# Orbits longer than this keep only running sums (memory bound for sweeps).
MAX_STORED_POINTS = 10**5


class Family(enum.Enum):
    QUADRATIC = "quadratic"
    TENT = "tent"


@dataclass(frozen=True)
class FamilyParam:
    family: Family
    value: float

    def __post_init__(self):
        v = self.value
        if not math.isfinite(v):
            raise InvalidParameterError("parameter must be finite")
        if self.family is Family.QUADRATIC:
            if not (-2.0 <= v <= 0.25):
                raise InvalidParameterError(
                    f"quadratic parameter a={v} outside [-2, 0.25]"
                )
        else:
            if not (1.0 < v <= 2.0):
                raise InvalidParameterError(
                    f"tent slope b={v} outside (1, 2]"
                )


def quadratic(a: float) -> FamilyParam:
    return FamilyParam(Family.QUADRATIC, float(a))


def tent(b: float) -> FamilyParam:
    return FamilyParam(Family.TENT, float(b))


@dataclass(frozen=True)
class DynInterval:
    lo: float
    hi: float

    def contains(self, x: float, tol: float = 1e-12) -> bool:
        return self.lo - tol <= x <= self.hi + tol

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass
class OrbitTrace:
    """Forward orbit with accumulated log|f'| along it.

    points[j+1] = map(points[j]) exactly as computed.  log_abs_deriv[k] is the
    partial sum of log|f'(x_j)| for j from jstart to jstart+k, where jstart
    skips the initial point when it *is* the turning point (its derivative
    factor is zero and carries no information; the trace then measures the
    derivative along the orbit of the critical value).  Accumulation stops at
    the first later index with |x_j| <= guard, recorded as critical_hit_index.

    For orbits longer than MAX_STORED_POINTS only the leading block of points
    is kept; n_total/final_point/final_log_sum always describe the full orbit.
    """

    points: list
    log_abs_deriv: list
    critical_hit_index: Optional[int]
    n_total: int
    final_point: float
    final_log_sum: Optional[float]


def eval_map(param: FamilyParam, x: float) -> float:
    if param.family is Family.QUADRATIC:
        return x * x + param.value
    return 1.0 - param.value * abs(x)


def deriv(param: FamilyParam, x: float) -> float:
    if param.family is Family.QUADRATIC:
        return 2.0 * x
    if x == 0.0:
        raise DerivativeUndefinedError(
            "tent derivative undefined at turning point x=0"
        )
    return -param.value if x > 0 else param.value


def invariant_interval(param: FamilyParam) -> DynInterval:
    if param.family is Family.QUADRATIC:
        a = param.value
        r = math.sqrt(1.0 - 4.0 * a)
        return DynInterval((-1.0 - r) / 2.0, (1.0 + r) / 2.0)
    b = param.value
    return DynInterval(-1.0 / (b - 1.0), 1.0 / (b - 1.0))


def core_interval(param: FamilyParam) -> DynInterval:
    """Dynamical core [map(0), map^2(0)] — where the interesting orbits live.

    Falls back to the invariant interval when the core does not contain the
    turning point (quadratic a > 0, where the core is a monotone funnel).
    """
    v = eval_map(param, 0.0)
    w = eval_map(param, v)
    lo, hi = min(v, w), max(v, w)
    if lo <= 0.0 <= hi:
        return DynInterval(lo, hi)
    return invariant_interval(param)


def orbit_with_derivative(
    param: FamilyParam,
    x0: float,
    n: int,
    guard: Optional[float] = None,
    ctx: PrecisionContext = NATIVE,
) -> OrbitTrace:
    if n < 0:
        raise InvalidParameterError("orbit length n must be >= 0")
    if guard is None:
        guard = ctx.guard
    if guard < 0:
        raise InvalidParameterError("guard must be >= 0")
    iv = invariant_interval(param)
    if not iv.contains(x0):
        raise EscapingPointError(
            f"initial point {x0} escapes the invariant interval "
            f"[{iv.lo}, {iv.hi}]"
        )
    if ctx.native:
        return _orbit_native(param, float(x0), n, guard)
    return _orbit_fixed(param, x0, n, ctx)


def _orbit_native(param: FamilyParam, x0: float, n: int, guard: float) -> OrbitTrace:
    quad = param.family is Family.QUADRATIC
    c = param.value
    logb = math.log(param.value) if not quad else 0.0
    points = [x0]
    sums: list = []
    hit: Optional[int] = None
    jstart = 1 if abs(x0) <= guard else 0
    acc = 0.0
    accumulating = True
    final_sum: Optional[float] = None
    keep = MAX_STORED_POINTS
    x = x0
    for j in range(n + 1):
        if j >= jstart and accumulating:
            ax = abs(x)
            if ax <= guard:
                hit = j
                accumulating = False
            else:
                acc += math.log(2.0 * ax) if quad else logb
                if len(sums) < keep:
                    sums.append(acc)
                final_sum = acc
        if j < n:
            x = x * x + c if quad else 1.0 - c * abs(x)
            if len(points) <= keep:
                points.append(x)
    return OrbitTrace(
        points=points,
        log_abs_deriv=sums,
        critical_hit_index=hit,
        n_total=n,
        final_point=x,
        final_log_sum=final_sum,
    )


def _orbit_fixed(param: FamilyParam, x0, n: int, ctx: PrecisionContext) -> OrbitTrace:
    fb = ctx.bits
    one = 1 << fb
    guard_f = ctx.guard_fixed
    quad = param.family is Family.QUADRATIC
    c = to_fixed(param.value, fb)
    x = to_fixed(x0, fb)
    points = [fixed_to_float(x, fb)]
    sums: list = []
    hit: Optional[int] = None
    jstart = 1 if abs(x) <= guard_f else 0
    acc = 0.0
    accumulating = True
    ln2 = math.log(2.0)
    logb = math.log(param.value)
    final_sum: Optional[float] = None
    keep = MAX_STORED_POINTS
    for j in range(n + 1):
        if j >= jstart and accumulating:
            ax = abs(x)
            if ax <= guard_f:
                hit = j
                accumulating = False
            else:
                if quad:
                    # log|2x| from the integer directly (no float under/overflow)
                    acc += math.log(2 * ax) - fb * ln2
                else:
                    acc += logb
                if len(sums) < keep:
                    sums.append(acc)
                final_sum = acc
        if j < n:
            if quad:
                x = ((x * x) >> fb) + c
            else:
                x = one - ((c * abs(x)) >> fb)
            if len(points) <= keep:
                points.append(fixed_to_float(x, fb))
    return OrbitTrace(
        points=points,
        log_abs_deriv=sums,
        critical_hit_index=hit,
        n_total=n,
        final_point=fixed_to_float(x, fb),
        final_log_sum=final_sum,
    )
