"""Statistics along the quadratic critical orbit.

xi_j(a) = f_a^j(a) with the parameter derivative propagated by
xi'_{j+1} = 1 + 2 xi_j xi'_j, finite-time Lyapunov exponents
lambda_j = (1/j) log|(f_a^j)'(a)|, the transversality sum
Q_j = xi'_j / (f_a^j)'(a) = sum_k 1/(f_a^k)'(a), and the weak-regularity
statistic averaging log|f'| over close returns of the critical orbit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import CriticalHitError, InvalidParameterError
from .precision import NATIVE, PrecisionContext, fixed_to_float, to_fixed

__all__ = [
    "CriticalOrbitStats",
    "critical_stats",
    "transversality_Q",
    "wr_statistic",
    "lyapunov_summary",
    "LyapunovSummary",
]


@dataclass(frozen=True)
class CriticalOrbitStats:
    """Sequences indexed 0..n; lambda_n and q_n are NaN where undefined
    (index 0, and everything past a critical hit)."""

    xi: np.ndarray
    xi_prime: np.ndarray
    lambda_n: np.ndarray
    q_n: np.ndarray
    critical_hit: Optional[int]


@dataclass(frozen=True)
class LyapunovSummary:
    """min/max of lambda_j over the window [n/2, n]: proxies for the lower
    and upper exponents.  The pointwise exponent is only declared converged
    when their gap is below 0.01."""

    lam_low: float
    lam_high: float
    gap: float
    converged: bool
    n: int

    @property
    def value(self) -> float:
        return 0.5 * (self.lam_low + self.lam_high)


def _validate_a(a: float) -> float:
    a = float(a)
    if not (-2.0 <= a <= 0.25):
        raise InvalidParameterError(f"quadratic parameter a={a} outside [-2, 0.25]")
    return a


def critical_stats(
    a: float, n: int, ctx: PrecisionContext = NATIVE
) -> CriticalOrbitStats:
    a = _validate_a(a)
    if n < 1:
        raise InvalidParameterError("n must be >= 1")
    guard = ctx.guard
    xi = np.empty(n + 1)
    xip = np.empty(n + 1)
    lam = np.full(n + 1, np.nan)
    q = np.full(n + 1, np.nan)
    hit: Optional[int] = None

    fb = ctx.bits
    afix = to_fixed(a, fb) if not ctx.native else 0
    xfix = afix

    xp = 1.0
    log_deriv = 0.0  # log|(f^j)'(a)|
    sign_deriv = 1
    qsum = 1.0  # k=0 term
    q[0] = 1.0
    xi[0] = a
    xip[0] = 1.0
    alive = True
    for j in range(n):
        xj = float(xi[j])
        if alive and abs(xj) <= guard:
            hit = j
            alive = False
        if alive:
            log_deriv += math.log(2.0 * abs(xj))
            sign_deriv *= 1 if xj > 0 else -1
            lam[j + 1] = log_deriv / (j + 1)
            qsum += sign_deriv * math.exp(-log_deriv) if log_deriv < 700 else 0.0
            q[j + 1] = qsum
        # advance orbit and parameter derivative (xi' may overflow to inf for
        # long orbits; that is fine, its consistency checks stop at k ~ 30)
        try:
            xp = 1.0 + 2.0 * xj * xp
        except OverflowError:
            xp = math.inf
        if ctx.native:
            xi[j + 1] = xj * xj + a
        else:
            xfix = ((xfix * xfix) >> fb) + afix
            xi[j + 1] = fixed_to_float(xfix, fb)
        xip[j + 1] = xp
    # a hit can also occur at the final point
    if alive and abs(xi[n]) <= guard:
        hit = n
    return CriticalOrbitStats(xi, xip, lam, q, hit)


def transversality_Q(a: float, n: int) -> float:
    """Q_n(a) = xi'_n/(f^n)'(a) = sum_{k<=n} 1/(f^k)'(a).

    Both forms are computed; they must agree to relative 1e-8 whenever the
    ratio form is finite (internal consistency check).
    """
    a = _validate_a(a)
    if n < 0:
        raise InvalidParameterError("n must be >= 0")
    guard = NATIVE.guard
    x = a
    xp = 1.0
    qsum = 1.0
    log_deriv = 0.0
    sign_deriv = 1
    for k in range(1, n + 1):
        if abs(x) <= guard:
            raise CriticalHitError(
                f"derivative along orbit vanishes (critical hit at step {k - 1})"
            )
        log_deriv += math.log(2.0 * abs(x))
        sign_deriv *= 1 if x > 0 else -1
        xp = 1.0 + 2.0 * x * xp
        x = x * x + a
        qsum += sign_deriv * math.exp(-log_deriv) if log_deriv < 700 else 0.0
    if n >= 1 and log_deriv < 700:
        ratio = xp * sign_deriv * math.exp(-log_deriv)
        rel = abs(ratio - qsum) / max(abs(qsum), 1e-30)
        if math.isfinite(ratio) and rel > 1e-8:
            raise InvalidParameterError(
                f"Q ratio/sum identity violated (rel {rel:.2e}); "
                "orbit data numerically unreliable"
            )
    return qsum


def wr_statistic(a: float, delta: float, n: int) -> float:
    """(1/n) sum of log|f'(f^j(0))| over 1<=j<=n with |f^j(0)| <= delta.

    Returns -inf when the orbit hits the turning point exactly
    (superattracting parameter).
    """
    a = _validate_a(a)
    guard = NATIVE.guard
    if delta <= guard:
        raise InvalidParameterError(f"delta must exceed the guard {guard}")
    if n < 1:
        raise InvalidParameterError("n must be >= 1")
    x = a  # f^1(0)
    acc = 0.0
    for _ in range(n):
        ax = abs(x)
        if ax <= guard:
            return -math.inf
        if ax <= delta:
            acc += math.log(2.0 * ax)
        x = x * x + a
    return acc / n


def lyapunov_summary(a: float, n: int, ctx: PrecisionContext = NATIVE) -> LyapunovSummary:
    """Lower/upper finite-time Lyapunov proxies over the window [n/2, n]."""
    stats = critical_stats(a, n, ctx)
    lo_idx = max(1, n // 2)
    window = stats.lambda_n[lo_idx : n + 1]
    window = window[np.isfinite(window)]
    if window.size == 0:
        raise CriticalHitError(
            "no finite Lyapunov data in the averaging window (critical hit)"
        )
    lam_low = float(window.min())
    lam_high = float(window.max())
    gap = lam_high - lam_low
    return LyapunovSummary(lam_low, lam_high, gap, gap < 0.01, n)
