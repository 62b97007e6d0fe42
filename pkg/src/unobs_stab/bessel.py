"""Bessel functions of the first kind at integer order.

Only what the rest of the package needs: J_k(r) and its derivative for
integer k (possibly negative), the first positive zero j1 of J_1' and the
first positive zero j0 of J_0, and the local inverse of J_1 on [0, j1].

Evaluation is done by the ascending power series for small arguments and by
Miller's backward recurrence with the standard normalization
J_0 + 2*sum_m J_{2m} = 1 for moderate ones.  Arguments are restricted to
|r| < 50, far beyond anything the simulations produce.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# The alternating series suffers from cancellation once the peak term gets
# large: at r = 8 the peak is ~1e2, keeping the absolute error near 1e-14.
# Beyond that, Miller's recurrence is the accurate route.
_SERIES_MAX_R = 8.0
_MAX_R = 50.0


def _series_orders(r: float, kmax: int) -> np.ndarray:
    """J_0(r)..J_kmax(r) by the ascending series, for 0 < r <= _SERIES_MAX_R."""
    half = 0.5 * r
    k = np.arange(kmax + 1, dtype=float)
    lead = np.empty(kmax + 1)
    lead[0] = 1.0
    for i in range(1, kmax + 1):
        lead[i] = lead[i - 1] * half / i
    term = lead.copy()
    total = lead.copy()
    h2 = half * half
    for m in range(1, 120):
        term *= -h2 / (m * (m + k))
        total += term
        if np.max(np.abs(term)) < 1e-20:
            break
    return total


def _miller_orders(r: float, kmax: int) -> np.ndarray:
    """J_0(r)..J_kmax(r) by backward recurrence, for _SERIES_MAX_R < r < 50."""
    m_start = int(max(kmax, r) + 30 + 2.5 * math.sqrt(max(kmax, r)))
    if m_start % 2 == 1:
        m_start += 1
    out = np.zeros(kmax + 1)
    f_next = 0.0
    f_cur = 1e-30
    even_sum = 0.0
    for m in range(m_start, 0, -1):
        f_prev = (2.0 * m / r) * f_cur - f_next
        f_next = f_cur
        f_cur = f_prev
        idx = m - 1
        if idx <= kmax:
            out[idx] = f_cur
        if idx > 0 and idx % 2 == 0:
            even_sum += f_cur
        if abs(f_cur) > 1e250:
            f_cur *= 1e-250
            f_next *= 1e-250
            out *= 1e-250
            even_sum *= 1e-250
    norm = f_cur + 2.0 * even_sum
    return out / norm


def bessel_j_all(kmax: int, r: float) -> np.ndarray:
    """Vector [J_0(r), ..., J_kmax(r)] for r >= 0."""
    if kmax < 0:
        raise ValueError("bessel_j_all: kmax must be >= 0")
    if not math.isfinite(r) or r < 0.0 or r >= _MAX_R:
        raise ValueError(f"bessel_j_all: need 0 <= r < {_MAX_R}, got r={r}")
    if r == 0.0:
        out = np.zeros(kmax + 1)
        out[0] = 1.0
        return out
    if r <= _SERIES_MAX_R:
        return _series_orders(r, kmax)
    return _miller_orders(r, kmax)


def bessel_j(k: int, r: float) -> float:
    """J_k(r) for integer k (any sign) and |r| < 50.

    Uses J_{-k}(r) = (-1)^k J_k(r) and J_k(-r) = (-1)^k J_k(r) to reduce to
    k >= 0, r >= 0.
    """
    if not math.isfinite(r) or abs(r) >= _MAX_R:
        raise ValueError(f"bessel_j: argument out of range |r| < {_MAX_R}: r={r}")
    k = int(k)
    sign = 1.0
    if k < 0:
        k = -k
        if k % 2:
            sign = -sign
    if r < 0.0:
        r = -r
        if k % 2:
            sign = -sign
    return sign * float(bessel_j_all(k, r)[k])


def bessel_j_prime(k: int, r: float) -> float:
    """d/dr J_k(r), via the recurrence J_k' = (J_{k-1} - J_{k+1}) / 2."""
    return 0.5 * (bessel_j(k - 1, r) - bessel_j(k + 1, r))


@dataclass(frozen=True)
class BesselZeros:
    """First positive zero j1 of J_1' and first positive zero j0 of J_0."""

    j1: float
    j0: float


def _bisect(f, lo: float, hi: float, tol: float = 1e-13) -> float:
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise ValueError("bisection bracket does not change sign")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if flo * fm < 0.0:
            hi = mid
        else:
            lo = mid
            flo = fm
    return 0.5 * (lo + hi)


@lru_cache(maxsize=1)
def find_zeros() -> BesselZeros:
    """Locate j1 and j0 by sign-bracketed bisection to 1e-13.

    Brackets are hard-coded from known sign changes: J_1' changes sign on
    [1.5, 2.0] and J_0 on [2.0, 3.0].
    """
    j1 = _bisect(lambda r: bessel_j_prime(1, r), 1.5, 2.0)
    j0 = _bisect(lambda r: bessel_j(0, r), 2.0, 3.0)
    return BesselZeros(j1=j1, j0=j0)


def inv_j1(y: float, cap: float | None = None) -> float:
    """The unique r in [0, cap] with J_1(r) = y.

    J_1 is strictly increasing on [0, j1], so the inverse is well defined for
    cap <= j1 and 0 <= y <= J_1(cap).  Safeguarded Newton iteration with a
    bisection fallback; accurate to ~1e-13.
    """
    zeros = find_zeros()
    if cap is None:
        cap = zeros.j1
    if not 0.0 < cap <= zeros.j1 + 1e-12:
        raise ValueError(f"inv_j1: cap must lie in (0, j1], got {cap}")
    cap = min(cap, zeros.j1)
    ymax = bessel_j(1, cap)
    if not 0.0 <= y <= ymax + 1e-12:
        raise ValueError(f"inv_j1: y={y} outside [0, J1(cap)] = [0, {ymax}]")
    y = min(y, ymax)
    if y == 0.0:
        return 0.0
    lo, hi = 0.0, cap
    x = min(2.0 * y, cap)  # J_1(r) ~ r/2 near 0
    for _ in range(100):
        fx = bessel_j(1, x) - y
        if fx > 0.0:
            hi = x
        else:
            lo = x
        if abs(fx) < 1e-16 or hi - lo < 1e-15:
            break
        dfx = bessel_j_prime(1, x)
        if dfx > 1e-12:
            x_new = x - fx / dfx
        else:
            x_new = 0.5 * (lo + hi)
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        x = x_new
    return x
