"""Reference multipliers by adaptive quadrature of the defining integral.

This module does not touch the hypergeometric code.  The n-dimensional
integral over the delta-ball is reduced to one radial integral:

    n=1:  c * int_0^delta 2 (cos(r s) - 1) s^-beta ds
    n=2:  c * 2 pi int_0^delta (J0(r s) - 1) s^(1-beta) ds
    n=3:  c * 4 pi int_0^delta (sin(r s)/(r s) - 1) s^(2-beta) ds

which is integrated panel by panel (one panel per half period of the
oscillation, geometric panels toward the integrable singularity at s=0)
with a 7/15-point Gauss-Kronrod pair and bisection where needed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernel import KernelParams, scaling_constant

__all__ = [
    "QuadratureResult",
    "QuadratureError",
    "multiplier_quadrature",
    "bessel_j0",
    "j0_minus_one",
    "gauss_kronrod_15",
]


class QuadratureError(ArithmeticError):
    pass


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    est_error: float
    evaluations: int


# 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1]
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod nodes (+-xgk[1], +-xgk[3], +-xgk[5], 0)
GAUSS_WEIGHTS[[1, 3, 5]] = _WG[:3]
GAUSS_WEIGHTS[[13, 11, 9]] = _WG[:3]
GAUSS_WEIGHTS[7] = _WG[3]


def gauss_kronrod_15(f, a, b):
    """Panel sums for arrays of intervals ``[a, b]``.

    Returns ``(kronrod, error_estimate)`` using the QUADPACK heuristic.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = mid[..., None] + half[..., None] * NODES
    fx = f(x)
    k = half * (fx @ KRONROD_WEIGHTS)
    g = half * (fx @ GAUSS_WEIGHTS)
    mean = k / np.where(half != 0, 2 * half, 1.0)
    resasc = np.abs(half) * (np.abs(fx - mean[..., None]) @ KRONROD_WEIGHTS)
    resabs = np.abs(half) * (np.abs(fx) @ KRONROD_WEIGHTS)
    err = np.abs(k - g)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = np.where(
            (resasc != 0) & (err != 0),
            resasc * np.minimum(1.0, (200.0 * err / np.where(resasc != 0, resasc, 1.0)) ** 1.5),
            err,
        )
    floor = 50.0 * np.finfo(float).eps * resabs
    return k, np.maximum(scaled, floor)


# --- Bessel J0 -------------------------------------------------------------

_TRAP_N = 48
_TRAP_THETA = (np.arange(_TRAP_N) + 0.5) * np.pi / _TRAP_N


def _j0m1_series(x):
    q = -0.25 * x * x
    term = q.copy()
    total = term.copy()
    for k in range(2, 30):
        term = term * q / (k * k)
        total += term
    return total


def _j0_trapezoid(x):
    # J0(x) = (1/pi) int_0^pi cos(x sin t) dt; the integrand is smooth and
    # pi-periodic, so the midpoint rule converges geometrically
    return np.cos(x[..., None] * np.sin(_TRAP_THETA)).mean(axis=-1)


def _j0_hankel(x):
    # J0 = sqrt(2/(pi x)) (P cos chi + S sin chi), chi = x - pi/4, with
    # b_k = prod_{j<=k} (2j-1)^2 / (k! (8x)^k), P = sum (-1)^m b_2m, S = sum (-1)^m b_(2m+1)
    inv8x = 1.0 / (8.0 * x)
    p = np.ones_like(x)
    s = np.zeros_like(x)
    term = np.ones_like(x)
    for k in range(1, 40):
        term = term * ((2 * k - 1) ** 2) * inv8x / k
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2:
            s += sign * term
        else:
            p += sign * term
        if np.all(term < 1e-18):
            break
    chi = x - 0.25 * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(chi) + s * np.sin(chi))


def j0_minus_one(x):
    """J0(x) - 1 without cancellation for small x."""
    x = np.abs(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    small = x <= 5.0
    mid = (x > 5.0) & (x <= 25.0)
    large = x > 25.0
    if small.any():
        out[small] = _j0m1_series(x[small])
    if mid.any():
        out[mid] = _j0_trapezoid(x[mid]) - 1.0
    if large.any():
        out[large] = _j0_hankel(x[large]) - 1.0
    return out


def bessel_j0(x):
    x = np.abs(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    small = x <= 5.0
    mid = (x > 5.0) & (x <= 25.0)
    large = x > 25.0
    if small.any():
        out[small] = 1.0 + _j0m1_series(x[small])
    if mid.any():
        out[mid] = _j0_trapezoid(x[mid])
    if large.any():
        out[large] = _j0_hankel(x[large])
    return out


def _sinc_minus_one(x):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 0.5
    xs = x[small]
    q = -xs * xs
    term = q / 6.0
    total = term.copy()
    for k in range(2, 12):
        term = term * q / ((2 * k) * (2 * k + 1))
        total += term
    out[small] = total
    xl = x[~small]
    out[~small] = np.sin(xl) / xl - 1.0
    return out


def _radial_integrand(p: KernelParams, r: float):
    n, beta = p.n, p.beta
    if n == 1:
        def f(s):
            h = np.sin(0.5 * r * s)
            return -4.0 * h * h * s ** (-beta)
        lead = -1.0 * r * r  # f(s) ~ lead * s^(2-beta)
    elif n == 2:
        def f(s):
            return 2 * np.pi * j0_minus_one(r * s) * s ** (1 - beta)
        lead = -0.5 * np.pi * r * r
    elif n == 3:
        def f(s):
            return 4 * np.pi * _sinc_minus_one(r * s) * s ** (2 - beta)
        lead = -(2.0 / 3.0) * np.pi * r * r
    else:
        raise ValueError("dimension must be 1, 2 or 3")
    return f, lead


def multiplier_quadrature(p: KernelParams, r: float, tol: float = 1e-13,
                          panels_per_period: int = 1, max_panels: int = 200_000) -> QuadratureResult:
    """Multiplier by quadrature of its integral form (requires beta < n+2).

    ``tol`` is relative to the result; ``est_error`` is absolute.
    """
    if not p.integrable:
        raise ValueError("the integral form needs beta < n + 2")
    if tol < 1e-14:
        raise ValueError("tol must be at least 1e-14")
    r = float(r)
    if r < 0:
        raise ValueError("radius must be non-negative")
    if r == 0.0:
        return QuadratureResult(0.0, 0.0, 0)
    delta = p.delta
    c = scaling_constant(p)
    f, lead = _radial_integrand(p, r)

    # one panel per half period of the oscillation, split further on request
    half_period = math.pi / r
    count = max(1, math.ceil(delta / half_period))
    edges = np.linspace(0.0, delta, count * panels_per_period + 1)
    first = edges[1]
    # geometric panels toward s = 0; the leftover [0, eps] uses the leading term
    depth = max(8, int(math.ceil(math.log2(max(first * r, 1.0) / 1e-9))) + 8)
    geo = first * 2.0 ** -np.arange(depth + 1)
    eps = geo[-1]
    left = np.concatenate([geo[::-1][:-1], edges[1:-1]])
    right = np.concatenate([geo[::-1][1:], edges[2:]])
    power = p.n + 2 - p.beta
    head = lead * eps**power / power
    if left.size > max_panels:
        raise QuadratureError(f"r={r} needs {left.size} panels, more than max_panels={max_panels}")

    evaluations = 0
    done_val = 0.0
    done_err = 0.0
    while True:
        vals, errs = gauss_kronrod_15(f, left, right)
        evaluations += 15 * left.size
        total = done_val + vals.sum() + head
        err_total = done_err + errs.sum() + abs(head) * (r * eps) ** 2
        if err_total <= tol * abs(total):
            return QuadratureResult(c * total, abs(c) * err_total, evaluations)
        budget = tol * abs(total) / (left.size + 1)
        bad = errs > budget
        if not bad.any():
            bad = errs >= errs.max()
        done_val += vals[~bad].sum()
        done_err += errs[~bad].sum()
        mids = 0.5 * (left[bad] + right[bad])
        left, right = np.concatenate([left[bad], mids]), np.concatenate([mids, right[bad]])
        if left.size > max_panels or np.any(right - left <= 4 * np.finfo(float).eps * np.abs(right)):
            raise QuadratureError(
                f"adaptive refinement stalled at r={r} (error {err_total:.3e}, tol {tol:.1e})"
            )
