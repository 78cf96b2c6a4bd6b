"""Pure-Python versions of the hot kernels.

These define the reference semantics; ``_ckernels`` must return identical
integers from :func:`hypsum_fixed` and agree to rounding elsewhere.
"""
from __future__ import annotations

import math

import numpy as np

NAME = "python"


def _log2_add(a: float, b: float) -> float:
    # log2(2**a + 2**b)
    if a < b:
        a, b = b, a
    if b == -math.inf:
        return a
    return a + math.log2(1.0 + 2.0 ** (b - a))


def hypsum_fixed(anum, aden, bnum, bden, znum, zden, prec, kmin, maxterms):
    """Sum a hypergeometric series in fixed point with scale ``2**prec``.

    Parameters are exact rationals ``anum[i]/aden[i]``, ``bnum[i]/bden[i]``
    and ``znum/zden``; all denominators must be positive.  Each term is
    obtained from the previous one by an exact rational factor followed by
    truncation toward zero.  Summation stops at the first zero term with
    index >= ``kmin`` (the caller guarantees that beyond ``kmin`` the term
    ratio stays below 1/2), or after ``maxterms`` terms.

    Returns ``(total, terms, err_log2, converged)``; ``abs(total - exact)``
    is below ``2**err_log2`` fixed-point units, tail included.
    """
    ca = 1
    for d in aden:
        ca *= d
    cb = 1
    for d in bden:
        cb *= d
    num0 = znum * cb
    den0 = zden * ca
    pairs_a = list(zip(anum, aden))
    pairs_b = list(zip(bnum, bden))

    t = 1 << prec
    total = t
    err_term = -math.inf  # log2 bound on |t_k - exact t_k|
    err_sum = -math.inf
    k = 0
    converged = False
    while k < maxterms:
        num = num0
        for p, q in pairs_a:
            num *= p + k * q
        den = den0 * (k + 1)
        for p, q in pairs_b:
            den *= p + k * q
        if num == 0:
            t = 0
            k += 1
            converged = True
            break
        if den < 0:
            num = -num
            den = -den
        x = t * num
        t = -((-x) // den) if x < 0 else x // den
        total += t
        k += 1
        lr = math.log2(abs(num)) - math.log2(den)
        err_term = _log2_add(err_term + lr, 0.0)
        err_sum = _log2_add(err_sum, err_term)
        if t == 0 and k >= kmin:
            converged = True
            break
    # tail after the last (zero) term is bounded by 2*|t_k - exact t_k|
    err = _log2_add(err_sum, err_term + 1.0) + 1e-9
    return total, k + 1, err, converged


def spline_eval(x, y, y2, q):
    """Evaluate a cubic spline given knot values and second derivatives.

    ``x`` must be strictly increasing and every ``q`` inside ``[x[0], x[-1]]``.
    """
    q = np.asarray(q, dtype=float)
    i = np.searchsorted(x, q, side="right") - 1
    np.clip(i, 0, len(x) - 2, out=i)
    x0 = x[i]
    h = x[i + 1] - x0
    b = (q - x0) / h
    a = 1.0 - b
    return a * y[i] + b * y[i + 1] + ((a * a * a - a) * y2[i] + (b * b * b - b) * y2[i + 1]) * (h * h) / 6.0


def stencil_apply(u, a):
    """Periodic symmetric stencil: a[0] u_i + sum_j a[j] (u_{i+j} + u_{i-j})."""
    u = np.asarray(u, dtype=float)
    out = a[0] * u
    for j in range(1, len(a)):
        out += a[j] * (np.roll(u, -j) + np.roll(u, j))
    return out
