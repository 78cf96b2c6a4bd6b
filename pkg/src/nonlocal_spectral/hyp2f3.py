"""Generalized hypergeometric 2F3 for real parameters and real argument.

The Taylor series is summed directly.  For large negative ``z`` the terms
alternate and grow to about ``exp(2 sqrt|z|)`` before decaying, so the sum is
carried out in fixed-point integer arithmetic with enough guard bits to
absorb the cancellation.  All parameters (and ``z``) are converted to exact
rationals first; binary floats are dyadic rationals, so nothing is lost.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational, Real

from ._backend import kernels
from .kernel import KernelParams

__all__ = [
    "Hyp2F3Params",
    "EvalReport",
    "Method",
    "HypergeometricConvergenceError",
    "eval_2f3",
    "hypsum",
    "required_precision",
    "BASE_DIGITS",
]

BASE_DIGITS = 16
DEFAULT_MAX_DIGITS = 200_000
_EPS = 2.0**-53
_LOG2_10 = math.log2(10.0)


class HypergeometricConvergenceError(ArithmeticError):
    """The series could not reach the requested accuracy within the caps."""


class Method(str, enum.Enum):
    SERIES = "series"
    EXTENDED = "extended_precision_series"
    TERMINATING = "terminating"


def _exact(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, Rational):
        return Fraction(x)
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"parameter must be finite, got {x}")
    return Fraction(x)


def _nonpositive_integer(q: Fraction) -> bool:
    return q.denominator == 1 and q <= 0


@dataclass(frozen=True)
class Hyp2F3Params:
    """Parameters of 2F3(a1, a2; b1, b2, b3; z).

    Values may be floats or exact rationals (``Fraction``); they are held
    as exact rationals internally.
    """

    a1: Real
    a2: Real
    b1: Real
    b2: Real
    b3: Real

    def __post_init__(self):
        for name in ("a1", "a2", "b1", "b2", "b3"):
            object.__setattr__(self, name, _exact(getattr(self, name)))
        for b in self.denominators:
            if _nonpositive_integer(b):
                raise ValueError(f"denominator parameter {b} is a non-positive integer")

    @classmethod
    def for_multiplier(cls, p: KernelParams) -> "Hyp2F3Params":
        n = p.n
        beta = Fraction(p.beta)
        return cls(1, (n + 2 - beta) / 2, 2, Fraction(n + 2, 2), (n + 4 - beta) / 2)

    @property
    def numerators(self) -> tuple[Fraction, Fraction]:
        return (self.a1, self.a2)

    @property
    def denominators(self) -> tuple[Fraction, Fraction, Fraction]:
        return (self.b1, self.b2, self.b3)

    @property
    def terminating(self) -> bool:
        return any(_nonpositive_integer(a) for a in self.numerators)


@dataclass(frozen=True)
class EvalReport:
    value: float
    terms_used: int
    method: Method
    est_error: float
    precision_bits: int = 53


def _monotone_index(a, b, z) -> int:
    """First index beyond which the term ratio decreases and is at most 1/2."""
    p, q = len(a), len(b)
    big = max([abs(float(x)) for x in (*a, *b)] + [1.0])
    # past j0 every (x + j) is positive and the log-derivative of the ratio is negative
    j0 = int(math.ceil(big * (q + 1 + p) / (q + 1 - p))) + 1
    az = abs(float(z))

    def ratio(j):
        r = az / (j + 1)
        for x in a:
            r *= float(x) + j
        for x in b:
            r /= float(x) + j
        return abs(r)

    if ratio(j0) <= 0.5:
        return j0
    lo, hi = j0, 2 * j0 + 1
    while ratio(hi) > 0.5:
        lo, hi = hi, 2 * hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ratio(mid) > 0.5:
            lo = mid
        else:
            hi = mid
    return hi


def _max_term_log10(a, b, z, kmin) -> float:
    """log10 of the largest term magnitude, by scanning the term ratios."""
    az = abs(float(z))
    if az == 0.0:
        return 0.0
    lt = 0.0
    best = 0.0
    af = [float(x) for x in a]
    bf = [float(x) for x in b]
    for k in range(kmin + 1):
        r = az / (k + 1)
        for x in af:
            r *= abs(x + k)
        for x in bf:
            r /= abs(x + k)
        if r == 0.0:
            break
        lt += math.log10(r)
        best = max(best, lt)
    return best


def required_precision(z, params: Hyp2F3Params | None = None, rel_tol: float = 1e-13) -> int:
    """Working decimal digits for summing the series at ``z``.

    The estimate is the base precision plus the digits lost to cancellation:
    log10 of the largest term (scanned from the term ratios when ``params``
    is given, else ``2 sqrt|z| / ln 10``) plus ``log10(1 + |z|)`` to cover the
    small size of the result at large ``|z|``.
    """
    base = max(BASE_DIGITS, int(math.ceil(-math.log10(rel_tol))) + 3)
    az = abs(float(z))
    if az == 0.0:
        return base
    if params is None:
        peak = 2.0 * math.sqrt(az) / math.log(10.0)
    else:
        a, b = params.numerators, params.denominators
        peak = _max_term_log10(a, b, z, _monotone_index(a, b, z))
    return base + int(math.ceil(peak + math.log10(1.0 + az)))


def _terminating_sum(a, b, z: Fraction) -> tuple[Fraction, int]:
    t = Fraction(1)
    total = t
    k = 0
    while True:
        num = z
        for x in a:
            num *= x + k
        if num == 0:
            return total, k + 1
        den = k + 1
        for x in b:
            den *= x + k
        t = t * num / den
        total += t
        k += 1


def _float_sum(a, b, z: float, kmin: int, maxterms: int):
    af = [float(x) for x in a]
    bf = [float(x) for x in b]
    t = 1.0
    s = 1.0
    weighted = 1.0
    k = 0
    while k < maxterms:
        r = z / (k + 1)
        for x in af:
            r *= x + k
        for x in bf:
            r /= x + k
        t *= r
        s += t
        k += 1
        weighted += abs(t) * (8 * k + 8)
        if k >= kmin and abs(t) <= _EPS * 1e-3 * abs(s):
            break
    bound = _EPS * (weighted + (k + 1) * (weighted / 8.0)) + 2.0 * abs(t)
    return s, k + 1, bound


def hypsum(a, b, z, rel_tol: float = 1e-13, max_digits: int = DEFAULT_MAX_DIGITS) -> EvalReport:
    """Sum pFq(a; b; z) for exact rational parameters (any p < q + 1)."""
    a = [_exact(x) for x in a]
    b = [_exact(x) for x in b]
    z = _exact(z)
    if any(_nonpositive_integer(x) for x in b):
        raise ValueError("denominator parameter is a non-positive integer")
    if any(_nonpositive_integer(x) for x in a):
        total, terms = _terminating_sum(a, b, z)
        value = float(total)
        return EvalReport(value, terms, Method.TERMINATING, abs(value) * _EPS / 2)
    if z == 0:
        return EvalReport(1.0, 1, Method.SERIES, 0.0)

    kmin = _monotone_index(a, b, z)
    sqrt_z = math.sqrt(abs(float(z)))
    maxterms = max(10 * math.ceil(sqrt_z) + 200, 2 * kmin + 200)

    if abs(z) <= 16:
        s, terms, bound = _float_sum(a, b, float(z), kmin, maxterms)
        if s != 0.0 and bound <= 0.25 * rel_tol * abs(s):
            return EvalReport(s, terms, Method.SERIES, bound + abs(s) * _EPS)

    peak = _max_term_log10(a, b, z, kmin)
    digits = max(BASE_DIGITS, int(math.ceil(-math.log10(rel_tol))) + 3)
    digits += int(math.ceil(peak))
    prec = int(math.ceil(digits * _LOG2_10)) + 16
    anum = [x.numerator for x in a]
    aden = [x.denominator for x in a]
    bnum = [x.numerator for x in b]
    bden = [x.denominator for x in b]
    target = math.log2(rel_tol / 4.0)
    while True:
        if prec > max_digits * _LOG2_10:
            raise HypergeometricConvergenceError(
                f"series at z={float(z):.6g} needs more than {max_digits} digits"
            )
        total, terms, err, converged = kernels.hypsum_fixed(
            anum, aden, bnum, bden, z.numerator, z.denominator, prec, kmin, maxterms
        )
        if not converged:
            raise HypergeometricConvergenceError(
                f"series at z={float(z):.6g} did not converge within {maxterms} terms"
            )
        size = math.log2(abs(total)) if total else -math.inf
        deficit = err - size - target
        if deficit <= 0:
            break
        prec += int(math.ceil(min(deficit, prec))) + 16
    value = total / (1 << prec)
    est = 2.0 ** (err - prec) + abs(value) * _EPS
    return EvalReport(value, terms, Method.EXTENDED, est, prec)


def eval_2f3(p: Hyp2F3Params, z, rel_tol: float = 1e-13,
             max_digits: int = DEFAULT_MAX_DIGITS) -> EvalReport:
    """Evaluate 2F3 with relative error at most ``rel_tol``.

    Raises :class:`HypergeometricConvergenceError` if more than ``max_digits``
    working digits would be needed.
    """
    return hypsum(p.numerators, p.denominators, z, rel_tol, max_digits)
