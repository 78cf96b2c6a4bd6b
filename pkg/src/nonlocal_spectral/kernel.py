"""Operator parameters, the scaling constant and elementary special functions.

The operator is

    L u(x) = c * integral over |y - x| < delta of (u(y) - u(x)) / |y - x|**beta dy

on R^n, with c chosen so that L reproduces the Laplacian on quadratics.
"""
from __future__ import annotations

import math
import numbers
from dataclasses import dataclass

__all__ = [
    "KernelParams",
    "KernelParamsError",
    "POLE_TOL",
    "validate",
    "scaling_constant",
    "gamma_fn",
    "digamma_fn",
    "EULER_GAMMA",
]

POLE_TOL = 1e-12
EULER_GAMMA = 0.57721566490153286061

SUPPORTED_DIMENSIONS = (1, 2, 3)


class KernelParamsError(ValueError):
    """Rejected operator parameters.

    ``reason`` is one of ``"dimension"``, ``"delta"``, ``"beta"`` (not a
    finite real) or ``"pole"``.
    """

    def __init__(self, reason: str, message: str):
        super().__init__(message)
        self.reason = reason


@dataclass(frozen=True)
class KernelParams:
    n: int
    beta: float
    delta: float

    @property
    def integrable(self) -> bool:
        """True when the integral form of the operator converges (beta < n+2)."""
        return self.beta < self.n + 2

    @property
    def classical(self) -> bool:
        """beta == n+2: the multiplier is exactly -|nu|^2."""
        return abs(self.beta - (self.n + 2)) <= POLE_TOL

    @property
    def kind(self) -> str:
        if self.classical:
            return "classical"
        return "integrable" if self.integrable else "multiplier-extended"


def validate(n, beta, delta) -> KernelParams:
    """Check ``(n, beta, delta)`` and return a :class:`KernelParams`.

    Raises :class:`KernelParamsError` for anything outside the supported
    range, including beta within ``POLE_TOL`` of n+4, n+6, ...
    """
    if isinstance(n, bool) or not isinstance(n, numbers.Integral):
        if isinstance(n, numbers.Real) and not isinstance(n, bool) and float(n).is_integer():
            n = int(n)
        else:
            raise KernelParamsError("dimension", f"dimension must be an integer, got {n!r}")
    n = int(n)
    if n not in SUPPORTED_DIMENSIONS:
        raise KernelParamsError("dimension", f"dimension must be 1, 2 or 3, got {n}")

    try:
        beta = float(beta)
    except (TypeError, ValueError):
        raise KernelParamsError("beta", f"beta must be a real number, got {beta!r}") from None
    if not math.isfinite(beta):
        raise KernelParamsError("beta", f"beta must be finite, got {beta}")

    try:
        delta = float(delta)
    except (TypeError, ValueError):
        raise KernelParamsError("delta", f"delta must be a real number, got {delta!r}") from None
    if not (delta > 0.0) or not math.isfinite(delta):
        raise KernelParamsError("delta", f"delta must be positive and finite, got {delta}")

    # excluded: beta = n + 2k, k >= 2
    k = round((beta - n) / 2.0)
    if k >= 2 and abs(beta - (n + 2 * k)) <= POLE_TOL:
        raise KernelParamsError(
            "pole", f"beta={beta} is an excluded pole (n+{2 * k}) of the multiplier"
        )
    return KernelParams(n, beta, delta)


def scaling_constant(p: KernelParams) -> float:
    """c = 2 (n+2-beta) Gamma(n/2+1) / (pi^(n/2) delta^(n+2-beta))."""
    n, beta, delta = p.n, p.beta, p.delta
    e = n + 2 - beta
    return 2.0 * e * gamma_fn(n / 2 + 1) / (math.pi ** (n / 2) * delta**e)


# Lanczos approximation, g = 7, 9 coefficients (Godfrey).
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def _is_pole(x: float) -> bool:
    return x <= 0.0 and x == math.floor(x)


def gamma_fn(x: float) -> float:
    x = float(x)
    if _is_pole(x):
        raise ValueError(f"gamma has a pole at {x}")
    if x < 0.5:
        # reflection
        return math.pi / (math.sin(math.pi * x) * gamma_fn(1.0 - x))
    x -= 1.0
    a = _LANCZOS[0]
    for i in range(1, len(_LANCZOS)):
        a += _LANCZOS[i] / (x + i)
    t = x + _LANCZOS_G + 0.5
    # split the power so large x does not overflow before exp(-t) is applied
    h = t ** ((x + 0.5) / 2)
    return math.sqrt(2 * math.pi) * h * math.exp(-t) * h * a


# Taylor coefficients of psi about its positive root
_PSI_ROOT_HI = 1.4616321449683622
_PSI_ROOT_LO = 9.549995429965697e-17
_PSI_ROOT_TAYLOR = (
    0.9676722454476212,
    -0.4427631689835921,
    0.258499760955651,
    -0.16394270544240652,
    0.10782405069126237,
    -0.07219956125645471,
    0.04880428816414311,
    -0.03316112647484736,
    0.022597648232218104,
)
# B_{2k} / (2k)
_PSI_ASYMPTOTIC = (
    1.0 / 12,
    -1.0 / 120,
    1.0 / 252,
    -1.0 / 240,
    1.0 / 132,
    -691.0 / 32760,
    1.0 / 12,
)


def digamma_fn(x: float) -> float:
    x = float(x)
    if _is_pole(x):
        raise ValueError(f"digamma has a pole at {x}")
    if x < 0.0:
        return digamma_fn(1.0 - x) - math.pi / math.tan(math.pi * x)
    h = (x - _PSI_ROOT_HI) - _PSI_ROOT_LO
    if abs(h) < 0.02:
        acc = 0.0
        for c in reversed(_PSI_ROOT_TAYLOR):
            acc = acc * h + c
        return acc * h
    shift = 0.0
    while x < 10.0:
        shift += 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    for c in reversed(_PSI_ASYMPTOTIC):
        series = series * inv2 + c
    return math.log(x) - 0.5 / x - series * inv2 - shift
