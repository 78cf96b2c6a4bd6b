"""Finite-difference reference operator for the 1D nonlocal Laplacian.

    A u(x) = a_0 u(x) + sum_{j=1}^r a_j [u(x + j dx) + u(x - j dx)]

The weights come from replacing u(x+s) + u(x-s) - 2u(x) inside the integral
by its piecewise-linear interpolant on the grid (hat functions), except on
the cell touching s = 0, where for 2 <= beta < 3 the quadratic model
s^2/dx^2 (u_1 + u_-1 - 2 u_0) is used so the singular weight stays
integrable.  The singular cell is integrated in closed form; the others by
16-point Gauss-Legendre.  a_0 = -2 sum a_j, so constants are annihilated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .kernel import KernelParams, scaling_constant, validate
from .solvers import WaveRunResult, integrate_wave

__all__ = [
    "FDStencil",
    "build_stencil",
    "build_fixed_delta_stencil",
    "fd_eigenvalues",
    "fd_apply",
    "fd_wave_run",
    "eigencurve",
    "DIRECT_MAX_RADIUS",
]

DIRECT_MAX_RADIUS = 64
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True, eq=False)
class FDStencil:
    r: int
    dx: float
    a: np.ndarray  # a[0] .. a[r]
    params: KernelParams
    rule: str = "quotient"

    @property
    def delta(self) -> float:
        return self.params.delta


def _cell_integral(lo: float, hi: float, power: float, weight) -> float:
    """int_lo^hi weight(t) t^power dt for 0 < lo < hi (smooth integrand)."""
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    t = mid + half * _GL_X
    return half * float(np.dot(_GL_W, weight(t) * t**power))


def _unit_weights(beta: float, T: float, rule: str = "quotient") -> np.ndarray:
    """Per-unit-spacing weights w_j, j = 1..ceil(T), first cell in closed form.

    ``rule="quotient"`` interpolates the difference quotient (u(x+s) - u(x))/s
    by hats, so w_j = (1/j) int psi_j(t) t^(1-beta) dt; it is exact on
    quadratics and therefore tends to the classical Laplacian when delta and
    dx shrink together.  ``rule="hat"`` interpolates u itself,
    w_j = int psi_j(t) t^-beta dt.
    """
    if rule not in ("quotient", "hat"):
        raise ValueError(f"unknown stencil rule {rule!r}")
    r = max(1, math.ceil(T - 1e-12))
    w = np.zeros(r + 1)
    # cell [0, 1]: linear in t through 0 for the symmetric second difference
    if rule == "hat" and beta < 2:
        w[1] += 1.0 / (2.0 - beta)
    else:
        w[1] += 1.0 / (3.0 - beta)
    power = 1.0 - beta if rule == "quotient" else -beta
    for m in range(1, r):
        lo, hi = float(m), min(float(m + 1), T)
        if hi <= lo:
            break
        # falling half of the hat at m, rising half of the hat at m+1
        w[m] += _cell_integral(lo, hi, power, lambda t, m=m: (m + 1) - t)
        w[m + 1] += _cell_integral(lo, hi, power, lambda t, m=m: t - m)
    if rule == "quotient":
        w[2:] /= np.arange(2, r + 1)
    return w


def _assemble(p: KernelParams, dx: float, T: float, rule: str) -> FDStencil:
    if p.n != 1:
        raise ValueError("the finite-difference stencil is one-dimensional (n = 1)")
    if not p.beta < 3.0:
        raise ValueError("the finite-difference stencil needs beta < n + 2 = 3")
    if not dx > 0:
        raise ValueError("dx must be positive")
    if T < 1.0 - 1e-12:
        raise ValueError("delta must be at least one grid spacing")
    w = _unit_weights(p.beta, T, rule)
    a = scaling_constant(p) * dx ** (1.0 - p.beta) * w
    a[0] = -2.0 * a[1:].sum()
    return FDStencil(len(a) - 1, dx, a, p, rule)


def build_stencil(p: KernelParams, r: int, dx: float, rule: str = "quotient") -> FDStencil:
    """Stencil of radius ``r``; ``p.delta`` must equal ``r * dx``."""
    if int(r) != r or r < 1:
        raise ValueError("stencil radius must be a positive integer")
    if not math.isclose(p.delta, r * dx, rel_tol=1e-9):
        raise ValueError(f"delta {p.delta} differs from r*dx = {r * dx}")
    return _assemble(p, dx, float(r), rule)


def build_fixed_delta_stencil(p: KernelParams, dx: float, rule: str = "quotient") -> FDStencil:
    """Stencil for a fixed horizon: radius ceil(delta/dx), last cell truncated."""
    T = p.delta / dx
    if abs(T - round(T)) < 1e-9 * T:
        T = float(round(T))
    return _assemble(p, dx, T, rule)


def stencil_for(n: int, beta: float, delta: float, r: int, dx: float,
                rule: str = "quotient") -> FDStencil:
    return build_stencil(validate(n, beta, delta), r, dx, rule)


def fd_eigenvalues(s: FDStencil, L: float, k) -> np.ndarray:
    """lambda_k = a_0 + 2 sum_j a_j cos(2 pi k j dx / L); ``k`` may be non-integer."""
    k = np.asarray(k, dtype=float)
    j = np.arange(1, s.r + 1)
    phase = 2.0 * np.pi * s.dx / L * np.multiply.outer(k, j)
    return s.a[0] + 2.0 * (np.cos(phase) @ s.a[1:])


def fd_apply(s: FDStencil, u) -> np.ndarray:
    """Periodic stencil application: direct sums up to radius 64, FFT beyond."""
    u = np.asarray(u, dtype=float)
    N = u.size
    if 2 * s.r >= N:
        raise ValueError("stencil wider than the periodic grid")
    if s.r <= DIRECT_MAX_RADIUS:
        return kernels.stencil_apply(u, s.a)
    return _fft_apply(s, N)(u)


def _fft_apply(s: FDStencil, N: int):
    ker = np.zeros(N)
    ker[: s.r + 1] = s.a
    ker[N - s.r:] = s.a[:0:-1]
    sym = np.fft.rfft(ker).real

    def apply(u):
        return np.fft.irfft(sym * np.fft.rfft(u), n=N)

    return apply


def fd_wave_run(s: FDStencil, N: int, u0, v0, t_end: float, rtol: float = 1e-8,
                atol: float = 1e-10) -> WaveRunResult:
    """u_tt = A u on an N-point periodic grid, same adaptive integrator as the spectral run."""
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (N,):
        raise ValueError("initial data must have N points")
    if 2 * s.r >= N:
        raise ValueError("stencil wider than the periodic grid")
    if s.r <= DIRECT_MAX_RADIUS:
        a = s.a

        def apply(u):
            return kernels.stencil_apply(u, a)
    else:
        apply = _fft_apply(s, N)
    return integrate_wave(apply, u0, v0, t_end, rtol, atol)


def eigencurve(s: FDStencil, L: float, k, true_values=None):
    """Columns (k, lambda_fd, lambda_true, lambda_laplacian) for spectrum plots."""
    from .multipliers import multiplier_array

    k = np.asarray(k, dtype=float)
    nu = 2.0 * np.pi * k / L
    lam_fd = fd_eigenvalues(s, L, k)
    lam_true = multiplier_array(s.params, nu) if true_values is None else np.asarray(true_values)
    return k, lam_fd, lam_true, -nu * nu
