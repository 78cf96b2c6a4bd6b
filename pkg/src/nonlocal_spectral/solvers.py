"""Spectral solvers for periodic nonlocal problems.

Linear problems (heat, wave) are solved mode by mode in closed form.  The
Brusselator is advanced by fixed-step RK4 with the operator applied in
Fourier space and the reaction terms in physical space; the pseudo-spectral
wave comparison uses an adaptive embedded Runge-Kutta 4(5) pair.
"""
from __future__ import annotations

import functools
import time
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft
from scipy.integrate import solve_ivp

from .kernel import KernelParams
from .multipliers import MultiplierTable, TorusGrid, eigenvalue_lattice, lattice_radii, table_eval

__all__ = [
    "SpectralField",
    "HeatSolution",
    "WaveSolution",
    "BrusselatorConfig",
    "BrusselatorResult",
    "WaveRunResult",
    "SimulationError",
    "lattice_eigenvalues",
    "apply_operator",
    "heat_evolve",
    "wave_evolve",
    "wave_velocity",
    "wave_energy",
    "dealias_mask",
    "dealias",
    "brusselator_rhs",
    "brusselator_run",
    "wave_pseudospectral_run",
    "integrate_wave",
]


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients (numpy FFT layout, unnormalized) on a torus grid."""

    grid: TorusGrid
    coeffs: np.ndarray
    space_values: np.ndarray | None = None

    @classmethod
    def from_values(cls, grid: TorusGrid, values) -> "SpectralField":
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            raise ValueError(f"field shape {values.shape} does not match grid {grid.shape}")
        return cls(grid, np.fft.fftn(values), values)

    @classmethod
    def from_function(cls, grid: TorusGrid, fn) -> "SpectralField":
        return cls.from_values(grid, fn(*grid.mesh()))

    def values(self, tol: float = 1e-12) -> np.ndarray:
        """Inverse transform; the imaginary residue must be below ``tol`` relative."""
        z = np.fft.ifftn(self.coeffs)
        scale = max(np.abs(z.real).max(initial=0.0), 1.0)
        residue = np.abs(z.imag).max(initial=0.0)
        if residue > tol * scale:
            raise ValueError(f"field is not real: imaginary residue {residue:.3e}")
        return z.real

    def scaled(self, factor) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * factor)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __mul__(self, scalar) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__


def lattice_eigenvalues(op, grid: TorusGrid, method: str = "auto") -> np.ndarray:
    """Eigenvalues for ``op``: KernelParams, MultiplierTable, or a ready array."""
    if isinstance(op, KernelParams):
        return eigenvalue_lattice(op, grid, method)
    if isinstance(op, MultiplierTable):
        radii, inverse = lattice_radii(grid)
        values = table_eval(op, radii)
        values[radii == 0] = 0.0
        return values[inverse]
    lam = np.asarray(op, dtype=float)
    if lam.shape != grid.shape:
        raise ValueError("eigenvalue array does not match the grid")
    return lam


def apply_operator(op, f: SpectralField) -> SpectralField:
    """Scale each Fourier mode of ``f`` by its eigenvalue."""
    return SpectralField(f.grid, lattice_eigenvalues(op, f.grid) * f.coeffs)


@dataclass(frozen=True, eq=False)
class HeatSolution:
    params: KernelParams | None
    grid: TorusGrid
    eigen: np.ndarray
    u0_hat: np.ndarray

    @classmethod
    def from_initial(cls, op, grid: TorusGrid, u0, method: str = "auto") -> "HeatSolution":
        u0 = _as_field(grid, u0)
        params = op if isinstance(op, KernelParams) else getattr(op, "params", None)
        return cls(params, grid, lattice_eigenvalues(op, grid, method), u0.coeffs)


@dataclass(frozen=True, eq=False)
class WaveSolution:
    params: KernelParams | None
    grid: TorusGrid
    eigen: np.ndarray
    u0_hat: np.ndarray
    v0_hat: np.ndarray

    @classmethod
    def from_initial(cls, op, grid: TorusGrid, u0, v0=None, method: str = "auto") -> "WaveSolution":
        u0 = _as_field(grid, u0)
        v0 = SpectralField(grid, np.zeros_like(u0.coeffs)) if v0 is None else _as_field(grid, v0)
        params = op if isinstance(op, KernelParams) else getattr(op, "params", None)
        return cls(params, grid, lattice_eigenvalues(op, grid, method), u0.coeffs, v0.coeffs)


def _as_field(grid, f) -> SpectralField:
    if isinstance(f, SpectralField):
        return f
    if callable(f):
        return SpectralField.from_function(grid, f)
    return SpectralField.from_values(grid, f)


def heat_evolve(sol: HeatSolution, t: float) -> SpectralField:
    if t < 0:
        raise ValueError("time must be non-negative")
    return SpectralField(sol.grid, np.exp(sol.eigen * t) * sol.u0_hat)


def _wave_factors(lam: np.ndarray, t: float):
    """(c, s, c', s') with u_hat(t) = c u0 + s v0 and u_hat'(t) = c' u0 + s' v0.

    lam < 0 gives cos/sin of sqrt(-lam) t, lam = 0 the limit u0 + v0 t,
    lam > 0 the cosh/sinh pair.
    """
    neg = lam < 0
    pos = lam > 0
    w = np.sqrt(np.abs(lam))
    c = np.ones_like(lam)
    s = np.full_like(lam, float(t))
    dc = np.zeros_like(lam)
    ds = np.ones_like(lam)
    wn = w[neg]
    c[neg] = np.cos(wn * t)
    s[neg] = np.sin(wn * t) / wn
    dc[neg] = -wn * np.sin(wn * t)
    ds[neg] = np.cos(wn * t)
    wp = w[pos]
    c[pos] = np.cosh(wp * t)
    s[pos] = np.sinh(wp * t) / wp
    dc[pos] = wp * np.sinh(wp * t)
    ds[pos] = np.cosh(wp * t)
    return c, s, dc, ds


def wave_evolve(sol: WaveSolution, t: float) -> SpectralField:
    if t < 0:
        raise ValueError("time must be non-negative")
    c, s, _, _ = _wave_factors(sol.eigen, t)
    return SpectralField(sol.grid, c * sol.u0_hat + s * sol.v0_hat)


def wave_velocity(sol: WaveSolution, t: float) -> SpectralField:
    _, _, dc, ds = _wave_factors(sol.eigen, t)
    return SpectralField(sol.grid, dc * sol.u0_hat + ds * sol.v0_hat)


def wave_energy(sol: WaveSolution, t: float) -> float:
    """sum_alpha |u_hat'_alpha|^2 + |lambda_alpha| |u_hat_alpha|^2."""
    u = wave_evolve(sol, t).coeffs
    du = wave_velocity(sol, t).coeffs
    return float(np.sum(np.abs(du) ** 2 + np.abs(sol.eigen) * np.abs(u) ** 2))


def dealias_mask(shape, rfft: bool = False) -> np.ndarray:
    """True for modes kept by the 2/3 rule (|alpha_i| <= N_i/3 on every axis)."""
    masks = []
    for i, N in enumerate(shape):
        if rfft and i == len(shape) - 1:
            alpha = np.arange(N // 2 + 1)
        else:
            alpha = np.abs(np.fft.fftfreq(N, 1.0 / N).round())
        view = [1] * len(shape)
        view[i] = -1
        masks.append((alpha <= N / 3).reshape(view))
    return functools.reduce(np.logical_and, masks)


def dealias(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, np.where(dealias_mask(f.grid.shape), f.coeffs, 0))


def _half_lattice(lam: np.ndarray) -> np.ndarray:
    N = lam.shape[-1]
    return np.ascontiguousarray(lam[..., : N // 2 + 1])


@dataclass(frozen=True)
class BrusselatorConfig:
    Du: float
    Dv: float
    a: float
    b: float
    params: KernelParams
    grid: TorusGrid
    t_end: float
    cfl_const: float = 1.9

    def __post_init__(self):
        if not (self.Du > 0 and self.Dv > 0):
            raise ValueError("diffusivities must be positive")
        if not (self.t_end > 0):
            raise ValueError("t_end must be positive")

    @property
    def dt(self) -> float:
        dx = min(self.grid.spacing)
        return self.cfl_const * dx * dx

    @property
    def steps(self) -> int:
        full, rest = divmod(self.t_end, self.dt)
        return int(full) + (1 if rest > 1e-12 * self.dt else 0)


class _BrusselatorRHS:
    def __init__(self, cfg: BrusselatorConfig, eigen=None):
        grid = cfg.grid
        lam = lattice_eigenvalues(cfg.params if eigen is None else eigen, grid)
        half = _half_lattice(lam)
        self.cfg = cfg
        self.axes = tuple(range(1, grid.n + 1))
        self.shape = grid.shape
        mask = dealias_mask(grid.shape, rfft=True)
        # one stacked inverse transform per evaluation: [Du*L u, Dv*L v, filtered u^2 v]
        self.scale = np.stack([cfg.Du * half, cfg.Dv * half, mask.astype(float)])
        self.buf = np.empty((3,) + tuple(grid.shape))

    def __call__(self, u, v):
        cfg = self.cfg
        buf = self.buf
        np.multiply(u, u, out=buf[2])
        buf[2] *= v
        # subtracting means keeps exactly uniform states free of transform roundoff;
        # the mean mode itself has eigenvalue 0 and passes the filter unchanged
        um, vm, pm = u.mean(), v.mean(), buf[2].mean()
        np.subtract(u, um, out=buf[0])
        np.subtract(v, vm, out=buf[1])
        buf[2] -= pm
        spec = sfft.rfftn(buf, axes=self.axes)
        spec *= self.scale
        back = sfft.irfftn(spec, s=self.shape, axes=self.axes)
        nl = back[2] + pm
        du = back[0] + cfg.a - (cfg.b + 1.0) * u + nl
        dv = back[1] + cfg.b * u - nl
        return du, dv


def _values(x):
    if isinstance(x, SpectralField):
        return x.values()
    return np.asarray(x, dtype=float)


def brusselator_rhs(cfg: BrusselatorConfig, u, v, eigen=None):
    """(du/dt, dv/dt) in physical space; the cubic product is dealiased."""
    return _BrusselatorRHS(cfg, eigen)(_values(u), _values(v))


@dataclass(frozen=True, eq=False)
class BrusselatorResult:
    times: np.ndarray
    u: np.ndarray  # (snapshots, *grid.shape)
    v: np.ndarray
    steps: int
    dt: float
    cpu_seconds: float

    @property
    def u_final(self) -> np.ndarray:
        return self.u[-1]

    @property
    def v_final(self) -> np.ndarray:
        return self.v[-1]


def brusselator_run(cfg: BrusselatorConfig, u0, v0, snapshots: int = 200,
                    eigen=None, save_every: int | None = None,
                    blowup: float = 1e6) -> BrusselatorResult:
    """Fixed-step RK4 from 0 to ``cfg.t_end`` with dt = cfl_const * dx^2.

    The last step is shortened to land on t_end.  Snapshots are taken every
    ``save_every`` steps (default: about ``snapshots`` evenly spaced ones)
    plus the initial and final states.
    """
    rhs = _BrusselatorRHS(cfg, eigen)
    u = _values(u0).copy()
    v = _values(v0).copy()
    dt = cfg.dt
    nsteps = cfg.steps
    if save_every is None:
        save_every = max(1, nsteps // max(1, snapshots))
    times = [0.0]
    us = [u.copy()]
    vs = [v.copy()]
    t = 0.0
    start = time.process_time()
    # overflow in an unstable run is caught by the peak check below
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(1, nsteps + 1):
            h = min(dt, cfg.t_end - t) if step == nsteps else dt
            k1u, k1v = rhs(u, v)
            k2u, k2v = rhs(u + 0.5 * h * k1u, v + 0.5 * h * k1v)
            k3u, k3v = rhs(u + 0.5 * h * k2u, v + 0.5 * h * k2v)
            k4u, k4v = rhs(u + h * k3u, v + h * k3v)
            u = u + (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
            v = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
            t = cfg.t_end if step == nsteps else step * dt
            if step % 64 == 0 or step == nsteps:
                peak = np.abs(u).max()
                if not np.isfinite(peak) or peak > blowup:
                    raise SimulationError(
                        f"Brusselator run unstable: max|u| = {peak:.3e} at t = {t:.6g} (step {step}); "
                        f"reduce cfl_const (now {cfg.cfl_const})"
                    )
            if step % save_every == 0 or step == nsteps:
                times.append(t)
                us.append(u.copy())
                vs.append(v.copy())
    return BrusselatorResult(np.array(times), np.array(us), np.array(vs), nsteps, dt,
                             time.process_time() - start)


@dataclass(frozen=True, eq=False)
class WaveRunResult:
    u: np.ndarray
    v: np.ndarray
    steps: int
    evaluations: int
    cpu_seconds: float


def integrate_wave(apply_op, u0, v0, t_end: float, rtol: float = 1e-8,
                   atol: float = 1e-10) -> WaveRunResult:
    """u_tt = A u as a first-order system with adaptive RK45 (Dormand-Prince).

    ``apply_op`` maps a real field to A applied to it.
    """
    u0 = np.asarray(u0, dtype=float)
    shape = u0.shape
    size = u0.size
    v0 = np.zeros_like(u0) if v0 is None else np.asarray(v0, dtype=float)

    def f(_t, y):
        u = y[:size].reshape(shape)
        out = np.concatenate([y[size:], apply_op(u).ravel()])
        # a non-finite state would otherwise stall the step-size controller
        if not np.isfinite(out).all():
            raise SimulationError(f"non-finite wave state at t = {_t:.6g}")
        return out

    start = time.process_time()
    sol = solve_ivp(f, (0.0, t_end), np.concatenate([u0.ravel(), v0.ravel()]), method="RK45",
                    rtol=rtol, atol=atol, t_eval=[t_end])
    if sol.status != 0 or sol.y.shape[1] == 0:
        raise SimulationError(f"wave integration failed: {sol.message}")
    y = sol.y[:, -1]
    return WaveRunResult(y[:size].reshape(shape), y[size:].reshape(shape),
                         len(sol.t) if sol.t_events is None else int(sol.nfev // 6),
                         int(sol.nfev), time.process_time() - start)


def wave_pseudospectral_run(op, grid: TorusGrid, u0, v0, t_end: float,
                            rtol: float = 1e-8, atol: float = 1e-10) -> WaveRunResult:
    """Adaptive RK integration of u_tt = L u with L applied by FFT."""
    lam = _half_lattice(lattice_eigenvalues(op, grid))
    axes = tuple(range(grid.n))

    def apply_op(u):
        return np.fft.irfftn(lam * np.fft.rfftn(u, axes=axes), s=grid.shape, axes=axes)

    return integrate_wave(apply_op, _values(u0), None if v0 is None else _values(v0),
                          t_end, rtol, atol)
