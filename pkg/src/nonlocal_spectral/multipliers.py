"""Fourier multipliers of the nonlocal Laplacian and their fast interpolants.

The multiplier is radial: m(nu) = m(|nu|) with

    m(r) = -r^2 2F3(1, (n+2-beta)/2; 2, (n+2)/2, (n+4-beta)/2; -r^2 delta^2 / 4).
"""
from __future__ import annotations

import math
import struct
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.linalg import solve_banded

from ._backend import kernels, worker_count
from .hyp2f3 import Hyp2F3Params, eval_2f3
from .kernel import EULER_GAMMA, POLE_TOL, KernelParams, digamma_fn, gamma_fn

__all__ = [
    "TorusGrid",
    "MultiplierTable",
    "TableRangeError",
    "TableAccuracyWarning",
    "multiplier",
    "multiplier_array",
    "multiplier_asymptotic",
    "multiplier_near_zero",
    "near_zero_constant",
    "lattice_radii",
    "eigenvalue_lattice",
    "build_table",
    "table_eval",
    "load_table",
]


class TableRangeError(ValueError):
    """Query radius outside the [0, K] span of a multiplier table."""


class TableAccuracyWarning(UserWarning):
    """Coarse sampling too small to resolve the multiplier's spectrum."""


def multiplier(p: KernelParams, r: float, rel_tol: float = 1e-13) -> float:
    r = float(r)
    if r < 0:
        raise ValueError("radius must be non-negative")
    if r == 0.0:
        return 0.0
    if p.beta == p.n + 2:
        return -r * r
    hp = Hyp2F3Params.for_multiplier(p)
    z = -(Fraction(r) * Fraction(p.delta)) ** 2 / 4
    return -r * r * eval_2f3(hp, z, rel_tol).value


def _multiplier_chunk(args):
    p, rs = args
    return [multiplier(p, r) for r in rs]


def multiplier_array(p: KernelParams, r, workers: int | None = None) -> np.ndarray:
    """Multiplier at every entry of ``r`` (any shape), optionally in parallel."""
    r = np.asarray(r, dtype=float)
    flat = r.ravel()
    workers = worker_count() if workers is None else workers
    if workers > 1 and flat.size >= 256:
        chunks = np.array_split(flat, workers * 4)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_multiplier_chunk, [(p, c.tolist()) for c in chunks])
            out = np.concatenate([np.asarray(x, dtype=float) for x in parts])
    else:
        out = np.array([multiplier(p, x) for x in flat], dtype=float)
    return out.reshape(r.shape)


def multiplier_asymptotic(p: KernelParams, r: float) -> float:
    """Leading large-|nu| behaviour of the multiplier.

    For beta != n this is a constant plus a multiple of r^(beta-n); at
    beta == n (within ``POLE_TOL``) the logarithmic form applies.
    """
    n, beta, delta = p.n, p.beta, p.delta
    k = round((beta - n) / 2)
    if k >= 1 and abs(beta - (n + 2 * k)) <= POLE_TOL:
        raise ValueError("no asymptotic form at beta = n+2, n+4, ...")
    if r <= 0:
        raise ValueError("radius must be positive")
    if abs(beta - n) <= POLE_TOL:
        return -(2 * n / delta**2) * (
            2 * math.log(r) + math.log(delta**2 / 4) + EULER_GAMMA - digamma_fn(n / 2)
        )
    const = -2 * n * (n + 2 - beta) / (delta**2 * (n - beta))
    half = beta / 2
    if half <= 0 and half == math.floor(half):
        return const  # 1/Gamma(beta/2) vanishes
    coef = (
        2
        * (2 / delta) ** (n + 2 - beta)
        * gamma_fn((n + 4 - beta) / 2)
        * gamma_fn((n + 2) / 2)
        / ((n - beta) * gamma_fn(half))
    )
    return const + coef * r ** (beta - n)


def near_zero_constant(p: KernelParams) -> float:
    """C with |m(r) + r^2| <= C r^4 near r = 0.

    It is the magnitude of the first neglected series term divided by r^4:
    (delta^2/4) a1 a2 / (b1 b2 b3).  The bound holds whenever the series
    alternates with decreasing terms, i.e. for beta < n + 2.
    """
    hp = Hyp2F3Params.for_multiplier(p)
    c1 = hp.a1 * hp.a2 / (hp.b1 * hp.b2 * hp.b3)
    return abs(float(c1)) * p.delta**2 / 4


def multiplier_near_zero(p: KernelParams, r: float) -> float:
    return -float(r) * float(r)


@dataclass(frozen=True)
class TorusGrid:
    """Periodic box prod [origin_i, origin_i + lengths_i) sampled with points_i nodes."""

    lengths: tuple
    points: tuple
    origin: tuple | None = None

    def __post_init__(self):
        lengths = tuple(float(x) for x in np.atleast_1d(self.lengths))
        points = tuple(int(x) for x in np.atleast_1d(self.points))
        if len(lengths) != len(points):
            raise ValueError("lengths and points must have the same dimension")
        if any(not (x > 0) for x in lengths):
            raise ValueError("box lengths must be positive")
        if any(x < 2 for x in points):
            raise ValueError("need at least 2 points per dimension")
        origin = (0.0,) * len(lengths) if self.origin is None else tuple(
            float(x) for x in np.atleast_1d(self.origin)
        )
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "origin", origin)

    @property
    def n(self) -> int:
        return len(self.lengths)

    @property
    def shape(self) -> tuple:
        return self.points

    @property
    def spacing(self) -> tuple:
        return tuple(l / N for l, N in zip(self.lengths, self.points))

    def axes(self) -> list[np.ndarray]:
        return [o + l * np.arange(N) / N for o, l, N in zip(self.origin, self.lengths, self.points)]

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.axes(), indexing="ij")

    def alpha_axes(self) -> list[np.ndarray]:
        """Integer lattice indices per axis, in FFT order."""
        return [np.fft.fftfreq(N, 1.0 / N).round().astype(np.int64) for N in self.points]

    def frequency_axes(self) -> list[np.ndarray]:
        return [2 * np.pi * a / l for a, l in zip(self.alpha_axes(), self.lengths)]


def _radius_groups(grid: TorusGrid) -> list[tuple[float, list[int]]]:
    groups: dict[float, list[int]] = {}
    for i, l in enumerate(grid.lengths):
        groups.setdefault(l, []).append(i)
    return list(groups.items())


def lattice_radii(grid: TorusGrid):
    """Distinct |nu_alpha| on the lattice and the map back to FFT layout.

    Radii are keyed by exact integers (sums of alpha_i^2 over dimensions of
    equal length), so equal radii are found without float comparisons.
    Returns ``(radii, inverse)`` with ``radii[inverse]`` of shape ``grid.shape``.
    """
    alphas = grid.alpha_axes()
    groups = _radius_groups(grid)
    keys = []
    for _, dims in groups:
        s = np.zeros(grid.shape, dtype=np.int64)
        for d in dims:
            shape = [1] * grid.n
            shape[d] = grid.points[d]
            s = s + (alphas[d] ** 2).reshape(shape)
        keys.append(s.ravel())
    stacked = np.stack(keys, axis=1)
    uniq, inverse = np.unique(stacked, axis=0, return_inverse=True)
    radii = _radius_from_keys(uniq, [l for l, _ in groups])
    return radii, inverse.reshape(grid.shape)


def _radius_from_keys(keys: np.ndarray, lengths) -> np.ndarray:
    q = np.zeros(keys.shape[0])
    for g, l in enumerate(lengths):
        q += keys[:, g] / (l * l)
    return 2 * np.pi * np.sqrt(q)


def eigenvalue_lattice(p: KernelParams, grid: TorusGrid, method: str = "auto",
                       table: "MultiplierTable | None" = None) -> np.ndarray:
    """lambda_alpha = m(|nu_alpha|) for every lattice index, in FFT layout.

    ``method`` is ``"direct"`` (series per distinct radius), ``"table"``
    (interpolate from ``table`` or a freshly built one), or ``"auto"``
    (direct unless there are more than 20000 distinct radii).
    """
    radii, inverse = lattice_radii(grid)
    if method == "auto":
        method = "table" if (table is not None or radii.size > 20000) else "direct"
    if method == "direct":
        values = multiplier_array(p, radii)
    elif method == "table":
        if table is None:
            table = auto_table(p, radii.max())
        values = table_eval(table, radii)
        values[radii == 0] = 0.0
    else:
        raise ValueError(f"unknown method {method!r}")
    return values[inverse]


@dataclass(frozen=True, eq=False)
class MultiplierTable:
    """Natural cubic spline of m(r) on Chebyshev nodes r_j = (K/2)(1 + cos(2 pi j / M)).

    ``values`` and ``second`` are indexed by j = 0..M/2, i.e. from r = K down
    to r = 0.
    """

    params: KernelParams
    K: float
    N: int
    M: int
    values: np.ndarray
    second: np.ndarray
    coefficients: np.ndarray | None = None
    _x: np.ndarray = field(init=False, repr=False)
    _y: np.ndarray = field(init=False, repr=False)
    _y2: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_x", np.ascontiguousarray(chebyshev_nodes(self.K, self.M)[::-1]))
        object.__setattr__(self, "_y", np.ascontiguousarray(self.values[::-1], dtype=float))
        object.__setattr__(self, "_y2", np.ascontiguousarray(self.second[::-1], dtype=float))

    @property
    def nodes(self) -> np.ndarray:
        return chebyshev_nodes(self.K, self.M)

    def tail_ratio(self) -> float:
        """Largest |coefficient| near |k| = N/2 relative to the largest overall."""
        if self.coefficients is None:
            return float("nan")
        return _tail_ratio(self.coefficients)

    def __call__(self, r):
        return table_eval(self, r)

    def save(self, path) -> None:
        """Write the little-endian "NLMT" binary format."""
        p = self.params
        header = struct.pack("<4sIIdddQ", b"NLMT", 1, p.n, p.beta, p.delta, self.K, self.M)
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(np.asarray(self.values, dtype="<f8").tobytes())
            fh.write(np.asarray(self.second, dtype="<f8").tobytes())

    def to_csv(self, path) -> None:
        r = self._x
        with open(path, "w") as fh:
            fh.write("r,m\n")
            for a, b in zip(r, self._y):
                fh.write(f"{a:.17g},{b:.17g}\n")


_HEADER = struct.Struct("<4sIIdddQ")


def load_table(path) -> MultiplierTable:
    from .kernel import validate

    with open(path, "rb") as fh:
        raw = fh.read()
    magic, version, n, beta, delta, K, M = _HEADER.unpack_from(raw, 0)
    if magic != b"NLMT":
        raise ValueError("not a multiplier table file")
    if version != 1:
        raise ValueError(f"unsupported table version {version}")
    count = M // 2 + 1
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if body.size != 2 * count:
        raise ValueError("truncated multiplier table file")
    values = body[:count].astype(float)
    second = body[count:].astype(float)
    return MultiplierTable(validate(n, beta, delta), K, 0, M, values, second)


def chebyshev_nodes(K: float, M: int) -> np.ndarray:
    """(K/2)(1 + cos(2 pi j / M)) for j = 0..M/2, written as K sin^2(pi (M/2 - j) / M)
    so that nodes near r = 0 keep full relative accuracy."""
    j = np.arange(M // 2 + 1)
    return K * np.sin(np.pi * (M / 2 - j) / M) ** 2


def _theta_radii(K: float, N: int) -> np.ndarray:
    j = np.arange(N)
    return K * np.sin(np.pi * (N / 2 - j) / N) ** 2


def _tail_ratio(c: np.ndarray) -> float:
    N = c.size
    mag = np.abs(np.fft.fftshift(c))
    k = np.abs(np.arange(N) - N // 2)
    width = max(2, N // 50)
    tail = mag[k >= N // 2 - width]
    return float(tail.max() / mag.max()) if mag.max() > 0 else 0.0


def zero_pad_resample(samples: np.ndarray, M: int) -> np.ndarray:
    """Trigonometric interpolation of ``N`` periodic samples onto ``M > N`` points.

    The spectrum is padded with zeros in the highest modes; for even ``N``
    the Nyquist coefficient is split evenly between +N/2 and -N/2.
    """
    N = samples.size
    c = np.fft.fft(samples)
    C = np.zeros(M, dtype=complex)
    h = N // 2
    if N % 2 == 0:
        C[:h] = c[:h]
        C[M - h + 1:] = c[h + 1:]
        C[h] = 0.5 * c[h]
        C[M - h] = 0.5 * c[h]
    else:
        C[:h + 1] = c[:h + 1]
        C[M - h:] = c[h + 1:]
    return np.fft.ifft(C).real * (M / N)


def natural_spline_second(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Second derivatives of the natural cubic spline through (x, y)."""
    m = x.size
    h = np.diff(x)
    y2 = np.zeros(m)
    if m < 3:
        return y2
    slope = np.diff(y) / h
    rhs = 6.0 * (slope[1:] - slope[:-1])
    ab = np.zeros((3, m - 2))
    ab[0, 1:] = h[1:-1]
    ab[1] = 2.0 * (h[:-1] + h[1:])
    ab[2, :-1] = h[1:-1]
    y2[1:-1] = solve_banded((1, 1), ab, rhs)
    return y2


def build_table(p: KernelParams, K: float, N: int, M: int,
                workers: int | None = None) -> MultiplierTable:
    """Sample m on N equispaced angles of r = (K/2)(1 + cos theta), resample to
    M angles by FFT zero padding, and spline the half-period onto [0, K]."""
    if not (K > 0):
        raise ValueError("K must be positive")
    N = int(N)
    M = int(M)
    if N < 4:
        raise ValueError("N must be at least 4")
    if M <= N or M % 2:
        raise ValueError("M must be an even integer larger than N")
    r = _theta_radii(K, N)
    # m(theta) is even: evaluate j = 0..N/2 and mirror
    half = N // 2
    head = multiplier_array(p, r[: half + 1], workers)
    samples = np.empty(N)
    samples[: half + 1] = head
    samples[half + 1:] = head[1: N - half][::-1]
    coeffs = np.fft.fft(samples) / N
    ratio = _tail_ratio(coeffs)
    if ratio > 1e-12:
        warnings.warn(
            f"multiplier spectrum not resolved: tail/peak = {ratio:.3e} at |k| ~ N/2 (N={N}); "
            "increase N",
            TableAccuracyWarning,
            stacklevel=2,
        )
    fine = zero_pad_resample(samples, M)[: M // 2 + 1]
    # endpoints coincide with original samples
    fine[0] = samples[0]
    fine[-1] = 0.0 if N % 2 == 0 else multiplier(p, 0.0)
    x = chebyshev_nodes(K, M)[::-1]
    second = natural_spline_second(x, fine[::-1])[::-1]
    return MultiplierTable(p, float(K), N, M, fine, second, coeffs)


def auto_table(p: KernelParams, rmax: float) -> MultiplierTable:
    """Table covering [0, rmax] with sizes scaled to the oscillation count K*delta."""
    K = float(rmax) * (1 + 1e-9)
    kd = K * p.delta
    N = int(2 * math.ceil((1.3 * kd + 64) / 2))
    M = int(2 * math.ceil(max(8 * N, 40 * kd, 2000) / 2))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TableAccuracyWarning)
        return build_table(p, K, N, M)


def table_eval(t: MultiplierTable, r):
    """Spline value at ``r`` (scalar or array); raises TableRangeError outside [0, K]."""
    q = np.asarray(r, dtype=float)
    if q.size and (np.nanmin(q) < 0.0 or np.nanmax(q) > t.K or np.isnan(q).any()):
        raise TableRangeError(f"radius outside table range [0, {t.K}]")
    out = kernels.spline_eval(t._x, t._y, t._y2, q.ravel()).reshape(q.shape)
    if np.ndim(r) == 0:
        return float(out)
    return out
