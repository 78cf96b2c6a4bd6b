"""Command-line front end: every experiment as data files.

Exit codes: 0 success, 1 numerical failure, 2 invalid flags or parameters.
"""
from __future__ import annotations

import argparse
import json
import os
import shutil
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import BACKEND
from .hyp2f3 import HypergeometricConvergenceError
from .io import SnapshotSeries, write_csv, write_snapshot
from .kernel import KernelParamsError, validate
from .oracle import QuadratureError
from .solvers import SimulationError

PRESETS = {
    "heat": {
        "fig3": dict(L=20.0, points=800, t_end=15.0, times=250, panels="fig", initial="blob"),
        "fig5": dict(L=20.0, points=800, t_end=2.0, times=4, panels="fig", initial="star"),
    },
    "wave": {
        "fig4": dict(L=96.0, points=400, t_end=10.0, times=1, panels="fig"),
    },
    "brusselator": {
        "fig6-classical": dict(beta=3.0, delta=0.5),
        "fig6-beta2.5": dict(beta=2.5, delta=0.5),
        "fig6-beta2": dict(beta=2.0, delta=0.5),
        "fig6-beta1.5": dict(beta=1.5, delta=0.5),
    },
    "wave-compare": {
        "table3-row1": dict(delta=0.3, n_fd=1000, r=3),
        "table3-row2": dict(delta=0.15, n_fd=2000, r=3),
        "table3-row3": dict(delta=0.075, n_fd=4000, r=3),
        "table3-row4": dict(delta=0.0375, n_fd=8000, r=3),
        "table3-row5": dict(delta=5.0, n_fd=2000, r=100),
        "table3-row6": dict(delta=5.0, n_fd=4000, r=200),
        "table3-row7": dict(delta=5.0, n_fd=8000, r=400),
    },
    "fd-spectrum": {
        "fig7-left": dict(N=100, r=3, beta=1 / 3, L=1.0),
        "fig7-center": dict(N=10000, r=3, beta=1 / 3, L=1.0),
        "fig7-right": dict(beta=1 / 3, L=1.0, delta=0.1, radii="6,36,216", kmax=30),
    },
}
# nine (beta, delta) panels for the 2D heat and wave figures, plus the classical run
FIG_PANELS = [(b, d) for d in (0.1, 1.0, 2.0) for b in (1.0, 3.0, 5.0)] + [(4.0, 1.0)]


class UsageError(Exception):
    pass


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nonlocal-spectral", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    parser.subcommands = sub.choices

    def common(p, preset_group=None):
        p.add_argument("--config", help="JSON file with option values (flags override it)")
        p.add_argument("--out", help="output directory (must not exist)")
        if preset_group:
            p.add_argument("--preset", choices=sorted(PRESETS[preset_group]))
        return p

    def kernel(p, n=True, beta=True, delta=True):
        if n:
            p.add_argument("--n", type=int)
        if beta:
            p.add_argument("--beta", type=float)
        if delta:
            p.add_argument("--delta", type=float)

    p = common(sub.add_parser("multipliers", help="m(r) on an equispaced radius grid"))
    kernel(p)
    p.add_argument("--rmin", type=float, default=1.0)
    p.add_argument("--rmax", type=float, default=318 * np.pi)
    p.add_argument("--count", type=_positive_int, default=1000)
    p.add_argument("--oracle", action="store_true", help="compare with quadrature")

    p = common(sub.add_parser("table-bench", help="build a spline table and benchmark it"))
    kernel(p)
    p.add_argument("--K", type=_positive_float, default=1000.0)
    p.add_argument("--N", type=_positive_int, default=1500)
    p.add_argument("--M", type=_positive_int, default=20000)
    p.add_argument("--probe-count", type=_positive_int, default=10000)

    for name in ("heat", "wave"):
        p = common(sub.add_parser(name, help=f"semi-analytic 2D {name} runs"), name)
        kernel(p, n=False)
        p.add_argument("--L", type=_positive_float)
        p.add_argument("--points", type=_positive_int)
        p.add_argument("--t-end", type=float)
        p.add_argument("--times", type=_positive_int)
        p.add_argument("--panels", choices=["fig", "single"])
        if name == "heat":
            p.add_argument("--initial", choices=["blob", "star"])

    p = common(sub.add_parser("brusselator", help="1D nonlocal Brusselator (RK4)"), "brusselator")
    kernel(p, n=False)
    p.add_argument("--N", type=_positive_int, default=1600)
    p.add_argument("--L", type=_positive_float, default=20.0)
    p.add_argument("--t-end", type=_positive_float, default=40.0)
    p.add_argument("--snapshots", type=_positive_int, default=400)
    p.add_argument("--cfl", type=_positive_float, default=1.9)
    for k, v in (("Du", 0.0625), ("Dv", 0.12), ("a", 3.0), ("b", 11.0)):
        p.add_argument(f"--{k}", type=float, default=v)

    p = common(sub.add_parser("wave-compare", help="spectral vs finite-difference 1D wave"), "wave-compare")
    kernel(p, n=False, beta=False)
    p.add_argument("--beta", type=float, default=1 / 3)
    p.add_argument("--n-spectral", type=_positive_int, default=2000)
    p.add_argument("--n-fd", type=_positive_int)
    p.add_argument("--r", type=_positive_int)
    p.add_argument("--n-reference", type=_positive_int, default=8000)
    p.add_argument("--rtol", type=_positive_float, default=1e-8)
    p.add_argument("--atol", type=_positive_float, default=1e-10)
    p.add_argument("--rule", choices=["quotient", "hat"], default="quotient")

    p = common(sub.add_parser("fd-spectrum", help="finite-difference eigencurves"), "fd-spectrum")
    kernel(p, n=False)
    p.add_argument("--N", type=_positive_int)
    p.add_argument("--r", type=_positive_int)
    p.add_argument("--L", type=_positive_float)
    p.add_argument("--radii", help="comma-separated radii for fixed-delta curves")
    p.add_argument("--kmax", type=_positive_int)
    p.add_argument("--rule", choices=["quotient", "hat"], default="quotient")

    p = common(sub.add_parser("oracle", help="quadrature oracle vs series at chosen radii"))
    kernel(p)
    p.add_argument("--r", type=float, nargs="+", default=[318 * np.pi])
    p.add_argument("--tol", type=float, default=1e-13)

    p = sub.add_parser("validate", help="run the acceptance suite")
    p.add_argument("--only", help="comma-separated criterion numbers")
    return parser


def _explicit_options(sub, argv) -> set:
    """Names of options that appear on the command line."""
    saved = {a: a.default for a in sub._actions}
    try:
        for a in saved:
            a.default = argparse.SUPPRESS
        return set(vars(sub.parse_args(argv)))
    finally:
        for a, d in saved.items():
            a.default = d


def _resolve(parser, argv):
    """Parse flags; JSON config and preset values fill options not given on the command line."""
    args = parser.parse_args(argv)
    if args.command == "validate":
        return args, None
    sub = parser.subcommands[args.command]
    defaults = {a.dest: a.default for a in sub._actions}
    explicit = _explicit_options(sub, argv[1:])
    raw = None
    values = {}
    if args.config:
        try:
            raw = Path(args.config).read_text()
            values = json.loads(raw)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(values, dict):
            raise UsageError("config must be a JSON object")
        unknown = set(values) - set(defaults) - {"command"}
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        if "preset" in values and "preset" not in explicit:
            args.preset = values["preset"]
    preset = getattr(args, "preset", None)
    if preset:
        if preset not in PRESETS.get(args.command, {}):
            raise UsageError(f"unknown preset {preset!r} for {args.command}")
        for k, v in PRESETS[args.command][preset].items():
            if k not in explicit and k not in values:
                setattr(args, k, v)
    for k, v in values.items():
        if k != "command" and k not in explicit:
            setattr(args, k, v)
    return args, raw


class _Output:
    """Output directory written under a temporary name and renamed when complete."""

    def __init__(self, target, command):
        if target is None:
            target = f"runs/{command}-{time.strftime('%Y%m%d-%H%M%S')}-{os.getpid()}"
        self.final = Path(target)
        if self.final.exists():
            raise UsageError(f"output directory {self.final} already exists")
        self.final.parent.mkdir(parents=True, exist_ok=True)
        self.path = Path(tempfile.mkdtemp(prefix=f".{self.final.name}.", dir=self.final.parent))

    def __truediv__(self, name):
        return self.path / name

    def commit(self):
        os.rename(self.path, self.final)
        return self.final

    def discard(self):
        shutil.rmtree(self.path, ignore_errors=True)


def _params(n, beta, delta):
    if n is None or beta is None or delta is None:
        raise UsageError("--n, --beta and --delta are required")
    return validate(n, beta, delta)


# --- commands ---------------------------------------------------------------


def cmd_multipliers(args, out):
    from .multipliers import multiplier_array
    from .oracle import multiplier_quadrature

    p = _params(args.n, args.beta, args.delta)
    if not (0 <= args.rmin <= args.rmax):
        raise UsageError("need 0 <= rmin <= rmax")
    r = np.linspace(args.rmin, args.rmax, args.count)
    m = multiplier_array(p, r)
    cols = {"r": r, "m": m}
    if args.oracle:
        if not p.integrable:
            raise UsageError("--oracle needs beta < n + 2")
        q = np.array([multiplier_quadrature(p, x).value for x in r])
        cols["oracle"] = q
        cols["rel_err"] = np.abs(m - q) / np.where(q != 0, np.abs(q), 1.0)
    write_csv(out / "multipliers.csv", cols)
    msg = f"{args.count} multipliers written"
    if args.oracle:
        msg += f"; final rel_err {cols['rel_err'][-1]:.3e}, max {cols['rel_err'].max():.3e}"
    return msg


def cmd_table_bench(args, out):
    from .multipliers import build_table, multiplier, multiplier_array

    p = _params(args.n, args.beta, args.delta)
    if args.M <= args.N or args.M % 2:
        raise UsageError("--M must be even and larger than --N")
    start = time.perf_counter()
    table = build_table(p, args.K, args.N, args.M)
    prep = time.perf_counter() - start
    table.save(out / "table.nlmt")
    probes = np.linspace(0.0, args.K, args.probe_count)
    exact = multiplier_array(p, probes)
    start = time.perf_counter()
    approx = table(probes)
    interp = (time.perf_counter() - start) / probes.size
    sample = probes[:: max(1, probes.size // 200)]
    start = time.perf_counter()
    for x in sample:
        multiplier(p, x)
    direct = (time.perf_counter() - start) / sample.size
    err = float(np.max(np.abs(exact - approx) / (1 + np.abs(exact))))
    write_csv(out / "summary.csv", {
        "n": [p.n], "beta": [p.beta], "delta": [p.delta], "K": [args.K], "N": [args.N], "M": [args.M],
        "max_error": [err], "tail_ratio": [table.tail_ratio()], "prep_s": [prep],
        "avg_interp_s": [interp], "avg_direct_s": [direct], "speedup": [direct / interp],
    })
    write_csv(out / "probes.csv", {"r": probes, "m": exact, "m_table": approx})
    return f"max normalized error {err:.3e}, speedup {direct / interp:.0f}x"


def _initial_2d(kind, x, y):
    if kind == "blob":
        return np.exp(-(x**8) - y**8)
    if kind == "star":
        rad = np.hypot(x, y)
        theta = np.arctan2(y, x)
        return np.exp(-((rad / (4 * (1 + 0.3 * np.sin(5 * theta)))) ** 8))
    return np.exp(-(x * x + y * y))


def _panels(args):
    if args.panels == "fig" and args.beta is None and args.delta is None:
        return FIG_PANELS
    if args.beta is None or args.delta is None:
        raise UsageError("--beta and --delta are required without a figure preset")
    return [(args.beta, args.delta)]


def _linear_2d(args, out, kind):
    from .multipliers import TorusGrid
    from .solvers import HeatSolution, WaveSolution, heat_evolve, wave_energy, wave_evolve

    for name in ("L", "points", "t_end", "times"):
        if getattr(args, name) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required (or use --preset)")
    if args.t_end < 0:
        raise UsageError("--t-end must be non-negative")
    half = args.L / 2
    grid = TorusGrid((args.L, args.L), (args.points, args.points), origin=(-half, -half))
    x, y = grid.mesh()
    init = _initial_2d(getattr(args, "initial", None) or "gauss", x, y)
    times = np.linspace(0.0, args.t_end, args.times) if kind == "heat" or args.times > 1 else [args.t_end]
    rows = {"beta": [], "delta": [], "t": [], "max_u": [], "min_u": [], "energy": [], "cpu_s": []}
    for beta, delta in _panels(args):
        p = validate(2, beta, delta)
        start = time.process_time()
        sol = (HeatSolution if kind == "heat" else WaveSolution).from_initial(p, grid, init)
        sub = out / f"beta{beta:g}_delta{delta:g}"
        sub.mkdir()
        series = SnapshotSeries(sub, "u")
        for t in times:
            u = (heat_evolve(sol, t) if kind == "heat" else wave_evolve(sol, t)).values()
            series.add(u, t)
            rows["beta"].append(beta)
            rows["delta"].append(delta)
            rows["t"].append(t)
            rows["max_u"].append(u.max())
            rows["min_u"].append(u.min())
            rows["energy"].append(wave_energy(sol, t) if kind == "wave" else float(np.sum(u * u)))
            rows["cpu_s"].append(time.process_time() - start)
        series.close({"beta": beta, "delta": delta, "n": 2})
    write_csv(out / "summary.csv", rows)
    return f"{len(rows['t'])} snapshots over {len(set(zip(rows['beta'], rows['delta'])))} panels"


def cmd_heat(args, out):
    return _linear_2d(args, out, "heat")


def cmd_wave(args, out):
    return _linear_2d(args, out, "wave")


def cmd_brusselator(args, out):
    from .multipliers import TorusGrid
    from .solvers import BrusselatorConfig, brusselator_run

    if args.beta is None or args.delta is None:
        raise UsageError("--beta and --delta are required (or use --preset)")
    p = validate(1, args.beta, args.delta)
    if not (args.Du > 0 and args.Dv > 0):
        raise UsageError("diffusivities must be positive")
    grid = TorusGrid((args.L,), (args.N,))
    cfg = BrusselatorConfig(args.Du, args.Dv, args.a, args.b, p, grid, args.t_end, args.cfl)
    x = grid.axes()[0]
    u0 = args.a * (1 + 0.5 * np.sin(np.pi * x / 10))
    v0 = args.b / args.a + 0.1 * np.cos(3 * np.pi * x / 5)
    res = brusselator_run(cfg, u0, v0, snapshots=args.snapshots)
    write_snapshot(out / "u_raster.nlfd", res.u, res.times[-1])
    write_snapshot(out / "v_raster.nlfd", res.v, res.times[-1])
    write_csv(out / "times.csv", {"t": res.times})
    write_csv(out / "final.csv", {"x": x, "u": res.u_final, "v": res.v_final})
    write_csv(out / "summary.csv", {"steps": [res.steps], "dt": [res.dt], "t_end": [args.t_end],
                                    "cpu_s": [res.cpu_seconds]})
    return f"{res.steps} RK4 steps of dt={res.dt:.6g}"


def cmd_wave_compare(args, out):
    from .fd import build_stencil, fd_wave_run
    from .multipliers import TorusGrid
    from .solvers import WaveSolution, wave_evolve, wave_pseudospectral_run

    if args.delta is None or args.n_fd is None or args.r is None:
        raise UsageError("--delta, --n-fd and --r are required (or use --preset)")
    L, T = 20.0, 40.0

    def u0(x):
        return np.exp(-((x - 10.0) ** 8))

    p = validate(1, args.beta, args.delta)
    nref = args.n_reference
    for N in (args.n_spectral, args.n_fd):
        if nref % N:
            raise UsageError("--n-reference must be a multiple of the solver grid sizes")
    ref_grid = TorusGrid((L,), (nref,))
    ref = wave_evolve(WaveSolution.from_initial(p, ref_grid, u0), T).values()

    start = time.process_time()
    grid = TorusGrid((L,), (args.n_spectral,))
    xs = grid.axes()[0]
    spec = wave_pseudospectral_run(p, grid, u0(xs), None, T, args.rtol, args.atol)
    spec_cpu = time.process_time() - start
    spec_err = float(np.abs(spec.u - ref[:: nref // args.n_spectral]).max())

    start = time.process_time()
    dx = L / args.n_fd
    stencil = build_stencil(validate(1, args.beta, args.r * dx), args.r, dx, args.rule)
    xf = np.arange(args.n_fd) * dx
    fd = fd_wave_run(stencil, args.n_fd, u0(xf), None, T, args.rtol, args.atol)
    fd_cpu = time.process_time() - start
    fd_err = float(np.abs(fd.u - ref[:: nref // args.n_fd]).max())

    write_csv(out / "reference.csv", {"x": ref_grid.axes()[0], "u": ref})
    write_csv(out / "spectral.csv", {"x": xs, "u": spec.u})
    write_csv(out / "fd.csv", {"x": xf, "u": fd.u})
    write_csv(out / "summary.csv", {
        "method": ["spectral", "fd"], "delta": [args.delta, args.r * dx], "N": [args.n_spectral, args.n_fd],
        "r": [0, args.r], "error": [spec_err, fd_err], "cpu_s": [spec_cpu, fd_cpu],
    })
    return f"spectral error {spec_err:.3e}, FD error {fd_err:.3e}"


def cmd_fd_spectrum(args, out):
    from .fd import build_fixed_delta_stencil, build_stencil, eigencurve

    if args.beta is None or args.L is None:
        raise UsageError("--beta and --L are required (or use --preset)")
    if args.radii:
        if args.delta is None or args.kmax is None:
            raise UsageError("--radii needs --delta and --kmax")
        p = validate(1, args.beta, args.delta)
        k = np.arange(0, args.kmax + 1)
        lam_true = None
        for r in [int(x) for x in str(args.radii).split(",")]:
            s = build_fixed_delta_stencil(p, args.delta / r, args.rule)
            kk, fd, lam_true, lap = eigencurve(s, args.L, k, lam_true)
            write_csv(out / f"eigencurve_r{r}.csv",
                      {"k": kk, "lambda_fd": fd, "lambda_true": lam_true, "lambda_laplacian": lap})
        return f"fixed-delta eigencurves for radii {args.radii}"
    if args.N is None or args.r is None:
        raise UsageError("--N and --r are required")
    dx = args.L / (2 * args.N + 1)
    s = build_stencil(validate(1, args.beta, args.r * dx), args.r, dx, args.rule)
    kk, fd, lam_true, lap = eigencurve(s, args.L, np.arange(0, args.N + 1))
    write_csv(out / "eigencurve.csv", {"k": kk, "lambda_fd": fd, "lambda_true": lam_true, "lambda_laplacian": lap})
    return f"eigencurve with {args.N + 1} modes"


def cmd_oracle(args, out):
    from .multipliers import multiplier
    from .oracle import multiplier_quadrature

    p = _params(args.n, args.beta, args.delta)
    if not p.integrable:
        raise UsageError("the quadrature oracle needs beta < n + 2")
    if not args.tol >= 1e-14:
        raise UsageError("--tol must be at least 1e-14")
    rows = {"r": [], "quadrature": [], "est_error": [], "evaluations": [], "series": [], "rel_err": []}
    for r in args.r:
        if r < 0:
            raise UsageError("radii must be non-negative")
        q = multiplier_quadrature(p, r, args.tol)
        m = multiplier(p, r)
        rows["r"].append(r)
        rows["quadrature"].append(q.value)
        rows["est_error"].append(q.est_error)
        rows["evaluations"].append(q.evaluations)
        rows["series"].append(m)
        rows["rel_err"].append(abs(m - q.value) / abs(q.value) if q.value else abs(m))
    write_csv(out / "oracle.csv", rows)
    return f"max relative difference {max(rows['rel_err']):.3e}"


def cmd_validate(args):
    from .acceptance import run_all

    select = None
    if args.only:
        try:
            select = {int(x) for x in args.only.split(",")}
        except ValueError:
            raise UsageError("--only takes comma-separated integers") from None
    results = run_all(select)
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    return 0 if passed == len(results) else 1


COMMANDS = {
    "multipliers": cmd_multipliers,
    "table-bench": cmd_table_bench,
    "heat": cmd_heat,
    "wave": cmd_wave,
    "brusselator": cmd_brusselator,
    "wave-compare": cmd_wave_compare,
    "fd-spectrum": cmd_fd_spectrum,
    "oracle": cmd_oracle,
}


def _config_record(args) -> dict:
    skip = {"config", "out"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args, raw = _resolve(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    usage = parser.subcommands[args.command].print_usage
    try:
        if args.command == "validate":
            return cmd_validate(args)
        out = _Output(args.out, args.command)
    except UsageError as exc:
        usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        with open(out / "config.json", "w") as fh:
            json.dump(_config_record(args), fh, indent=2, default=str)
        if raw is not None:
            (out / "config.source.json").write_text(raw)
        (out / "VERSION").write_text(f"nonlocal_spectral {__version__} backend={BACKEND}\n")
        message = COMMANDS[args.command](args, out)
    except (UsageError, KernelParamsError) as exc:
        out.discard()
        usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (HypergeometricConvergenceError, QuadratureError, SimulationError, ArithmeticError) as exc:
        out.discard()
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    except BaseException:
        out.discard()
        raise
    final = out.commit()
    print(f"{message}; output in {final}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
