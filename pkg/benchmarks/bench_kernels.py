"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints best-of-repeat wall time for each kernel and the speedup.
"""
import argparse
import timeit
from fractions import Fraction

import numpy as np

from nonlocal_spectral import _pykernels
from nonlocal_spectral.fd import build_stencil
from nonlocal_spectral.kernel import validate

try:
    from nonlocal_spectral import _ckernels
except ImportError:
    _ckernels = None


def _hypsum_args(z, prec=400):
    # 2F3(1, (n+2-beta)/2; 2, (n+2)/2, (n+4-beta)/2; z) for n=1, beta=1/2
    a = [Fraction(1), Fraction(5, 4)]
    b = [Fraction(2), Fraction(3, 2), Fraction(9, 4)]
    z = Fraction(z)
    return ([x.numerator for x in a], [x.denominator for x in a], [x.numerator for x in b],
            [x.denominator for x in b], z.numerator, z.denominator, prec, 64, 20000)


def cases():
    rng = np.random.default_rng(0)
    x = np.linspace(0.0, 1000.0, 1500)
    y = rng.normal(size=x.size)
    y2 = rng.normal(size=x.size)
    q = rng.uniform(0.0, 1000.0, 100_000)
    s = build_stencil(validate(1, 1 / 3, 0.06), 3, 0.02)
    u = rng.normal(size=8000)
    return {
        "hypsum_fixed z=-2500 (prec 400 bits)": lambda k: k.hypsum_fixed(*_hypsum_args(-2500)),
        "hypsum_fixed z=-250000 (prec 1200 bits)": lambda k: k.hypsum_fixed(*_hypsum_args(-250000, 1200)),
        "spline_eval 1e5 probes": lambda k: k.spline_eval(x, y, y2, q),
        "stencil_apply N=8000 r=3": lambda k: k.stencil_apply(u, s.a),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled kernels not built; only the Python timings are shown")
    print(f"{'kernel':42s} {'python':>11s} {'compiled':>11s} {'speedup':>8s}")
    for name, fn in cases().items():
        tp = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=args.repeat))
        if _ckernels is None:
            print(f"{name:42s} {tp:11.3e}")
            continue
        tc = min(timeit.repeat(lambda: fn(_ckernels), number=1, repeat=args.repeat))
        print(f"{name:42s} {tp:11.3e} {tc:11.3e} {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
