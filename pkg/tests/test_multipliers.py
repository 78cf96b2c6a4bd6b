import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nonlocal_spectral._backend import kernels
from nonlocal_spectral.kernel import validate
from nonlocal_spectral.multipliers import (
    MultiplierTable,
    TableAccuracyWarning,
    TableRangeError,
    TorusGrid,
    build_table,
    chebyshev_nodes,
    eigenvalue_lattice,
    lattice_radii,
    load_table,
    multiplier,
    multiplier_array,
    multiplier_asymptotic,
    natural_spline_second,
    near_zero_constant,
    table_eval,
    zero_pad_resample,
)

# -r^2 2F3(...) from mpmath at 50 digits
MULT_REF = [
    ((1, 0.25, 0.1, 1.0), -0.9995176570127853),
    ((1, 1.0, 0.1, 999.0), -2074.9480697580075),
    ((2, 0.5, 1.2, 37.5), -6.460240879377974),
    ((2, 2.3, 0.4, 800.0), -632.6164343675614),
    ((3, 4.5, 0.1, 500.0), -70698.2669302638),
    ((3, -1.0, 2.0, 50.0), -2.250785226349202),
    ((2, 7.0, 0.3, 20.0), 4586.069767289665),
    ((1, 2.5, 1.0, 3000.0), -274586.70311912976),
]


@pytest.mark.parametrize("args, ref", MULT_REF)
def test_multiplier_reference(args, ref):
    n, beta, delta, r = args
    assert multiplier(validate(n, beta, delta), r) == pytest.approx(ref, rel=2e-13)


def test_multiplier_at_zero_and_negative_radius():
    p = validate(2, 1.0, 0.5)
    assert multiplier(p, 0.0) == 0.0
    with pytest.raises(ValueError):
        multiplier(p, -1.0)


@given(st.integers(1, 3), st.floats(0.0, 1000.0), st.floats(0.01, 5.0))
def test_classical_multiplier_is_exact(n, r, delta):
    assert multiplier(validate(n, n + 2, delta), r) == -r * r


@given(st.sampled_from([(1, 0.25), (1, 1.5), (2, 0.75), (2, 3.0), (3, 1.75), (3, 4.5)]),
       st.floats(0.0, 0.1))
def test_near_zero_bound(row, r):
    p = validate(row[0], row[1], 0.1)
    C = near_zero_constant(p)
    eps = np.finfo(float).eps
    assert abs(multiplier(p, r) + r * r) <= C * r**4 * (1 + 1e-6) + 4 * eps * r * r


def test_near_zero_constant_value():
    # (delta^2/4) * a1 a2 / (b1 b2 b3) with a2=(n+2-beta)/2, b3=(n+4-beta)/2
    p = validate(1, 0.25, 0.1)
    expected = 0.01 / 4 * (2.75 / 2) / (2 * 1.5 * 4.75 / 2)
    assert near_zero_constant(p) == pytest.approx(expected, rel=1e-15)


def test_asymptotic_power_branch():
    p = validate(1, 0.25, 0.1)
    gaps = [abs(multiplier(p, r) / multiplier_asymptotic(p, r) - 1) for r in (1e3, 1e4, 1e5)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 1e-2


def test_asymptotic_log_branch():
    p = validate(2, 2.0, 0.1)
    gaps = [abs(multiplier(p, r) / multiplier_asymptotic(p, r) - 1) for r in (1e3, 1e4, 1e5)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 1e-2


def test_asymptotic_rejects_poles():
    with pytest.raises(ValueError):
        multiplier_asymptotic(validate(1, 3.0, 0.1), 10.0)


def test_multiplier_array_parallel_matches_serial():
    p = validate(2, 0.75, 0.3)
    r = np.linspace(0, 500, 300)
    assert np.array_equal(multiplier_array(p, r, workers=1), multiplier_array(p, r, workers=2))


def _naive_radii(grid):
    # same formula, without deduplication
    alphas = np.meshgrid(*grid.alpha_axes(), indexing="ij")
    groups = {}
    for i, l in enumerate(grid.lengths):
        groups.setdefault(l, []).append(i)
    q = 0.0
    for l, dims in groups.items():
        q = q + sum(alphas[d] ** 2 for d in dims) / (l * l)
    return 2 * np.pi * np.sqrt(q)


@pytest.mark.parametrize("lengths, points", [((7.0,), (33,)), ((3.0, 3.0), (16, 20)),
                                             ((2.0, 5.0, 2.0), (8, 6, 10))])
def test_lattice_radii_deduplication_is_exact(lengths, points):
    grid = TorusGrid(lengths, points)
    radii, inverse = lattice_radii(grid)
    assert np.array_equal(radii[inverse], _naive_radii(grid))
    assert radii.size == np.unique(radii).size


def test_eigenvalue_lattice_layout():
    grid = TorusGrid((10.0,), (16,))
    p = validate(1, 1.0, 0.7)
    lam = eigenvalue_lattice(p, grid)
    nu = 2 * np.pi * np.fft.fftfreq(16, 10.0 / 16)
    assert lam[0] == 0.0
    assert np.allclose(lam, [multiplier(p, abs(v)) for v in nu], rtol=1e-14)


def test_eigenvalue_lattice_table_matches_direct():
    grid = TorusGrid((20.0, 20.0), (64, 64))
    p = validate(2, 1.5, 0.8)
    direct = eigenvalue_lattice(p, grid, "direct")
    table = eigenvalue_lattice(p, grid, "table")
    assert np.max(np.abs(direct - table) / (1 + np.abs(direct))) < 1e-10


def test_chebyshev_nodes():
    x = chebyshev_nodes(10.0, 8)
    assert x[0] == 10.0 and x[-1] == 0.0
    assert np.allclose(x, 5 * (1 + np.cos(2 * np.pi * np.arange(5) / 8)), atol=1e-14)
    assert np.all(np.diff(x) < 0)


@given(st.integers(4, 40).map(lambda k: 2 * k), st.integers(1, 5))
def test_zero_padding_reproduces_trig_polynomials(N, factor):
    M = N * factor + 2
    rng = np.random.default_rng(N)
    deg = N // 2 - 1
    c = rng.normal(size=deg + 1)
    s = rng.normal(size=deg + 1)

    def f(theta):
        k = np.arange(deg + 1)
        return np.cos(np.multiply.outer(theta, k)) @ c + np.sin(np.multiply.outer(theta, k)) @ s

    coarse = f(2 * np.pi * np.arange(N) / N)
    fine = zero_pad_resample(coarse, M)
    assert np.allclose(fine, f(2 * np.pi * np.arange(M) / M), atol=1e-12 * np.abs(c).sum())


def test_natural_spline_reproduces_lines():
    x = np.sort(np.random.default_rng(1).uniform(0, 10, 30))
    y = 3 * x - 2
    y2 = natural_spline_second(x, y)
    q = np.linspace(x[0], x[-1], 997)
    assert np.allclose(kernels.spline_eval(x, y, y2, q), 3 * q - 2, rtol=0, atol=1e-12)


@pytest.fixture(scope="module")
def small_table():
    return build_table(validate(2, 2.3, 0.4), 200.0, 200, 4000)


def test_table_accuracy_and_endpoints(small_table):
    p = small_table.params
    assert small_table(0.0) == 0.0
    assert small_table(200.0) == pytest.approx(multiplier(p, 200.0), rel=1e-13)
    probes = np.linspace(0, 200, 501)
    exact = multiplier_array(p, probes)
    assert np.max(np.abs(small_table(probes) - exact) / (1 + np.abs(exact))) < 1e-9


def test_table_range_error(small_table):
    with pytest.raises(TableRangeError):
        small_table(200.0001)
    with pytest.raises(TableRangeError):
        table_eval(small_table, [-1e-3, 1.0])


def test_table_save_load_roundtrip(small_table, tmp_path):
    path = tmp_path / "t.nlmt"
    small_table.save(path)
    raw = path.read_bytes()
    assert raw[:4] == b"NLMT"
    assert len(raw) == 4 + 4 + 4 + 8 * 3 + 8 + 2 * 8 * (small_table.M // 2 + 1)
    loaded = load_table(path)
    q = np.linspace(0, 200, 333)
    assert np.array_equal(loaded(q), small_table(q))
    with pytest.raises(ValueError):
        path.write_bytes(b"XXXX" + raw[4:])
        load_table(path)


def test_table_csv(small_table, tmp_path):
    small_table.to_csv(tmp_path / "t.csv")
    data = np.loadtxt(tmp_path / "t.csv", delimiter=",", skiprows=1)
    assert data.shape == (small_table.M // 2 + 1, 2)
    assert np.all(np.diff(data[:, 0]) > 0)


def test_underresolved_table_warns():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        t = build_table(validate(2, 0.5, 1.2), 1000.0, 64, 1000)
    assert any(issubclass(w.category, TableAccuracyWarning) for w in caught)
    assert t.tail_ratio() > 1e-12


def test_table_build_validates_sizes():
    p = validate(1, 1.0, 1.0)
    with pytest.raises(ValueError):
        build_table(p, 10.0, 100, 99)
    with pytest.raises(ValueError):
        build_table(p, 10.0, 100, 201)
    with pytest.raises(ValueError):
        build_table(p, -1.0, 100, 200)


def test_torus_grid_validation():
    with pytest.raises(ValueError):
        TorusGrid((1.0, 2.0), (4,))
    with pytest.raises(ValueError):
        TorusGrid((0.0,), (4,))
    g = TorusGrid((2.0,), (4,), origin=(-1.0,))
    assert np.allclose(g.axes()[0], [-1, -0.5, 0, 0.5])
    assert math.isclose(g.spacing[0], 0.5)
