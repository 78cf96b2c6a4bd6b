import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import cumulative_simpson

from nonlocal_spectral.kernel import validate
from nonlocal_spectral.multipliers import TorusGrid, build_table, multiplier
from nonlocal_spectral.solvers import (
    BrusselatorConfig,
    HeatSolution,
    SimulationError,
    SpectralField,
    WaveSolution,
    apply_operator,
    brusselator_rhs,
    brusselator_run,
    dealias,
    dealias_mask,
    heat_evolve,
    lattice_eigenvalues,
    wave_energy,
    wave_evolve,
    wave_pseudospectral_run,
    wave_velocity,
)

GRID2 = TorusGrid((2 * np.pi, 4.0), (24, 20))
P2 = validate(2, 1.2, 0.9)


def _mode(grid, alpha):
    x, y = grid.mesh()
    nu = [2 * np.pi * a / l for a, l in zip(alpha, grid.lengths)]
    return np.cos(nu[0] * x + nu[1] * y), float(np.hypot(*nu))


def test_field_roundtrip(rng):
    u = rng.normal(size=GRID2.shape)
    f = SpectralField.from_values(GRID2, u)
    assert np.max(np.abs(f.values() - u)) <= 1e-13 * np.abs(u).max()
    c = f.coeffs
    # conjugate symmetry of a real field
    assert np.allclose(c[1:, 1:], np.conj(c[1:, 1:][::-1, ::-1]))


def test_field_shape_checked():
    with pytest.raises(ValueError):
        SpectralField.from_values(GRID2, np.zeros((3, 3)))


def test_heat_identity_at_zero(rng):
    u = rng.normal(size=GRID2.shape)
    sol = HeatSolution.from_initial(P2, GRID2, u)
    assert np.array_equal(heat_evolve(sol, 0.0).coeffs, sol.u0_hat)
    with pytest.raises(ValueError):
        heat_evolve(sol, -1.0)


def test_heat_single_mode():
    mode, r = _mode(GRID2, (2, 3))
    lam = multiplier(P2, r)
    sol = HeatSolution.from_initial(P2, GRID2, mode)
    for t in (0.1, 0.8, 2.0):
        assert np.abs(heat_evolve(sol, t).values() - np.exp(lam * t) * mode).max() <= 1e-12


def test_heat_mean_preserved(rng):
    u = rng.normal(size=GRID2.shape) + 3.0
    sol = HeatSolution.from_initial(P2, GRID2, u)
    assert heat_evolve(sol, 5.0).coeffs[0, 0] == sol.u0_hat[0, 0]


def test_heat_l2_norm_nonincreasing(rng):
    for _ in range(50):
        u = rng.normal(size=GRID2.shape)
        sol = HeatSolution.from_initial(P2, GRID2, u)
        assert np.all(sol.eigen <= 0)
        norms = [np.linalg.norm(heat_evolve(sol, t).values()) for t in (0.0, 0.01, 0.1, 1.0)]
        assert all(b <= a * (1 + 1e-14) for a, b in zip(norms, norms[1:]))


def test_wave_single_mode():
    mode, r = _mode(GRID2, (1, 2))
    lam = multiplier(P2, r)
    sol = WaveSolution.from_initial(P2, GRID2, mode)
    for t in (0.5, 3.0, 9.0):
        assert np.abs(wave_evolve(sol, t).values() - np.cos(np.sqrt(-lam) * t) * mode).max() <= 1e-12


def test_wave_initial_conditions(rng):
    u0 = rng.normal(size=GRID2.shape)
    v0 = rng.normal(size=GRID2.shape)
    sol = WaveSolution.from_initial(P2, GRID2, u0, v0)
    assert np.allclose(wave_evolve(sol, 0.0).values(), u0, atol=1e-13)
    h = 1e-6
    fd = (wave_evolve(sol, h).values() - wave_evolve(sol, 0.0).values()) / h
    assert np.allclose(fd, v0, rtol=1e-6, atol=1e-5 * np.abs(v0).max())
    assert np.allclose(wave_velocity(sol, 0.0).values(), v0, atol=1e-13)


def test_wave_zero_mode_is_linear_in_time():
    grid = TorusGrid((3.0,), (8,))
    sol = WaveSolution.from_initial(validate(1, 1.0, 0.5), grid, np.full(8, 2.0), np.full(8, 0.5))
    assert np.allclose(wave_evolve(sol, 4.0).values(), 4.0)


def test_wave_growing_modes_use_hyperbolic_form():
    grid = TorusGrid((2 * np.pi,), (16,))
    k = np.fft.fftfreq(16, 1 / 16)
    lam = np.where(np.abs(k) == 3, 4.0, -(k**2))
    x = grid.axes()[0]
    sol = WaveSolution.from_initial(lam, grid, np.cos(3 * x), np.cos(3 * x))
    t = 0.7
    expected = (np.cosh(2 * t) + np.sinh(2 * t) / 2) * np.cos(3 * x)
    assert np.allclose(wave_evolve(sol, t).values(), expected, rtol=1e-13, atol=1e-13)


def test_positive_multipliers_exist_between_poles():
    lam = lattice_eigenvalues(validate(2, 7.0, 0.3), TorusGrid((2 * np.pi, 2 * np.pi), (16, 16)))
    assert lam.max() > 0


def test_wave_energy_conserved():
    x, y = GRID2.mesh()
    sol = WaveSolution.from_initial(P2, GRID2, np.exp(-((x - 3) ** 2) - (y - 2) ** 2), np.sin(y * np.pi / 2))
    e = [wave_energy(sol, t) for t in np.linspace(0, 10, 11)]
    assert np.max(np.abs(np.array(e) / e[0] - 1)) <= 1e-10


def test_apply_operator_basics(rng):
    const = SpectralField.from_values(GRID2, np.full(GRID2.shape, 4.0))
    assert np.abs(apply_operator(P2, const).values()).max() <= 1e-12
    u = rng.normal(size=GRID2.shape)
    f = SpectralField.from_values(GRID2, u)
    classical = apply_operator(validate(2, 4.0, 0.3), f)
    kx, ky = np.meshgrid(*GRID2.frequency_axes(), indexing="ij")
    assert np.array_equal(classical.coeffs, -(kx**2 + ky**2) * f.coeffs) or np.allclose(
        classical.coeffs, -(kx**2 + ky**2) * f.coeffs, rtol=1e-15)


@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 1000))
def test_apply_operator_linear(a, b, seed):
    r = np.random.default_rng(seed)
    f = SpectralField.from_values(GRID2, r.normal(size=GRID2.shape))
    g = SpectralField.from_values(GRID2, r.normal(size=GRID2.shape))
    lhs = apply_operator(P2, f * a + g * b).values()
    rhs = a * apply_operator(P2, f).values() + b * apply_operator(P2, g).values()
    scale = max(1.0, np.abs(rhs).max())
    assert np.abs(lhs - rhs).max() <= 1e-13 * scale


def test_apply_operator_three_modes():
    x, y = GRID2.mesh()
    modes = [(1, 0), (2, 3), (4, 1)]
    total = 0
    expected = 0
    for a in modes:
        m, r = _mode(GRID2, a)
        total = total + m
        expected = expected + multiplier(P2, r) * m
    out = apply_operator(P2, SpectralField.from_values(GRID2, total)).values()
    assert np.abs(out - expected).max() <= 1e-12 * np.abs(expected).max()


def test_apply_operator_with_table():
    grid = TorusGrid((10.0,), (64,))
    p = validate(1, 0.5, 1.0)
    table = build_table(p, 25.0, 200, 4000)
    f = SpectralField.from_values(grid, np.sin(2 * np.pi * grid.axes()[0] / 10))
    assert np.allclose(apply_operator(table, f).coeffs, apply_operator(p, f).coeffs, rtol=1e-9, atol=1e-9)
    small = build_table(p, 5.0, 50, 400)
    with pytest.raises(ValueError):
        apply_operator(small, f)


def test_dealias_idempotent(rng):
    f = SpectralField.from_values(GRID2, rng.normal(size=GRID2.shape))
    once = dealias(f)
    assert np.array_equal(dealias(once).coeffs, once.coeffs)
    mask = dealias_mask((12,))
    assert mask.sum() == 9  # |alpha| <= 4
    assert np.array_equal(dealias_mask((12,), rfft=True), mask[:7])


def _bconfig(N=64, beta=2.0, delta=0.5, t_end=1.0):
    return BrusselatorConfig(0.0625, 0.12, 3.0, 11.0, validate(1, beta, delta), TorusGrid((20.0,), (N,)), t_end)


def test_brusselator_fixed_point_rhs_exact():
    cfg = _bconfig()
    du, dv = brusselator_rhs(cfg, np.full(64, 3.0), np.full(64, 11.0 / 3.0))
    assert np.abs(du).max() == 0.0
    assert np.abs(dv).max() <= 1e-28


def test_brusselator_linearization():
    # u = a, v = b/a + eps cos(k x): du/dt = a^2 eps cos(k x) + O(eps^2)
    cfg = _bconfig()
    x = cfg.grid.axes()[0]
    mode = np.cos(2 * np.pi * 3 * x / 20)
    u = np.full(64, 3.0)
    eps = 1e-4
    du_p, _ = brusselator_rhs(cfg, u, 11 / 3 + eps * mode)
    du_m, _ = brusselator_rhs(cfg, u, 11 / 3 - eps * mode)
    derivative = (du_p - du_m) / (2 * eps)
    assert np.allclose(derivative, 9.0 * mode, atol=1e-8)


def test_brusselator_rhs_accepts_fields():
    cfg = _bconfig()
    u = SpectralField.from_values(cfg.grid, np.full(64, 3.0))
    v = SpectralField.from_values(cfg.grid, np.full(64, 11 / 3))
    du, dv = brusselator_rhs(cfg, u, v)
    assert np.abs(du).max() < 1e-12


def test_brusselator_step_count_for_paper_configuration():
    cfg = _bconfig(N=1600, t_end=40.0)
    assert cfg.dt == pytest.approx(2.96875e-4, rel=1e-15)
    assert abs(cfg.steps - 134_738) <= 1


def test_brusselator_mean_follows_reaction_ode():
    # diffusion leaves the mean alone, so d<u>/dt = a - (b+1)<u> + <u^2 v> on the grid
    cfg = BrusselatorConfig(0.0625, 0.12, 3.0, 11.0, validate(1, 2.0, 0.5), TorusGrid((20.0,), (128,)), 0.5,
                            cfl_const=0.2)
    x = cfg.grid.axes()[0]
    res = brusselator_run(cfg, 3 * (1 + 0.5 * np.sin(np.pi * x / 10)), 11 / 3 + 0.1 * np.cos(3 * np.pi * x / 5),
                          save_every=1)
    mean_u = res.u.mean(axis=1)
    rate = cfg.a - (cfg.b + 1) * mean_u + (res.u**2 * res.v).mean(axis=1)
    integral = cumulative_simpson(rate, x=res.times, initial=0.0)
    assert np.abs(mean_u - mean_u[0] - integral).max() <= 1e-6


def test_brusselator_last_step_lands_on_t_end():
    cfg = _bconfig(N=32, t_end=0.1)
    res = brusselator_run(cfg, np.full(32, 3.0), np.full(32, 11 / 3), snapshots=3)
    assert res.times[-1] == 0.1
    assert res.steps == cfg.steps


def test_brusselator_instability_detected():
    cfg = BrusselatorConfig(0.0625, 0.12, 3.0, 11.0, validate(1, 3.0, 0.5), TorusGrid((20.0,), (256,)), 1.0,
                            cfl_const=40.0)
    x = cfg.grid.axes()[0]
    with pytest.raises(SimulationError, match="max\\|u\\|"):
        brusselator_run(cfg, 3 + 0.1 * np.sin(x), np.full(256, 11 / 3))


def test_brusselator_config_validation():
    with pytest.raises(ValueError):
        BrusselatorConfig(0.0, 0.1, 3, 11, validate(1, 2, 1), TorusGrid((1.0,), (8,)), 1.0)
    with pytest.raises(ValueError):
        BrusselatorConfig(0.1, 0.1, 3, 11, validate(1, 2, 1), TorusGrid((1.0,), (8,)), 0.0)


def test_pseudospectral_wave_matches_semi_analytic():
    grid = TorusGrid((20.0,), (128,))
    p = validate(1, 1 / 3, 0.3)
    x = grid.axes()[0]
    u0 = np.cos(2 * np.pi * 4 * x / 20)
    run = wave_pseudospectral_run(p, grid, u0, None, 5.0)
    exact = wave_evolve(WaveSolution.from_initial(p, grid, u0), 5.0).values()
    assert np.abs(run.u - exact).max() <= 1e-6
    assert run.evaluations > 0


def test_pseudospectral_wave_failure_raises():
    grid = TorusGrid((20.0,), (16,))
    lam = np.full(16, np.nan)
    with pytest.raises(SimulationError):
        wave_pseudospectral_run(lam, grid, np.ones(16), None, 1.0)
