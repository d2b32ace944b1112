import numpy as np
import pytest

from ends_scatter.dynamics import SpectralProfile
from ends_scatter.mode_reduction import ModeOperator, RadialGrid
from ends_scatter.presets import model_a, model_d, model_free
from ends_scatter.propagator import (EvolutionConfig, cook_integrand,
                                     embed_end_state, end_mass,
                                     end_projection, energy_filter, evolve,
                                     wave_operator)


@pytest.fixture(scope="module")
def setup():
    grid = RadialGrid(40.0, 0.05)
    op = ModeOperator(model_a(), grid, 0)
    psi = np.exp(-(grid.x - 3.0) ** 2 + 1j * grid.x)
    psi = psi / grid.norm(psi)
    return op, psi


def test_evolve_preserves_norm_and_reverses(setup):
    op, psi = setup
    cfg = EvolutionConfig(dt=0.02)
    fwd, diag = evolve(op, psi, 2.0, cfg)
    assert diag["norm_drift"] < 1e-10
    back, _ = evolve(op, fwd, -2.0, cfg)
    assert op.grid.norm(back - psi) < 1e-12


def test_implicit_step_matches_spectral_reference(setup):
    """The Pade(2,2) stepper against the Chebyshev polynomial propagator
    (an entirely different discretization of e^{-itH})."""
    op, psi = setup
    a, _ = evolve(op, psi, 1.0, EvolutionConfig(dt=0.005))
    b, _ = evolve(op, psi, 1.0, EvolutionConfig(scheme="chebyshev"))
    assert op.grid.norm(a - b) < 1e-6


def test_free_gaussian_dispersion(setup):
    """On the free line a packet at momentum k translates at speed k."""
    grid = RadialGrid(60.0, 0.05)
    op = ModeOperator(model_free(), grid, 0)
    k = 1.0
    psi = np.exp(-grid.x**2 / 2.0 + 1j * k * grid.x)
    psi /= grid.norm(psi)
    t = 10.0
    out, _ = evolve(op, psi, t, EvolutionConfig(dt=0.02))
    center = grid.dx * np.sum(grid.x * np.abs(out) ** 2)
    assert abs(center - k * t) < 0.05


def test_evolution_config_validation(setup):
    op, _ = setup
    with pytest.raises(ValueError):
        EvolutionConfig(scheme="magic").validate(op)
    with pytest.raises(ValueError):
        EvolutionConfig(order=3).validate(op)
    with pytest.raises(ValueError):
        EvolutionConfig(dt=-1.0).validate(op)
    opd = ModeOperator(model_d(), RadialGrid(10.0, 0.05), 0)
    with pytest.raises(ValueError):
        EvolutionConfig(dt=100.0).validate(opd)  # dt * max|W| too large


def test_evolve_zero_time_is_identity(setup):
    op, psi = setup
    out, diag = evolve(op, psi, 0.0)
    assert diag["steps"] == 0
    assert np.array_equal(out, psi)


def test_embed_end_state():
    grid = RadialGrid(10.0, 0.1)
    r = np.linspace(0.0, 10.0, 101)
    vals = np.exp(-(r - 4.0) ** 2).astype(complex)
    u0 = embed_end_state(grid, 0, r, vals)
    u1 = embed_end_state(grid, 1, r, vals)
    assert np.all(u0[grid.x < 0] == 0.0)
    assert np.all(u1[grid.x >= 0] == 0.0)
    assert abs(grid.norm(u0) - grid.norm(u1)) < 1e-10


def test_cook_integrand_decays(setup):
    model = model_a()
    h = SpectralProfile.bump_profile()
    early = cook_integrand(model, h, 20.0)
    late = cook_integrand(model, h, 80.0)
    assert late < 0.5 * early


def test_energy_filter_selects_window():
    grid = RadialGrid(40.0, 0.05)
    op = ModeOperator(model_free(), grid, 0)
    env = np.exp(-grid.x**2 / 32.0)  # narrow in momentum
    k_in = 1.0    # lam = 0.5, inside [0.3, 0.8]
    k_out = 2.6   # lam = 3.38, far outside
    lo = env * np.exp(1j * k_in * grid.x)
    hi = env * np.exp(1j * k_out * grid.x)
    cfg = EvolutionConfig(dt=0.05)
    g_lo = energy_filter(op, lo, 0.3, 0.8, smoothing=0.1, cfg=cfg)
    g_hi = energy_filter(op, hi, 0.3, 0.8, smoothing=0.1, cfg=cfg)
    assert grid.norm(g_lo) > 0.8 * grid.norm(lo)
    assert grid.norm(g_hi) < 0.05 * grid.norm(hi)


def test_end_mass_and_projection(setup):
    grid = RadialGrid(60.0, 0.05)
    op = ModeOperator(model_free(), grid, 0)
    psi = np.exp(-grid.x**2 / 8.0 + 1j * grid.x)
    psi /= grid.norm(psi)
    assert end_mass(grid, psi, 0, 30.0) < 1e-6
    proj = end_projection(op, psi, 0, [20.0, 30.0, 40.0], r_min=10.0,
                          cfg=EvolutionConfig(dt=0.05))
    assert proj["stabilized"]
    # a right-moving free packet ends up (almost) entirely on end 0
    assert proj["mass"] > 0.98


def test_wave_operator_validates_time_grid(setup):
    op, _ = setup
    h = SpectralProfile.bump_profile()
    with pytest.raises(ValueError):
        wave_operator(op, model_a(), h, [10.0, 10.0])
    with pytest.raises(ValueError):
        wave_operator(op, model_a(), h, [10.0, 20.0], dynamics="bogus")
