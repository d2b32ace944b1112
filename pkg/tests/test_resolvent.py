import numpy as np
import pytest

from ends_scatter.mode_reduction import ModeOperator, RadialGrid
from ends_scatter.oracle import free_green
from ends_scatter.presets import model_a, model_b, model_free
from ends_scatter.resolvent import (jost_pair, limiting_resolvent,
                                    radiation_residual, sommerfeld_check)


@pytest.fixture(scope="module")
def free_setup():
    grid = RadialGrid(40.0, 0.05)
    op = ModeOperator(model_free(), grid, 0)
    psi = np.exp(-grid.x**2 / 2.0).astype(complex)
    return op, psi


def test_free_resolvent_matches_green_kernel(free_setup):
    """On the exactly free line the marched resolvent must reproduce the
    closed-form outgoing Green kernel convolution."""
    op, psi = free_setup
    grid = op.grid
    lam = 0.5
    phi, diag = limiting_resolvent(op, lam, psi)
    oracle = grid.dx * (free_green(grid.x, grid.x, lam) @ psi)
    # compare away from the truncation boundary
    core = np.abs(grid.x) <= 30.0
    err = grid.norm((phi - oracle)[core]) / grid.norm(oracle[core])
    assert err < 2e-4  # grid discretization floor at dx = 0.05
    assert diag["interior_residual"] < 1e-6


def test_incoming_is_conjugate_of_outgoing(free_setup):
    op, psi = free_setup
    lam = 0.7
    phi_p, _ = limiting_resolvent(op, lam, psi, sign=+1)
    phi_m, _ = limiting_resolvent(op, lam, np.conj(psi), sign=-1)
    assert np.allclose(phi_m, np.conj(phi_p), atol=1e-8)


@pytest.mark.parametrize("model,lam", [(model_a(), 0.6), (model_b(), 0.5)])
def test_interior_residual_and_wronskian(model, lam):
    grid = RadialGrid(40.0, 0.02)
    op = ModeOperator(model, grid, 0)
    psi = np.exp(-(grid.x - 1.0) ** 2).astype(complex)
    lam = lam + max(e.lambda0 for e in model.ends)
    phi, diag = limiting_resolvent(op, lam, psi)
    assert diag["interior_residual"] < 1e-5
    assert diag["wronskian_drift"] < 1e-6


def test_imaginary_part_positive():
    """Im <psi, R(lam + i0) psi> = pi ||F(lam) psi||^2 / 2 >= 0."""
    grid = RadialGrid(40.0, 0.02)
    op = ModeOperator(model_a(), grid, 0)
    psi = np.exp(-(grid.x - 0.5) ** 2 + 0.2j * grid.x)
    for lam in (0.4, 0.8):
        phi, _ = limiting_resolvent(op, lam, psi)
        assert np.imag(grid.inner(psi, phi)) > 0.0


def test_radiation_residual_discriminates_branches():
    """The weighted defect norm is an O(1) certified constant for the
    matching branch and must be clearly larger against the wrong one."""
    grid = RadialGrid(40.0, 0.02)
    op = ModeOperator(model_a(), grid, 0)
    psi = np.exp(-(grid.x - 0.5) ** 2).astype(complex)
    lam = 0.6
    phi, _ = limiting_resolvent(op, lam, psi)
    good = radiation_residual(op, lam, phi, psi, sign=+1)
    bad = radiation_residual(op, lam, phi, psi, sign=-1)
    assert np.isfinite(good["ratio"]) and good["ratio"] > 0.0
    assert bad["ratio"] > 2.0 * good["ratio"]
    with pytest.raises(ValueError):
        radiation_residual(op, lam, phi, psi, beta=op.model.beta_c)


def test_sommerfeld_certificate_discriminates():
    grid = RadialGrid(40.0, 0.02)
    op = ModeOperator(model_a(), grid, 0)
    psi = np.exp(-(grid.x - 0.5) ** 2).astype(complex)
    lam = 0.6
    phi, _ = limiting_resolvent(op, lam, psi, sign=+1)
    assert sommerfeld_check(op, lam, phi, psi, sign=+1)["passes"]
    # the outgoing solution is not incoming: checked against the wrong
    # branch the defect must be macroscopic
    wrong = sommerfeld_check(op, lam, phi, psi, sign=-1)
    assert not wrong["passes"]
    assert wrong["bstar0_relative"] > 0.1


def test_jost_pair_rejects_subthreshold_energy():
    grid = RadialGrid(30.0, 0.05)
    op = ModeOperator(model_b(), grid, 0)
    with pytest.raises(ValueError):
        jost_pair(op, 0.1)  # below the 1/8 threshold of the hyperbolic end
