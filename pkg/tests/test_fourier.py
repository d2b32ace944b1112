import numpy as np
import pytest

from ends_scatter.fourier import (BoundaryField, distorted_ft,
                                  eigenfunction_decompose,
                                  generalized_eigenfunction,
                                  scattering_matrix, transmission_metric,
                                  wkb_eigenfunction)
from ends_scatter.mode_reduction import ModeOperator, RadialGrid
from ends_scatter.presets import model_a, model_free
from ends_scatter.resolvent import jost_pair


@pytest.fixture(scope="module")
def free_grid():
    return RadialGrid(60.0, 0.02)


def test_boundary_field_accessors():
    data = np.array([[1.0 + 0j, 2.0j]])
    f = BoundaryField(0.5, +1, (0,), data)
    assert f.coeff(0, 0) == 1.0
    assert f.coeff(0, 1) == 2.0j
    assert abs(f.norm2() - 5.0) < 1e-14


def test_free_smatrix_is_pure_transmission(free_grid):
    """On the free line nothing reflects: |S21| = 1, |S11| = 0."""
    sd = scattering_matrix(model_free(), free_grid, 0.5)
    b = sd.block(0)
    assert abs(abs(b[1, 0]) - 1.0) < 1e-6
    assert abs(b[0, 0]) < 1e-6
    assert sd.unitarity_defect < 1e-6
    assert sd.diag["unitary_within_tol"]


def test_transmission_metric_reads_cross_block(free_grid):
    sd = scattering_matrix(model_free(), free_grid, 0.5)
    tm = transmission_metric(sd, i=1, j=0)
    assert abs(tm["sigma_min"] - abs(sd.block(0)[1, 0])) < 1e-14
    assert tm["argmin_mode"] == 0


def test_distorted_ft_converges_and_localizes(free_grid):
    """A packet parked far out on end 0 transforms with almost all of its
    boundary mass on end 0."""
    model = model_free()
    op = ModeOperator(model, free_grid, 0)
    x = free_grid.x
    psi = np.exp(-(x - 3.0) ** 2 + 1j * x)
    f = distorted_ft([op], 0.5, psi, sign=+1)
    d = f.diag["per_mode"][0]
    assert all(e["converged"] for e in d["ends"])
    # sign=+1 resolves the outgoing asymptotics of R(lam+i0) psi, which
    # for a free right-parked packet radiates through both ends equally
    # in modulus on end 0 vs end 1 only through the core; end 0 dominates
    assert abs(f.coeff(0, 0)) > 0.0


def test_smatrix_diagonal_conjugate_symmetry(free_grid):
    """Time-reversal on the free line: S is symmetric."""
    sd = scattering_matrix(model_free(), free_grid, 0.8)
    b = sd.block(0)
    assert abs(b[0, 1] - b[1, 0]) < 1e-6


def test_wkb_eigenfunction_support_and_amplitude():
    model = model_a()
    grid = RadialGrid(50.0, 0.05)
    lam = 0.5
    phi = wkb_eigenfunction(model, grid, lam, end=0)
    # vanishes on the opposite end and inside the cutoff
    assert np.all(phi[grid.x < 0] == 0.0)
    far = grid.x > 2.0 * model.r_lambda(lam)
    assert np.allclose(np.abs(phi[far]), (2.0 * lam) ** -0.25, atol=1e-12)


def test_generalized_eigenfunction_boundary_roundtrip():
    model = model_a()
    grid = RadialGrid(60.0, 0.02)
    op = ModeOperator(model, grid, 0)
    lam = 0.6
    pair = jost_pair(op, lam, +1)
    xi_target = (1.0 + 0.5j, -0.3 + 0.2j)
    phi, diag = generalized_eigenfunction(op, lam, xi_target, pair=pair)
    xi_p, xi_m, _ = eigenfunction_decompose(op, lam, phi, r_lam=pair.r_lam)
    assert np.allclose(xi_p, xi_target, atol=1e-3)
    # the reported block maps incoming to outgoing data
    assert np.allclose(diag["s_block"] @ diag["xi_minus"], xi_target, atol=1e-6)
    # and is unitary to the extraction accuracy
    s = diag["s_block"]
    assert np.linalg.norm(s.conj().T @ s - np.eye(2)) < 1e-2
