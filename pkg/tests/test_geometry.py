import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ends_scatter.geometry import (CutoffFamily, EndProfile, ManifoldModel,
                                   bump, classify_potential, critical_energy,
                                   numeric_derivative, phase_b,
                                   phase_integral, riccati_residual,
                                   smooth_step, tail_q1)
from ends_scatter.presets import model_a, model_b, model_c, model_d, model_free


# ---------------------------------------------------------------------------
# cutoffs
# ---------------------------------------------------------------------------

@given(st.floats(-50.0, 50.0))
def test_smooth_step_range_and_saturation(u):
    v = float(smooth_step(u))
    assert 0.0 <= v <= 1.0
    if u <= 0.0:
        assert v == 0.0
    if u >= 1.0:
        assert v == 1.0


@given(st.floats(0.0, 100.0), st.floats(1.0, 32.0))
def test_eta_support(r, scale):
    eta = float(CutoffFamily().eta(r, scale))
    assert 0.0 <= eta <= 1.0
    if r <= scale / 2.0:
        assert eta == 0.0
    if r >= scale:
        assert eta == 1.0


def test_eta_monotone():
    r = np.linspace(0.0, 10.0, 2001)
    eta = CutoffFamily().eta(r, 4.0)
    assert np.all(np.diff(eta) >= -1e-12)


@given(st.floats(-3.0, 3.0), st.floats(-2.0, 2.0), st.floats(0.1, 3.0))
def test_bump_support(x, center, width):
    v = float(bump(x, center, width))
    assert v >= 0.0
    if abs(x - center) >= width:
        assert v == 0.0


# ---------------------------------------------------------------------------
# end profiles and effective potential closed forms
# ---------------------------------------------------------------------------

def test_euclidean_curvature_closed_form():
    e = EndProfile.euclidean()
    r = np.linspace(1.0, 50.0, 500)
    assert np.allclose(e.q_geo(r), -1.0 / (8.0 * r**2), rtol=0, atol=1e-15)


def test_hyperbolic_curvature_closed_form():
    e = EndProfile.hyperbolic()
    r = np.linspace(1.0, 50.0, 500)
    assert np.allclose(e.q_geo(r), 0.125, rtol=0, atol=1e-15)
    assert e.lambda0 == 0.125


def test_flat_and_conic():
    r = np.linspace(1.0, 30.0, 100)
    assert np.allclose(EndProfile.flat().q_geo(r), 0.0)
    c = EndProfile.conic(2.5)
    assert np.allclose(c.f(r), 2.5 * r)
    assert np.allclose(c.q_geo(r), -1.0 / (8.0 * r**2))


def test_table_profile_matches_samples():
    r_nodes = np.linspace(1.0, 20.0, 40)
    f_nodes = r_nodes + 0.3 * np.sin(r_nodes)
    e = EndProfile.from_table(r_nodes, f_nodes)
    assert np.allclose(e.f(r_nodes), f_nodes, rtol=1e-12)


def test_numeric_derivative_accuracy():
    fn = lambda r: np.sin(r)
    r = np.linspace(0.5, 10.0, 50)
    assert np.max(np.abs(numeric_derivative(fn, r) - np.cos(r))) < 1e-7
    assert np.max(np.abs(numeric_derivative(fn, r, order=2) + np.sin(r))) < 1e-4


# ---------------------------------------------------------------------------
# glued model
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("model", [model_a(), model_b(), model_c(), model_d()])
def test_core_glue_smoothness(model):
    w = model.r0 / 2.0
    for side in (-1.0, 1.0):
        for fn in (model.g, model.gp, model.gpp):
            inner = fn(np.array([side * (w - 1e-7)]))[0]
            outer = fn(np.array([side * (w + 1e-7)]))[0]
            assert abs(inner - outer) < 1e-4


def test_model_ends_match_profiles():
    m = model_b()
    x = np.linspace(2.0, 30.0, 100)
    assert np.allclose(m.f(x), x)            # Euclidean end at x > 0
    assert np.allclose(m.f(-x), np.exp(x))   # hyperbolic end at x < 0


def test_w_mode_centrifugal_tail():
    m = model_a()
    x = np.linspace(5.0, 40.0, 64)
    for mm in (0, 1, 3):
        expected = m.q(x) + 0.5 * mm**2 / x**2
        assert np.allclose(m.w_mode(mm, x), expected, rtol=1e-12)


def test_square_barrier_in_core():
    m = model_d()
    x = np.array([-1.5, -0.5, 0.0, 0.5, 1.5])
    assert np.allclose(m.potential(x), [0.0, 1.5, 1.5, 1.5, 0.0])
    with pytest.raises(ValueError):
        model_d(half_width=1.5)  # would poke out of the core


def test_r0_validation():
    with pytest.raises(ValueError):
        ManifoldModel([EndProfile.flat(), EndProfile.flat()], r0=1.0)
    with pytest.raises(ValueError):
        ManifoldModel([EndProfile.flat()])


# ---------------------------------------------------------------------------
# critical energy, classification, r_lambda
# ---------------------------------------------------------------------------

def test_critical_energies_of_presets():
    val, diag = critical_energy(model_a())
    assert val == 0.0 and diag["per_end"] == [0.0, 0.0]
    val, diag = critical_energy(model_b())
    assert val == 0.125 and diag["per_end"] == [0.0, 0.125]


def test_classification():
    assert classify_potential(model_a(), 0)[0] == "short_range"
    cls, diag = classify_potential(model_c(), 0)
    assert cls == "dollard"
    assert abs(diag["exponent"] - 0.8) < 0.05
    assert classify_potential(model_c(), 1)[0] == "short_range"


def test_r_lambda_dyadic():
    m = model_c()
    for lam in (0.3, 0.7, 1.5):
        R = m.r_lambda(lam)
        assert R >= 2.0 * m.r0
        assert abs(np.log2(R / m.r0) % 1.0) < 1e-12
        rr = np.linspace(R / 2.0, 200.0, 512)
        for end in m.ends:
            assert np.all(lam + end.lambda0 - 2.0 * end.q1(rr) >= 0)


def test_tail_q1_glues_to_threshold():
    q1 = tail_q1(1.0, 0.8, 2.0, lambda0=0.25)
    r = np.array([0.0, 0.5, 1.0])
    assert np.allclose(q1(r), 0.25)          # cut off inside r0/2
    assert abs(q1(np.array([100.0]))[0] - 0.25 - 100.0**-0.8) < 1e-12


# ---------------------------------------------------------------------------
# WKB phases
# ---------------------------------------------------------------------------

def test_phase_b_free_closed_form():
    m = model_a()
    lam = 0.5
    r = np.linspace(m.r_lambda(lam), 100.0, 200)
    assert np.allclose(phase_b(m, 0, lam, r), np.sqrt(2.0 * lam), rtol=1e-14)


def test_phase_integral_linear_growth_on_free_end():
    m = model_a()
    lam = 0.5
    r = np.linspace(20.0, 120.0, 400)
    phi = phase_integral(m, 0, lam, r)
    slope = np.polyfit(r, phi, 1)[0]
    assert abs(slope - np.sqrt(2.0 * lam)) < 1e-10


def test_riccati_residual_small_on_end():
    m = model_c()
    lam = 1.5
    r = np.linspace(30.0, 120.0, 64)
    res = riccati_residual(m, 0, lam, r)
    assert np.max(np.abs(res)) < 2e-3


def test_model_free_is_exactly_free():
    m = model_free()
    x = np.linspace(-40.0, 40.0, 1001)
    assert np.allclose(m.w_mode(0, x), 0.0, atol=1e-15)
