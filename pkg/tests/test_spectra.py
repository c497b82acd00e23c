import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import trapezoid

from qtoken.errors import DomainError, NumericalFailure
from qtoken.spectra import (CavitySpinParams, CouplingModel, PhotonSpectrum, ReflectionMoments,
                            cooperativity, coupling_for_cooperativity, cp_gate_fidelity,
                            cp_gate_infidelity, reflection_coefficient, reflection_modulus,
                            spectral_moments, spectrum_norm)

import oracles

GAMMA = 0.6 / (2 * math.pi * 4.5)
G_REF = coupling_for_cooperativity(35.85, 34.07, GAMMA)


def design_point(**kw):
    base = dict(omega_a=0.0, delta=108.76, kappa=34.07, g=G_REF, omega_s=70.8039)
    base.update(kw)
    return CavitySpinParams(**base)


def test_spectrum_normalization_and_lifetime():
    s = PhotonSpectrum.from_lifetime(2.0, 0.05)
    assert s.lifetime_ns == pytest.approx(0.05)
    assert spectrum_norm(s) == pytest.approx(1.0, abs=1e-12)
    w = np.linspace(-2000, 2000, 2_000_001)
    assert trapezoid(s.lineshape(w), w) == pytest.approx(1.0, abs=2e-3)


@pytest.mark.parametrize("bad", [dict(fwhm=0.0), dict(fwhm=-1.0), dict(center=math.nan)])
def test_spectrum_rejects_bad_input(bad):
    args = dict(center=0.0, fwhm=1.0)
    args.update(bad)
    with pytest.raises(DomainError):
        PhotonSpectrum(**args)


def test_params_validation():
    p = design_point()
    assert p.half_open and p.kappa_l == p.kappa
    assert p.omega_c == pytest.approx(-108.76)
    for bad in (dict(kappa=0.0), dict(kappa_l=40.0), dict(g=-1.0), dict(omega_s=0.0)):
        with pytest.raises(DomainError):
            design_point(**bad)


def test_cooperativity_roundtrip():
    p = design_point()
    assert cooperativity(p) == pytest.approx(35.85, rel=1e-14)
    with pytest.raises(DomainError):
        coupling_for_cooperativity(1.0, 0.0)


def test_coupling_model_scaling():
    m = CouplingModel(2.0, 100.0, "sqrt-frequency")
    assert m.coupling(400.0) == pytest.approx(4.0)
    assert CouplingModel(2.0).coupling(-5.0) == 2.0
    with pytest.raises(DomainError):
        m.coupling(-1.0)
    with pytest.raises(DomainError):
        CouplingModel(1.0, mode="linear")


def test_reflection_limits():
    p = design_point(g=0.0)
    # empty half-open cavity on resonance reflects with +1, far off with -1
    assert reflection_coefficient(p.omega_c, p) == pytest.approx(1.0)
    assert reflection_coefficient(1e9, p) == pytest.approx(-1.0, abs=1e-6)
    q = design_point()
    assert reflection_coefficient(5.0, q, spin=2) == reflection_coefficient(5.0 - q.omega_s, q)
    with pytest.raises(DomainError):
        reflection_coefficient(0.0, q, spin=3)


@settings(max_examples=60, deadline=None)
@given(st.floats(-500, 500), st.floats(1, 200), st.floats(-300, 300), st.floats(0, 30))
def test_reflection_passive_and_matches_oracle(x, kappa, delta, g):
    p = design_point(kappa=kappa, delta=delta, g=g)
    r = reflection_coefficient(x, p)
    assert abs(r) <= 1 + 1e-12
    ref = oracles.reflection(x, 0.0, delta, kappa, kappa, g, GAMMA)
    assert r == pytest.approx(ref, rel=1e-12, abs=1e-12)


def test_lossless_cavity_is_all_pass():
    p = design_point(gamma_atom=0.0)
    assert np.allclose(reflection_modulus(np.linspace(-400, 400, 101), p), 1.0)


def test_first_moments_match_residue_oracle():
    p = design_point()
    for center, fwhm in ((-63.66, 3.18 / (2 * math.pi)), (-60.0, 5.0), (10.0, 40.0)):
        s = PhotonSpectrum(center, fwhm)
        m = spectral_moments(p, s)
        r1 = lambda z: oracles.reflection(z, 0.0, p.delta, p.kappa, p.kappa, p.g, GAMMA)
        r2 = lambda z: r1(z - p.omega_s)
        assert m.m1 == pytest.approx(oracles.lorentz_moment_residue(r1, center, fwhm), abs=1e-9)
        assert m.m2 == pytest.approx(oracles.lorentz_moment_residue(r2, center, fwhm), abs=1e-9)
        assert m.norm == pytest.approx(1.0, abs=1e-12)


def test_second_moments_match_dense_midpoint():
    p = design_point()
    s = PhotonSpectrum(-63.66, 3.0)
    m = spectral_moments(p, s)
    r1 = lambda w: oracles.reflection(w, 0.0, p.delta, p.kappa, p.kappa, p.g, GAMMA)
    r2 = lambda w: r1(w - p.omega_s)
    assert m.j11 == pytest.approx(oracles.theta_midpoint(lambda w: abs(r1(w)) ** 2, s.center, s.fwhm), abs=1e-8)
    assert m.j22 == pytest.approx(oracles.theta_midpoint(lambda w: abs(r2(w)) ** 2, s.center, s.fwhm), abs=1e-8)
    j12 = oracles.theta_midpoint(lambda w: r1(w) * np.conj(r2(w)), s.center, s.fwhm)
    assert m.j12 == pytest.approx(j12, abs=1e-8)
    # Cauchy-Schwarz on the moment matrix
    assert abs(m.j12) ** 2 <= m.j11 * m.j22 + 1e-12
    assert abs(m.m1) ** 2 <= m.j11 + 1e-12


def test_fidelity_at_reported_design():
    p = design_point()
    s = PhotonSpectrum(-63.66, 3.18 / (2 * math.pi))
    f = cp_gate_fidelity(p, s)
    assert 0 <= f <= 1
    assert cp_gate_infidelity(p, s) == pytest.approx(4.9e-5, rel=0.2)


def test_constant_moments_give_ideal_gate():
    assert ReflectionMoments.constant(-1, 1).cp_fidelity() == pytest.approx(1.0)
    assert ReflectionMoments.constant(1, 1).cp_fidelity() == pytest.approx(0.25)


def test_mixture_is_linear():
    a = ReflectionMoments.constant(-1, 1)
    b = ReflectionMoments.constant(1j, -1)
    mix = ReflectionMoments.mixture([0.25, 0.75], [a, b])
    assert np.allclose(mix.as_array(), 0.25 * a.as_array() + 0.75 * b.as_array())


def test_panel_budget_exhaustion_raises():
    p = design_point()
    with pytest.raises(NumericalFailure):
        spectral_moments(p, PhotonSpectrum(-63.66, 0.5), rtol=1e-15, atol=0.0, limit=3)


def test_python_backend_agrees():
    p = design_point()
    s = PhotonSpectrum(-63.66, 0.9)
    a = spectral_moments(p, s).as_array()
    b = spectral_moments(p, s, backend="python").as_array()
    assert np.max(np.abs(a - b)) < 1e-12
