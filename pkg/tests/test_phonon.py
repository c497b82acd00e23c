import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qtoken.errors import ConfigError, DomainError
from qtoken.phonon import (DIAMOND, ElasticMedium, RateMatrixInput, absorption_cross_section,
                           christoffel_velocities, electron_rates, ground_cross_sections,
                           occupation, phonon_rate, sphere_rule, strain_matrices)

import oracles

unit_vectors = st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)).filter(
    lambda v: np.linalg.norm(v) > 0.1).map(lambda v: np.array(v) / np.linalg.norm(v))


def test_stiffness_symmetries():
    c = ElasticMedium.diamond().stiffness()
    assert np.allclose(c, c.transpose(1, 0, 2, 3))
    assert np.allclose(c, c.transpose(2, 3, 0, 1))
    assert c[0, 0, 0, 0] == DIAMOND["c11"] and c[0, 0, 1, 1] == DIAMOND["c12"]
    assert c[0, 1, 0, 1] == DIAMOND["c44"]


def test_medium_validation():
    with pytest.raises(DomainError):
        ElasticMedium(100, 200, 50, 3)
    with pytest.raises(DomainError):
        ElasticMedium(100, 20, 50, 0)


@settings(max_examples=50, deadline=None)
@given(unit_vectors)
def test_isotropic_velocities_exact(n):
    m = ElasticMedium.isotropic(500.0, 100.0, 2.5)
    v = [x for x, _ in christoffel_velocities(n, m)]
    vl, vt = math.sqrt(500 / 2.5), math.sqrt(200 / 2.5)
    assert abs(v[0] - vl) < 1e-10 and abs(v[1] - vt) < 1e-10 and abs(v[2] - vt) < 1e-10


@settings(max_examples=50, deadline=None)
@given(unit_vectors)
def test_diamond_velocities_match_closed_form(n):
    m = ElasticMedium.diamond()
    got = np.array([x for x, _ in christoffel_velocities(n, m)])
    want, _ = oracles.christoffel_cubic(n, *DIAMOND.values())
    assert np.allclose(got, want, rtol=1e-12)


def test_velocity_direction_must_be_unit():
    with pytest.raises(DomainError):
        christoffel_velocities([1, 1, 0], ElasticMedium.diamond())


@pytest.mark.parametrize("rule", [("lebedev", 131), ("lebedev", 125), ("product", 64)])
def test_sphere_rules_integrate_constants_and_quadratics(rule):
    x, w = sphere_rule(*rule)
    assert abs(w.sum() - 4 * math.pi) < 1e-10
    assert np.allclose(np.linalg.norm(x, axis=1), 1.0)
    assert abs(w @ x[:, 2] ** 2 - 4 * math.pi / 3) < 1e-10
    with pytest.raises(DomainError):
        sphere_rule("monte-carlo")


def test_cross_section_scaling_and_zero():
    m = ElasticMedium.diamond()
    d = strain_matrices(0.787, -0.562)["x"]
    base = absorption_cross_section(d, m)
    assert absorption_cross_section(2.5 * d, m) == pytest.approx(6.25 * base, rel=1e-13)
    assert absorption_cross_section(np.zeros((3, 3)), m) == 0.0
    assert base > 0


def test_ground_cross_section_values():
    chi = ground_cross_sections()
    assert chi["x"] == pytest.approx(3.7066e-29, rel=1e-4)
    assert chi["y"] == pytest.approx(2.8643e-29, rel=1e-4)


def test_occupation():
    assert occupation(-10.0, 0.1) == pytest.approx(occupation(10.0, 0.1) + 1)
    hi = occupation(0.01, 300.0)
    assert hi == pytest.approx(300 * 1.380649e-23 / (6.62607015e-34 * 1e7), rel=1e-3)
    assert occupation(1e6, 0.001) == 0.0
    with pytest.raises(DomainError):
        occupation(0.0, 1.0)
    with pytest.raises(DomainError):
        occupation(1.0, 0.0)


def test_rates_detailed_balance():
    h = {"x": [[0, 1], [1, 0]], "y": [[0, 0.5], [0.5, 0]]}
    inp = RateMatrixInput(h, (0.0, 50.0), 0.3, ground_cross_sections())
    r = electron_rates(inp, 0, 1, 2.0)
    ratio = r.gamma_plus / r.gamma_minus
    x = 6.62607015e-34 * 50e9 / (1.380649e-23 * 0.3)
    assert ratio == pytest.approx(math.exp(-x), rel=1e-10)
    assert r.gamma_dephase == 2.0


def test_rate_errors():
    inp = RateMatrixInput({"x": [[0, 1], [1, 0]]}, (0.0, 50.0), 0.1)
    with pytest.raises(ConfigError):
        phonon_rate(0, 1, inp)
    with pytest.raises(ConfigError):
        phonon_rate(0, 1, inp, {"y": 1e-29})
    with pytest.raises(DomainError):
        phonon_rate(1, 1, inp, {"x": 1e-29})
