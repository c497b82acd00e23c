import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from qtoken.errors import DomainError
from qtoken.token import (EfficiencyBudget, SecurityDesign, TokenTiming, acceptance_probability,
                          acceptance_rate, average_fidelity, binom_tail, combined_efficiency,
                          forge_acceptance_prob, gate_duration_ns, loss_prob, min_token_size,
                          monte_carlo_forgery, monte_carlo_verify, true_accept_prob)


def exact_tail(n, t, p):
    p = Fraction(p)
    return sum(math.comb(n, k) * p ** k * (1 - p) ** (n - k) for k in range(t, n + 1))


def brute_force_design(p_th, alpha=Fraction(3, 4)):
    n = 2
    while exact_tail(n, n - 1, alpha) >= Fraction(p_th):
        n += 1
    return n, n - 1


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 120), st.data(), st.sampled_from([0.1, 0.5, 0.75, 0.9, 0.999]))
def test_binomial_tail_against_exact_fractions(n, data, p):
    t = data.draw(st.integers(0, n + 1))
    want = float(exact_tail(n, max(t, 0), p)) if t <= n else 0.0
    assert binom_tail(n, t, p) == pytest.approx(want, rel=1e-12, abs=1e-300)


def test_large_n_stays_finite():
    mpmath.mp.dps = 50
    n, k, p = 10_000, 7_600, 0.75
    want = mpmath.binomial(n, k) * mpmath.mpf(p) ** k * mpmath.mpf(1 - p) ** (n - k)
    assert float(loss_prob(n, k, p)) == pytest.approx(float(want), rel=1e-9)


@pytest.mark.parametrize("p_th", [1e-4, 1e-5, 1e-6, 0.9, 0.5, 1e-3])
def test_min_token_size_matches_brute_force(p_th):
    d = min_token_size(p_th)
    assert (d.n, d.t) == brute_force_design(p_th)
    assert d.t in d.feasible_t


def test_table_rows_and_forgery_value():
    assert [(d.n, d.t) for d in map(min_token_size, (1e-4, 1e-5, 1e-6))] == \
        [(42, 41), (51, 50), (59, 58)]
    assert forge_acceptance_prob(42, 41) == pytest.approx(float(exact_tail(42, 41, Fraction(3, 4))),
                                                          rel=1e-13)


def test_domain_errors():
    for call in (lambda: forge_acceptance_prob(3, 4), lambda: forge_acceptance_prob(3, 0),
                 lambda: min_token_size(1.0), lambda: SecurityDesign(3, 0),
                 lambda: true_accept_prob(3, 4, 0.5), lambda: average_fidelity(1.2, 1, 1),
                 lambda: EfficiencyBudget(1.5), lambda: TokenTiming(-1.0),
                 lambda: acceptance_probability(3, 2, 0.9, 0.9, "other")):
        with pytest.raises(DomainError):
            call()


def test_acceptance_models():
    n, t, f, p = 10, 9, 0.97, 0.95
    printed, terms = acceptance_probability(n, t, f, p, "printed")
    want = sum(math.comb(n, k) ** 2 * f ** k * (1 - f) ** (n - k) * p ** k * (1 - p) ** (n - k)
               for k in range(t, n + 1))
    assert printed == pytest.approx(want, rel=1e-13) and len(terms) == 2
    coupled, _ = acceptance_probability(n, t, f, p, "coupled")
    # coupled is the probability that at least t qubits both survive and verify
    assert coupled == pytest.approx(float(exact_tail(n, t, Fraction(f) * Fraction(p))), rel=1e-12)


def test_average_fidelity_and_efficiency():
    f_in = {"+": 1.0, "-": 0.9, "e": 0.8, "l": 0.7}
    assert average_fidelity(f_in, 1.0, 1.0) == pytest.approx(0.85)
    assert combined_efficiency(0.98, 0.73, 0.98) == pytest.approx(0.701092 ** 2, rel=1e-12)
    b = EfficiencyBudget.from_components(1, 1, 1, length_km=20.0)
    assert b.p_survive == pytest.approx(math.exp(-1))


def test_timing():
    assert gate_duration_ns(353.32) == pytest.approx(1.50041, abs=1e-5)
    t = TokenTiming(lifetime_ns=0.05, length_km=0.0, gate_ns=0.0, measure_ns=0.0)
    assert t.token_period_ns(10) == pytest.approx(2 * 10 * 20 * 0.05)
    t2 = TokenTiming(0.05, length_km=299_792.458)
    assert t2.communication_ns == pytest.approx(1e9)
    r = acceptance_rate(min_token_size(1e-4), 1.0, 1.0, 1000.0)
    assert r.gamma_a_hz == pytest.approx(1000.0)


@pytest.mark.parametrize("model", ["printed", "coupled"])
def test_monte_carlo_small_agrees(model):
    d = SecurityDesign(8, 7)
    exact, _ = acceptance_probability(8, 7, 0.9, 0.93, model)
    mc = monte_carlo_verify(d, 0.9, 0.93, 200_000, seed=11, model=model)
    assert abs(mc.probability - exact) < 4 * mc.stderr


def test_monte_carlo_is_deterministic_and_chunk_independent_in_total():
    d = SecurityDesign(6, 5)
    a = monte_carlo_verify(d, 0.9, 0.9, 50_000, seed=5, chunk=10_000)
    b = monte_carlo_verify(d, 0.9, 0.9, 50_000, seed=5, chunk=10_000)
    assert (a.accepted, a.probability) == (b.accepted, b.probability)
    f = monte_carlo_forgery(6, 5, 100_000, seed=2)
    assert abs(f.probability - forge_acceptance_prob(6, 5)) < 4 * f.stderr
    with pytest.raises(DomainError):
        monte_carlo_verify(d, 0.9, 0.9, 0)
