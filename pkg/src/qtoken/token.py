"""Token security thresholds, acceptance rates and their Monte Carlo oracle.

Binomial quantities are evaluated in log space so that token sizes in the
thousands stay finite.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import DomainError

CLONING_PROBABILITY = 0.75
SPEED_OF_LIGHT_KM_S = 299_792.458
ACCEPTANCE_MODELS = ("printed", "coupled")


def log_binom_pmf(n, k, p):
    """log of C(n, k) p^k (1 - p)^(n - k), with the p = 0 and p = 1 edges exact."""
    k = np.asarray(k)
    logc = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(k == 0, 0.0, k * np.log(p)) if p > 0 else np.where(k == 0, 0.0, -np.inf)
        b = (np.where(k == n, 0.0, (n - k) * np.log1p(-p)) if p < 1
             else np.where(k == n, 0.0, -np.inf))
    return logc + a + b


def binom_pmf(n, k, p):
    return np.exp(log_binom_pmf(n, k, p))


def binom_tail(n, t, p):
    """P(Bin(n, p) >= t)."""
    if t <= 0:
        return 1.0
    if t > n:
        return 0.0
    return float(math.exp(min(0.0, logsumexp(log_binom_pmf(n, np.arange(t, n + 1), p)))))


@dataclass(frozen=True)
class SecurityDesign:
    """Token length ``n``, verification threshold ``t`` and adversary model."""

    n: int
    t: int
    alpha: float = CLONING_PROBABILITY
    p_th: float = 1e-4
    feasible_t: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if not 1 <= self.t <= self.n:
            raise DomainError(f"need 1 <= t <= n, got n={self.n}, t={self.t}")
        if not 0 < self.alpha < 1:
            raise DomainError("alpha must lie in (0, 1)")
        if not 0 < self.p_th < 1:
            raise DomainError("p_th must lie in (0, 1)")


def forge_acceptance_prob(n, t, alpha=CLONING_PROBABILITY):
    """Probability that an optimally cloned token passes verification."""
    if not 1 <= t <= n:
        raise DomainError(f"need 1 <= t <= n, got n={n}, t={t}")
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    return binom_tail(n, t, alpha)


def min_token_size(p_th, alpha=CLONING_PROBABILITY, n_max=100_000):
    """Smallest n whose forgery probability at t = n - 1 is below ``p_th``."""
    if not 0 < p_th < 1:
        raise DomainError("p_th must lie in (0, 1)")
    for n in range(2, n_max + 1):
        if forge_acceptance_prob(n, n - 1, alpha) < p_th:
            ts = [t for t in range(1, n + 1) if forge_acceptance_prob(n, t, alpha) < p_th]
            return SecurityDesign(n, n - 1, alpha, p_th, tuple(ts))
    raise DomainError(f"no token size up to {n_max} reaches p_th={p_th}")


def true_accept_prob(n, k, f_avg):
    """Probability that exactly k of n qubits verify correctly."""
    if not 0 <= k <= n:
        raise DomainError("need 0 <= k <= n")
    if not 0 <= f_avg <= 1:
        raise DomainError("f_avg must lie in [0, 1]")
    return float(binom_pmf(n, k, f_avg))


def loss_prob(n, k, p_survive):
    """Probability that exactly k of n photons survive the round trip."""
    if not 0 <= p_survive <= 1:
        raise DomainError("p_survive must lie in [0, 1]")
    return float(binom_pmf(n, k, p_survive))


def average_fidelity(f_in, f_mem, f_out):
    """Mean over the four token states of F_in * F_mem * F_out.

    Each argument is a mapping from state label to fidelity or a scalar
    shared by all states.
    """
    labels = next((list(f) for f in (f_in, f_mem, f_out) if isinstance(f, dict)),
                  ["+", "-", "e", "l"])

    def get(f, x):
        v = f[x] if isinstance(f, dict) else f
        if not 0 <= v <= 1 + 1e-12:
            raise DomainError(f"fidelity {v} outside [0, 1]")
        return v

    return math.fsum(get(f_in, x) * get(f_mem, x) * get(f_out, x) for x in labels) / len(labels)


def combined_efficiency(eta_cf, eta_fc, eta_d):
    """Round-trip efficiency: each element is passed twice."""
    for v in (eta_cf, eta_fc, eta_d):
        if not 0 <= v <= 1:
            raise DomainError("efficiencies must lie in [0, 1]")
    return (eta_cf * eta_fc * eta_d) ** 2


@dataclass(frozen=True)
class EfficiencyBudget:
    """Combined efficiency ``eta_c`` and fiber link of ``length_km``."""

    eta_c: float = 1.0
    length_km: float = 0.5
    attenuation_km: float = 20.0

    def __post_init__(self):
        if not 0 <= self.eta_c <= 1:
            raise DomainError("eta_c must lie in [0, 1]")
        if self.length_km < 0 or self.attenuation_km <= 0:
            raise DomainError("need length >= 0 and attenuation length > 0")

    @classmethod
    def from_components(cls, eta_cf, eta_fc, eta_d, length_km=0.5, attenuation_km=20.0):
        return cls(combined_efficiency(eta_cf, eta_fc, eta_d), length_km, attenuation_km)

    @property
    def p_survive(self):
        """Per-photon survival probability (called the loss probability in some texts)."""
        return self.eta_c * math.exp(-self.length_km / self.attenuation_km)


def gate_duration_ns(four_tau_ps, widths=40.0):
    """Gate duration from the summed Raman pulse FWHM (four pulses of tau).

    The pulse standard deviation is tau / (2 sqrt(2 ln 2)) and the gate
    spans ``widths`` standard deviations.
    """
    tau = four_tau_ps / 4.0
    sigma = tau / (2 * math.sqrt(2 * math.log(2)))
    return widths * sigma * 1e-3


@dataclass(frozen=True)
class TokenTiming:
    """Per-token time budget; all durations in ns."""

    lifetime_ns: float
    gate_ns: float = 1.5
    measure_ns: float = 0.1
    storage_ns: float = 0.0
    length_km: float = 0.5
    c_fiber_km_s: float = SPEED_OF_LIGHT_KM_S
    slot_factor: float = 20.0

    def __post_init__(self):
        if min(self.lifetime_ns, self.gate_ns, self.measure_ns, self.storage_ns,
               self.length_km) < 0 or self.c_fiber_km_s <= 0:
            raise DomainError("timings must be non-negative and the light speed positive")

    @property
    def slot_ns(self):
        return self.slot_factor * self.lifetime_ns

    @property
    def communication_ns(self):
        return self.length_km / self.c_fiber_km_s * 1e9

    def token_period_ns(self, n):
        t = 2 * n * (self.slot_ns + self.gate_ns + self.measure_ns) \
            + 2 * self.communication_ns + self.storage_ns
        if t <= 0:
            raise DomainError("token period must be positive")
        return t

    def token_rate_hz(self, n):
        return 1e9 / self.token_period_ns(n)


@dataclass(frozen=True)
class AcceptanceBreakdown:
    gamma_a_hz: float
    gamma_tok_hz: float
    f_avg: float
    p_survive: float
    probability: float
    terms: np.ndarray
    model: str = "printed"


def acceptance_probability(n, t, f_avg, p_survive, model="printed"):
    """Per-token acceptance probability and its per-k terms (k = t..n).

    ``printed`` multiplies the verification and survival binomials at the
    same k. ``coupled`` verifies only the k surviving qubits and accepts
    when at least t of them pass.
    """
    if model not in ACCEPTANCE_MODELS:
        raise DomainError(f"unknown acceptance model {model!r}")
    if not 1 <= t <= n:
        raise DomainError("need 1 <= t <= n")
    ks = np.arange(t, n + 1)
    loss = binom_pmf(n, ks, p_survive)
    if model == "printed":
        terms = binom_pmf(n, ks, f_avg) * loss
    else:
        terms = loss * np.array([binom_tail(int(k), t, f_avg) for k in ks])
    return float(math.fsum(terms)), terms


def acceptance_rate(design, f_avg, p_survive, gamma_tok_hz, model="printed"):
    """Average token acceptance rate in Hz with its breakdown."""
    if not 0 <= f_avg <= 1:
        raise DomainError("f_avg must lie in [0, 1]")
    if not 0 <= p_survive <= 1:
        raise DomainError("p_survive must lie in [0, 1]")
    prob, terms = acceptance_probability(design.n, design.t, f_avg, p_survive, model)
    return AcceptanceBreakdown(gamma_tok_hz * prob, gamma_tok_hz, f_avg, p_survive, prob,
                               terms, model)


@dataclass(frozen=True)
class MonteCarloResult:
    probability: float
    stderr: float
    accepted: int
    trials: int
    rate_hz: float = math.nan
    rate_stderr_hz: float = math.nan


def _chunks(trials, chunk):
    full, rest = divmod(trials, chunk)
    return [chunk] * full + ([rest] if rest else [])


def _run_chunks(trials, seed, chunk, accept_count):
    sizes = _chunks(trials, chunk)
    # one child stream per chunk: results do not depend on evaluation order
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    accepted = sum(accept_count(np.random.default_rng(c), m) for c, m in zip(children, sizes))
    p = accepted / trials
    se = math.sqrt(max(p * (1 - p), 0.0) / trials)
    return accepted, p, se


def monte_carlo_verify(design, f_avg, p_survive, trials, seed=0, model="printed",
                       gamma_tok_hz=math.nan, chunk=100_000):
    """Simulate token issue-store-verify cycles qubit by qubit.

    Each qubit survives with ``p_survive`` and verifies correctly with
    ``f_avg``. Under ``coupled`` only survivors are verified and a token is
    accepted with at least t successes; under ``printed`` survival and
    verification are drawn independently for all n qubits and a token is
    accepted when both counts agree and reach t.
    """
    if trials < 1:
        raise DomainError("trials must be positive")
    if model not in ACCEPTANCE_MODELS:
        raise DomainError(f"unknown acceptance model {model!r}")
    n, t = design.n, design.t

    def accept_count(rng, m):
        survive = rng.random((m, n)) < p_survive
        verify = rng.random((m, n)) < f_avg
        if model == "coupled":
            ok = (survive & verify).sum(axis=1) >= t
        else:
            ks, kv = survive.sum(axis=1), verify.sum(axis=1)
            ok = (ks == kv) & (ks >= t)
        return int(ok.sum())

    accepted, p, se = _run_chunks(trials, seed, chunk, accept_count)
    return MonteCarloResult(p, se, accepted, trials, p * gamma_tok_hz, se * gamma_tok_hz)


def monte_carlo_forgery(n, t, trials, seed=0, alpha=CLONING_PROBABILITY, chunk=200_000):
    """Simulate the cloning adversary: each qubit passes with probability alpha."""
    if trials < 1:
        raise DomainError("trials must be positive")

    def accept_count(rng, m):
        return int(((rng.random((m, n)) < alpha).sum(axis=1) >= t).sum())

    accepted, p, se = _run_chunks(trials, seed, chunk, accept_count)
    return MonteCarloResult(p, se, accepted, trials)
