"""Write/read pipeline for a time-bin photon stored in a cavity-coupled spin.

Joint states live on photon {e, l} x spin {1, 2} with index 2*photon + spin.
The photon's frequency is traced out: each reflection contributes its
amplitude, and since every ket path picks up exactly one reflection
factor, the output depends on the spectrum only through the moments
``J_xy = int S^2 r_x conj(r_y)`` (see ``spectra.ReflectionMoments``).
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import DegenerateBranch, DomainError, NumericalFailure
from .spectra import ReflectionMoments, spectral_moments

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-12
BRANCH_MIN = 1e-15

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# spin rotation by pi/2 about y: |1> -> (|1> + |2>)/sqrt(2)
ROT_Y_HALF_PI = np.array([[1, -1], [1, 1]], dtype=complex) / math.sqrt(2)
# photon correction after reading the spin in state 2: (-b, a) -> (a, b)
READ_CORRECTION = np.array([[0, 1], [-1, 0]], dtype=complex)
# the minus heralding outcome differs from the plus outcome by a spin flip
HERALD_CORRECTION = SIGMA_X


class DensityMatrix2:
    """A 2x2 density matrix with validity checks."""

    __slots__ = ("data",)

    def __init__(self, data, validate=True):
        self.data = np.array(data, dtype=complex).reshape(2, 2)
        if validate:
            self.validate()

    @classmethod
    def pure(cls, ket):
        ket = np.asarray(ket, dtype=complex)
        return cls(np.outer(ket, ket.conj()))

    def violations(self):
        """Names of the invariants this matrix breaks (empty when valid)."""
        rho = self.data
        bad = []
        if not np.all(np.isfinite(rho)):
            return ["finite"]
        if abs(rho[1, 0] - rho[0, 1].conjugate()) > HERMITIAN_TOL or \
                abs(rho[0, 0].imag) > HERMITIAN_TOL or abs(rho[1, 1].imag) > HERMITIAN_TOL:
            bad.append("hermitian")
        if abs(np.trace(rho) - 1) > TRACE_TOL:
            bad.append("trace")
        det = (rho[0, 0] * rho[1, 1] - rho[0, 1] * rho[1, 0]).real
        if det < -PSD_TOL or rho[0, 0].real < -PSD_TOL or rho[1, 1].real < -PSD_TOL:
            bad.append("psd")
        return bad

    def validate(self):
        bad = self.violations()
        if bad:
            raise NumericalFailure(f"density matrix violates {', '.join(bad)}: {self.data!r}")
        return self

    def fidelity(self, ket):
        """Overlap with a pure state."""
        ket = np.asarray(ket, dtype=complex)
        return float((ket.conj() @ self.data @ ket).real)

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def __repr__(self):
        return f"DensityMatrix2({self.data.tolist()!r})"


@dataclass(frozen=True)
class TimeBinQubit:
    """Photonic qubit a|e> + b|l>."""

    a: complex
    b: complex

    def __post_init__(self):
        if abs(abs(self.a) ** 2 + abs(self.b) ** 2 - 1) > 1e-12:
            raise DomainError("time-bin amplitudes must be normalized")

    @classmethod
    def from_angles(cls, theta, phi):
        return cls(math.cos(theta / 2), complex(math.cos(phi), math.sin(phi)) * math.sin(theta / 2))

    @property
    def ket(self):
        return np.array([self.a, self.b], dtype=complex)

    def density(self):
        return DensityMatrix2.pure(self.ket)


_S = 1 / math.sqrt(2)
#: The four token states: the BB84 pair in each of the e/l and +/- bases.
TOKEN_STATES = {
    "+": TimeBinQubit(_S, _S),
    "-": TimeBinQubit(_S, -_S),
    "e": TimeBinQubit(1.0, 0.0),
    "l": TimeBinQubit(0.0, 1.0),
}


class Pi2Channel:
    """A CPTP map on the spin, stored as a 4x4 Liouville matrix.

    The superoperator acts on row-major vectorized 2x2 matrices.
    """

    def __init__(self, superop, check=True):
        self.superop = np.array(superop, dtype=complex).reshape(4, 4)
        if check:
            self.check()

    @classmethod
    def from_process_tensor(cls, images):
        """Build from ``images[i][j] = D(|i><j|)``, each a 2x2 matrix."""
        images = np.asarray(images, dtype=complex).reshape(2, 2, 2, 2)
        sup = np.zeros((4, 4), dtype=complex)
        for i in range(2):
            for j in range(2):
                sup[:, 2 * i + j] = images[i, j].reshape(4)
        return cls(sup)

    @classmethod
    def unitary(cls, u):
        u = np.asarray(u, dtype=complex)
        return cls(np.kron(u, u.conj()))

    @classmethod
    def ideal(cls):
        return cls.unitary(ROT_Y_HALF_PI)

    @classmethod
    def depolarized(cls, gate_fidelity, u=ROT_Y_HALF_PI):
        """Ideal rotation mixed with full depolarization, eps = 2(1 - F)."""
        if not 0.5 <= gate_fidelity <= 1:
            raise DomainError("gate fidelity must lie in [1/2, 1]")
        eps = 2 * (1 - gate_fidelity)
        # tr(rho) * I/2 in Liouville form
        dep = np.zeros((4, 4), dtype=complex)
        dep[0, 0] = dep[0, 3] = dep[3, 0] = dep[3, 3] = 0.5
        return cls((1 - eps) * cls.unitary(u).superop + eps * dep)

    def image(self, i, j):
        return self.superop[:, 2 * i + j].reshape(2, 2)

    def choi(self):
        c = np.zeros((4, 4), dtype=complex)
        for i in range(2):
            for j in range(2):
                c[2 * i:2 * i + 2, 2 * j:2 * j + 2] = self.image(i, j)
        return c

    def check(self, tol=1e-10):
        c = self.choi()
        if np.max(np.abs(c - c.conj().T)) > tol or np.linalg.eigvalsh(c).min() < -tol:
            raise DomainError("channel is not completely positive")
        for i in range(2):
            for j in range(2):
                if abs(np.trace(self.image(i, j)) - (i == j)) > tol:
                    raise DomainError("channel is not trace preserving")
        return self

    def apply(self, rho):
        return (self.superop @ np.asarray(rho, dtype=complex).reshape(4)).reshape(2, 2)

    def apply_on_spin(self, joint):
        """Apply to the spin factor of a 4x4 photon-spin operator."""
        out = np.empty((4, 4), dtype=complex)
        for a in range(2):
            for b in range(2):
                out[2 * a:2 * a + 2, 2 * b:2 * b + 2] = self.apply(joint[2 * a:2 * a + 2, 2 * b:2 * b + 2])
        return out


@dataclass(frozen=True)
class DiffusionModel:
    """Gaussian jitter of the photon center frequency with std ``sigma`` (GHz)."""

    sigma: float = 0.0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise DomainError("sigma must be non-negative")


@dataclass(frozen=True)
class DecoherenceRates:
    """Electron rates gamma_minus/gamma_plus (1/ms) and nuclear dephasing (1/s)."""

    gamma_minus: float = 0.0
    gamma_plus: float = 0.0
    gamma_dephase: float = 0.0

    def __post_init__(self):
        if min(self.gamma_minus, self.gamma_plus, self.gamma_dephase) < 0:
            raise DomainError("decoherence rates must be non-negative")


# ----- photon generation -------------------------------------------------

def depolarize_generation(q, fidelity):
    """Photonic state after a depolarizing source of fidelity ``fidelity``.

    The four-dimensional identity term is restricted to the two logical
    time bins and the result renormalized there.
    """
    if not 0.5 <= fidelity <= 1:
        raise DomainError("source fidelity must lie in [1/2, 1]")
    eps = 2 * (1 - fidelity)
    rho = (1 - eps) * np.outer(q.ket, q.ket.conj()) + (eps / 4) * np.eye(2)
    return DensityMatrix2(rho / (1 - eps / 2))


# ----- joint-space operators --------------------------------------------

def _proj(photon, spin):
    m = np.zeros((4, 4), dtype=complex)
    if spin is None:
        m[2 * photon, 2 * photon] = m[2 * photon + 1, 2 * photon + 1] = 1
    else:
        m[2 * photon + spin, 2 * photon + spin] = 1
    return m


_EARLY, _LATE = 0, 1
# for each spin x in {1, 2}, the two ket paths as (first-pass op, second-pass op):
# reflected while early (the late pass leaves the early bin alone), or while late
_PATHS = {
    x: ((_proj(_EARLY, x - 1), _proj(_EARLY, None)),
        (_proj(_LATE, None), _proj(_LATE, x - 1)))
    for x in (1, 2)
}


SPECTRAL_MODELS = ("projection", "traced")


def _moment_matrix(m, model):
    """Weights J_xy multiplying the spin-x ket path and spin-y bra path.

    ``projection`` keeps only the component of the reflected photon in its
    incident spectral mode, so J_xy = m_x conj(m_y). ``traced`` traces the
    frequency out and uses the second moments.
    """
    if model == "projection":
        v = np.array([m.m1, m.m2], dtype=complex)
        return np.outer(v, v.conj())
    if model == "traced":
        return np.array([[m.j11, m.j12], [m.j12.conjugate(), m.j22]], dtype=complex)
    raise DomainError(f"unknown spectral model {model!r}")


def reflect_sequence(joint, moments, channel, model="projection"):
    """Reflection, spin rotation, reflection, with the spectrum integrated out.

    ``joint`` is a 4x4 (unnormalized) photon-spin operator; the result is
    linear in it and in the moment weights.
    """
    jm = _moment_matrix(moments, model)
    out = np.zeros((4, 4), dtype=complex)
    for x in (1, 2):
        for y in (1, 2):
            acc = np.zeros((4, 4), dtype=complex)
            for first_x, second_x in _PATHS[x]:
                for first_y, second_y in _PATHS[y]:
                    mid = channel.apply_on_spin(first_x @ joint @ first_y.conj().T)
                    acc += second_x @ mid @ second_y.conj().T
            out += jm[x - 1, y - 1] * acc
    return out


_PLUS = np.array([1, 1], dtype=complex) / math.sqrt(2)
_MINUS = np.array([1, -1], dtype=complex) / math.sqrt(2)


def _photon_project(joint, bra):
    """Spin block left after projecting the photon onto ``bra``."""
    b = np.kron(np.asarray(bra, dtype=complex).reshape(1, 2), np.eye(2))
    return b @ joint @ b.conj().T


def _spin_project(joint, spin):
    b = np.kron(np.eye(2), np.eye(2)[spin].reshape(1, 2))
    return b @ joint @ b.conj().T


def _normalized(rho, prob, label):
    if prob < BRANCH_MIN:
        raise DegenerateBranch(f"{label} branch probability {prob:.3g} is too small")
    rho = rho / prob
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix2(rho)


def _as_photon_matrix(q):
    if isinstance(q, TimeBinQubit):
        return np.outer(q.ket, q.ket.conj())
    return np.asarray(q, dtype=complex).reshape(2, 2)


SPIN_INIT = np.array([[1, 0], [0, 0]], dtype=complex)


def herald_branches(q_in, moments, channel, model="projection"):
    """Unnormalized spin states for the plus and minus photon outcomes.

    The minus branch is returned already flipped back by the heralding
    correction, so both branches target the same spin state.
    """
    joint = np.kron(_as_photon_matrix(q_in), SPIN_INIT)
    out = reflect_sequence(joint, moments, channel, model)
    c = HERALD_CORRECTION
    return _photon_project(out, _PLUS), c @ _photon_project(out, _MINUS) @ c.conj().T


def store_from_moments(q_in, moments, channel, outcome="averaged", model="projection"):
    """Stored spin state and branch probability for given reflection moments.

    ``plus`` and ``minus`` return the corrected state of one heralding
    outcome; ``averaged`` mixes the two normalized branches equally and
    reports the total heralding probability.
    """
    plus, minus = herald_branches(q_in, moments, channel, model)
    p_plus, p_minus = np.trace(plus).real, np.trace(minus).real
    if outcome == "plus":
        return _normalized(plus, p_plus, "plus"), p_plus
    if outcome == "minus":
        return _normalized(minus, p_minus, "minus"), p_minus
    if outcome != "averaged":
        raise DomainError(f"unknown outcome {outcome!r}")
    rho_p = _normalized(plus, p_plus, "plus").data
    rho_m = _normalized(minus, p_minus, "minus").data
    return DensityMatrix2(0.5 * (rho_p + rho_m)), p_plus + p_minus


def store_state(q_in, p, s, channel, outcome="averaged", model="projection", moments=None):
    """Write ``q_in`` (qubit or photonic density matrix) into the spin."""
    if moments is None:
        moments = spectral_moments(p, s)
    return store_from_moments(q_in, moments, channel, outcome, model)


def gauss_hermite_moments(p, s, sigma, order=64, tol=1e-9, max_order=1024):
    """Reflection moments averaged over a Gaussian jitter of the photon center.

    The Gauss-Hermite order doubles until successive averages agree to ``tol``.
    """
    if sigma < 0:
        raise DomainError("sigma must be non-negative")
    if sigma == 0:
        return spectral_moments(p, s)

    def average(n):
        x, w = np.polynomial.hermite.hermgauss(n)
        ms = [spectral_moments(p, s.shifted(math.sqrt(2) * sigma * xi)) for xi in x]
        return ReflectionMoments.mixture(w / math.sqrt(math.pi), ms)

    prev = average(order)
    while order < max_order:
        order *= 2
        cur = average(order)
        if np.max(np.abs(cur.as_array() - prev.as_array())) < tol:
            return cur
        prev = cur
    raise NumericalFailure(f"diffusion average not converged at Gauss-Hermite order {order}")


def store_state_diffused(q_in, p, s, channel, outcome, diffusion, model="projection",
                         moments=None):
    """Stored state for a photon whose center jitters as ``diffusion``.

    Under ``projection`` the averaged first moments enter as a product
    (the jitter is averaged at amplitude level); under ``traced`` the
    averaged second moments make the result a mixture over the jitter.
    """
    if moments is None:
        moments = gauss_hermite_moments(p, s, diffusion.sigma)
    return store_from_moments(q_in, moments, channel, outcome, model)


# ----- decoherence ----------------------------------------------------------

def decohere_electron(rho, rates, t_ms):
    """Exact solution of the amplitude-damping master equation over ``t_ms``.

    State index 0 is the lower level: gamma_minus pumps into it and
    gamma_plus out of it.
    """
    if t_ms < 0:
        raise DomainError("time must be non-negative")
    rho = np.array(rho, dtype=complex).reshape(2, 2)
    total = rates.gamma_minus + rates.gamma_plus
    if total == 0:
        return DensityMatrix2(rho)
    ss = rates.gamma_minus / total
    decay = math.exp(-total * t_ms)
    coh = math.exp(-0.5 * total * t_ms)
    tr = rho[0, 0] + rho[1, 1]
    p0 = (rho[0, 0] - ss * tr) * decay + ss * tr
    out = np.array([[p0, rho[0, 1] * coh], [rho[1, 0] * coh, tr - p0]])
    return DensityMatrix2(out)


def decohere_nuclear(rho, rates, t_s):
    """Pure dephasing: coherences shrink by exp(-2 gamma_d t)."""
    if t_s < 0:
        raise DomainError("time must be non-negative")
    rho = np.array(rho, dtype=complex).reshape(2, 2)
    f = math.exp(-2 * rates.gamma_dephase * t_s)
    return DensityMatrix2([[rho[0, 0], rho[0, 1] * f], [rho[1, 0] * f, rho[1, 1]]])


# ----- readout ---------------------------------------------------------------

READ_PHOTON = TOKEN_STATES["+"]


def read_branches(rho_spin, moments, channel, photon_fidelity=1.0, model="projection"):
    """Unnormalized photonic states for spin outcomes 1 and 2 (the latter corrected)."""
    photon = depolarize_generation(READ_PHOTON, photon_fidelity).data
    joint = np.kron(photon, np.asarray(rho_spin, dtype=complex).reshape(2, 2))
    out = reflect_sequence(joint, moments, channel, model)
    c = READ_CORRECTION
    return _spin_project(out, 0), c @ _spin_project(out, 1) @ c.conj().T


def read_from_moments(rho_spin, moments, channel, z_outcome="averaged", photon_fidelity=1.0,
                      model="projection"):
    """Retrieve the spin state onto a fresh photon and measure the spin in Z.

    ``"averaged"`` returns the probability-weighted mixture of both
    corrected outcomes.
    """
    b1, b2 = read_branches(rho_spin, moments, channel, photon_fidelity, model)
    p1, p2 = np.trace(b1).real, np.trace(b2).real
    if z_outcome in (1, "state1"):
        return _normalized(b1, p1, "state1"), p1
    if z_outcome in (2, "state2"):
        return _normalized(b2, p2, "state2"), p2
    if z_outcome != "averaged":
        raise DomainError(f"unknown outcome {z_outcome!r}")
    return _normalized(b1 + b2, p1 + p2, "read"), p1 + p2


def read_state(rho_spin, p, s, channel, z_outcome="averaged", photon_fidelity=1.0,
               model="projection", moments=None):
    if moments is None:
        moments = spectral_moments(p, s)
    return read_from_moments(rho_spin, moments, channel, z_outcome, photon_fidelity, model)


# ----- fidelity bookkeeping ------------------------------------------------

IDEAL_MOMENTS = ReflectionMoments.constant(-1.0, 1.0)


def ideal_stored_ket(q):
    """Spin ket produced by a perfect write of ``q`` (plus outcome)."""
    plus, _ = herald_branches(q, IDEAL_MOMENTS, Pi2Channel.ideal())
    w, v = np.linalg.eigh(plus)
    return v[:, -1]


def _overlap(rho, ket):
    return float((ket.conj() @ rho @ ket).real)


def write_fidelity(q, moments, channel, photon_fidelity=1.0, model="projection"):
    """Branch-probability weighted fidelity of the stored state.

    Equal to the sum over heralding outcomes of p_outcome * F_outcome, so
    probability lost to absorption or mode mismatch counts as infidelity.
    """
    q_in = depolarize_generation(q, photon_fidelity).data
    plus, minus = herald_branches(q_in, moments, channel, model)
    return _overlap(plus + minus, ideal_stored_ket(q))


def read_fidelity(q, moments, channel, photon_fidelity=1.0, model="projection", rho_spin=None):
    """Branch-weighted fidelity of retrieving ``q`` from the spin.

    By default the spin holds the ideally stored state of ``q``.
    """
    if rho_spin is None:
        rho_spin = DensityMatrix2.pure(ideal_stored_ket(q)).data
    b1, b2 = read_branches(rho_spin, moments, channel, photon_fidelity, model)
    return _overlap(b1 + b2, q.ket)


@dataclass(frozen=True)
class ChannelFidelities:
    """Per-token-state write and read fidelities."""

    f_in: dict
    f_out: dict


def stored_fidelity(moments, channel, photon_fidelity=1.0, model="projection",
                    read_moments=None, states=TOKEN_STATES):
    """Write and read fidelities for every token state.

    ``read_moments`` defaults to the write moments (same source for both
    photons).
    """
    read_m = read_moments if read_moments is not None else moments
    f_in = {x: write_fidelity(q, moments, channel, photon_fidelity, model)
            for x, q in states.items()}
    f_out = {x: read_fidelity(q, read_m, channel, photon_fidelity, model)
             for x, q in states.items()}
    return ChannelFidelities(f_in, f_out)


def round_trip_fidelity(q, moments, channel, photon_fidelity=1.0, model="projection"):
    """Write ``q``, read it back, and weight by both heralding probabilities."""
    q_in = depolarize_generation(q, photon_fidelity).data
    plus, minus = herald_branches(q_in, moments, channel, model)
    b1, b2 = read_branches(plus + minus, moments, channel, photon_fidelity, model)
    return _overlap(b1 + b2, q.ket)


def memory_fidelity(rates, t_electron_ms=0.0, t_nuclear_s=0.0, states=TOKEN_STATES):
    """Per-state fidelity of the ideally stored state after decoherence."""
    out = {}
    for label, q in states.items():
        ket = ideal_stored_ket(q)
        rho = DensityMatrix2.pure(ket)
        if t_electron_ms:
            rho = decohere_electron(rho, rates, t_electron_ms)
        if t_nuclear_s:
            rho = decohere_nuclear(rho, rates, t_nuclear_s)
        out[label] = rho.fidelity(ket)
    return out
