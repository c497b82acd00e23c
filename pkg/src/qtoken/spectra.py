"""Photon spectra, spin-dependent cavity reflection and the CP-gate fidelity.

All frequencies are ordinary-frequency GHz. Spectral integrals are taken
against the squared, area-normalized Lorentzian after the substitution
``omega = center + (fwhm/2) tan(theta)``, which maps the whole real line
onto a finite interval with a smooth weight, so no window truncation occurs.
"""

from dataclasses import dataclass, replace
import math

import numpy as np

from . import kernels
from .errors import DomainError, NumericalFailure

#: Default atomic relaxation rate: Debye-Waller factor 0.6 over a 4.5 ns lifetime.
DEFAULT_GAMMA_ATOM_GHZ = 0.6 / (2 * math.pi * 4.5)

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-13
DEFAULT_PANEL_LIMIT = 8000


def _check_finite(**values):
    for name, v in values.items():
        if not np.all(np.isfinite(v)):
            raise DomainError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class PhotonSpectrum:
    """Lorentzian photon line with center ``center`` and FWHM ``fwhm`` (GHz)."""

    center: float
    fwhm: float

    def __post_init__(self):
        _check_finite(center=self.center, fwhm=self.fwhm)
        if self.fwhm <= 0:
            raise DomainError(f"fwhm must be positive, got {self.fwhm}")

    @classmethod
    def from_lifetime(cls, center, lifetime_ns):
        """Line of a source with radiative lifetime ``lifetime_ns``."""
        if lifetime_ns <= 0:
            raise DomainError("lifetime must be positive")
        return cls(center, 1.0 / (2 * math.pi * lifetime_ns))

    @property
    def lifetime_ns(self):
        return 1.0 / (2 * math.pi * self.fwhm)

    @property
    def normalization(self):
        """Factor making the squared amplitude integrate to one."""
        return math.sqrt(math.pi * self.fwhm)

    def lineshape(self, omega):
        """Area-normalized Lorentzian (unscaled line shape)."""
        hw = 0.5 * self.fwhm
        return (hw / math.pi) / ((np.asarray(omega) - self.center) ** 2 + hw * hw)

    def amplitude(self, omega):
        """Spectral amplitude whose square has unit integral."""
        return self.normalization * self.lineshape(omega)

    def density(self, omega):
        return self.amplitude(omega) ** 2

    def shifted(self, offset):
        return replace(self, center=self.center + offset)


@dataclass(frozen=True)
class CavitySpinParams:
    """Atom-cavity-spin parameters.

    ``delta`` is the atom-cavity detuning, so the cavity sits at
    ``omega_a - delta``. Leaving ``kappa_l`` as None selects a half-open
    cavity where all loss goes through the coupling port.
    """

    omega_a: float
    delta: float
    kappa: float
    g: float
    gamma_atom: float = DEFAULT_GAMMA_ATOM_GHZ
    omega_s: float = 1.0
    kappa_l: float | None = None

    def __post_init__(self):
        if self.kappa_l is None:
            object.__setattr__(self, "kappa_l", self.kappa)
        _check_finite(omega_a=self.omega_a, delta=self.delta, kappa=self.kappa,
                      g=self.g, gamma_atom=self.gamma_atom, omega_s=self.omega_s,
                      kappa_l=self.kappa_l)
        if self.kappa <= 0:
            raise DomainError(f"kappa must be positive, got {self.kappa}")
        if self.gamma_atom < 0:
            raise DomainError("gamma_atom must be non-negative")
        if not 0 <= self.kappa_l <= self.kappa:
            raise DomainError("kappa_l must lie in [0, kappa]")
        if self.g < 0:
            raise DomainError("g must be non-negative")
        if self.omega_s <= 0:
            raise DomainError("omega_s must be positive")

    @property
    def omega_c(self):
        return self.omega_a - self.delta

    @property
    def half_open(self):
        return self.kappa_l == self.kappa

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class CouplingModel:
    """Coupling strength as a function of cavity frequency.

    ``mode="fixed"`` returns ``g_ref`` everywhere; ``"sqrt-frequency"``
    scales it as the square root of the cavity frequency.
    """

    g_ref: float
    omega_ref: float = 1.0
    mode: str = "fixed"

    def __post_init__(self):
        if self.mode not in ("fixed", "sqrt-frequency"):
            raise DomainError(f"unknown coupling mode {self.mode!r}")
        if self.g_ref < 0 or self.omega_ref <= 0:
            raise DomainError("g_ref must be >= 0 and omega_ref > 0")

    def coupling(self, omega_c):
        if self.mode == "fixed":
            return self.g_ref
        if omega_c <= 0:
            raise DomainError("sqrt-frequency coupling needs a positive cavity frequency")
        return self.g_ref * math.sqrt(omega_c / self.omega_ref)


def _spin_shift(p, spin):
    if spin in (1, "state1"):
        return 0.0
    if spin in (2, "state2"):
        return p.omega_s
    raise DomainError(f"spin must be 1 or 2, got {spin!r}")


def reflection_coefficient(omega, p, spin=1):
    """Complex reflection amplitude for the spin in state ``spin`` (1 or 2)."""
    _check_finite(omega=omega)
    x = np.asarray(omega, dtype=float) - _spin_shift(p, spin)
    r = kernels.reflection(x, p.omega_a, p.delta, p.kappa, p.kappa_l, p.g, p.gamma_atom)
    return r if np.ndim(r) else complex(r)


def reflection_modulus(omega, p, spin=1):
    return np.abs(reflection_coefficient(omega, p, spin))


def reflection_phase(omega, p, spin=1):
    """Phase of the reflection amplitude in (-pi, pi]."""
    return np.angle(reflection_coefficient(omega, p, spin))


def cooperativity(p):
    """Atom-cavity cooperativity ``g^2 / (kappa Gamma)``."""
    if p.kappa == 0 or p.gamma_atom == 0:
        raise DomainError("cooperativity needs kappa > 0 and gamma_atom > 0")
    return p.g ** 2 / (p.kappa * p.gamma_atom)


def coupling_for_cooperativity(c, kappa, gamma_atom=DEFAULT_GAMMA_ATOM_GHZ):
    """Coupling strength giving cooperativity ``c``."""
    if c < 0 or kappa <= 0 or gamma_atom <= 0:
        raise DomainError("need c >= 0, kappa > 0, gamma_atom > 0")
    return math.sqrt(c * kappa * gamma_atom)


@dataclass(frozen=True)
class ReflectionMoments:
    """Integrals of reflection products against the squared spectrum.

    ``m1``/``m2`` are the first moments of r1 and r2, ``j11``/``j22`` the
    moments of |r1|^2 and |r2|^2, and ``j12`` the moment of r1 conj(r2);
    the remaining product r1* r2 is its conjugate.
    """

    norm: float
    m1: complex
    m2: complex
    j11: float
    j22: float
    j12: complex
    error: float = 0.0
    panels: int = 0

    @classmethod
    def constant(cls, r1, r2):
        """Moments of frequency-independent reflections (delta-like photon)."""
        r1, r2 = complex(r1), complex(r2)
        return cls(1.0, r1, r2, abs(r1) ** 2, abs(r2) ** 2, r1 * r2.conjugate())

    def cp_fidelity(self):
        return abs(3 * self.m1 - self.m2) ** 2 / 16.0

    def as_array(self):
        return np.array([self.norm, self.m1.real, self.m1.imag, self.m2.real,
                         self.m2.imag, self.j11, self.j22, self.j12.real, self.j12.imag])

    @classmethod
    def mixture(cls, weights, moments):
        """Weighted combination, used to average over spectral diffusion."""
        acc = sum(w * m.as_array() for w, m in zip(weights, moments))
        return cls._from_array(acc, sum(w * m.error for w, m in zip(weights, moments)),
                               sum(m.panels for m in moments))

    @classmethod
    def _from_array(cls, v, error=0.0, panels=0):
        return cls(float(v[0]), complex(v[1], v[2]), complex(v[3], v[4]),
                   float(v[5]), float(v[6]), complex(v[7], v[8]), float(error), int(panels))


def _breakpoints(p, s, base_panels=8):
    """Panel edges in theta: a uniform grid plus the resonance positions."""
    half = 0.5 * s.fwhm
    feats = []
    for pole in kernels.polariton_positions(p.omega_a, p.delta, p.kappa, p.g, p.gamma_atom):
        feats += [pole, pole + p.omega_s]
    feats += [p.omega_a, p.omega_a + p.omega_s, p.omega_c, p.omega_c + p.omega_s]
    thetas = np.arctan((np.asarray(feats) - s.center) / half)
    edges = np.concatenate([np.linspace(-np.pi / 2, np.pi / 2, base_panels + 1), thetas])
    edges = np.unique(np.clip(edges, -np.pi / 2, np.pi / 2))
    # drop slivers that would only cost kernel evaluations
    keep = np.concatenate([[True], np.diff(edges) > 1e-9])
    edges = edges[keep]
    edges[0], edges[-1] = -np.pi / 2, np.pi / 2
    return edges


def spectral_moments(p, s, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL,
                     limit=DEFAULT_PANEL_LIMIT, backend=None):
    """Adaptive Gauss-Kronrod evaluation of all reflection moments.

    Raises NumericalFailure when the panel budget runs out before the
    error estimate meets ``max(atol, rtol * scale)``.
    """
    fn = kernels.python_spectral_moments if backend == "python" else kernels.spectral_moments
    vals, err, panels, ok = fn(s.center, 0.5 * s.fwhm, p.omega_a, p.delta, p.kappa,
                               p.kappa_l, p.g, p.gamma_atom, p.omega_s,
                               _breakpoints(p, s), rtol, atol, limit)
    if not ok or not np.all(np.isfinite(vals)):
        raise NumericalFailure(
            f"spectral quadrature did not converge: error {err:.3g} after {panels} panels")
    return ReflectionMoments._from_array(vals, err, panels)


def spectrum_norm(s, **kw):
    """Quadrature value of the integral of the squared spectrum (should be 1)."""
    dummy = CavitySpinParams(omega_a=s.center, delta=0.0, kappa=1.0, g=0.0)
    return spectral_moments(dummy, s, **kw).norm


def cp_gate_fidelity(p, s, **kw):
    """Spin-photon CP-gate fidelity ``|int (3 r1 - r2) S^2|^2 / 16``."""
    return spectral_moments(p, s, **kw).cp_fidelity()


def cp_gate_infidelity(p, s, **kw):
    return 1.0 - cp_gate_fidelity(p, s, **kw)
