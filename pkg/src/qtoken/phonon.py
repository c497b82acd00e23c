"""Phonon-limited spin rates from cubic elasticity and strain susceptibility.

Inputs use GPa, g/cm^3, PHz and GHz; the cross-section is evaluated in SI
(rad/s for frequencies) and comes out in s^2, so rates are in 1/s before
the final conversion to 1/ms.
"""

from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np
from scipy import constants
from scipy.integrate import lebedev_rule

from .errors import ConfigError, DomainError, NumericalFailure
from .spin_channel import DecoherenceRates

HBAR = constants.hbar
K_B = constants.k

DIAMOND = dict(c11=1079.6, c12=126.73, c44=578.16, density=3.51)
# strain susceptibilities (PHz) for the ground (g) and excited (u) manifolds
SUSCEPTIBILITY = {"g": (0.787, -0.562), "u": (0.956, -2.555)}


@dataclass(frozen=True)
class ElasticMedium:
    """Cubic crystal: stiffness constants in GPa and density in g/cm^3."""

    c11: float
    c12: float
    c44: float
    density: float

    def __post_init__(self):
        if min(self.c11, self.c44, self.density) <= 0:
            raise DomainError("c11, c44 and density must be positive")
        if self.c11 <= abs(self.c12):
            raise DomainError("cubic stability needs c11 > |c12|")

    @classmethod
    def diamond(cls):
        return cls(**DIAMOND)

    @classmethod
    def isotropic(cls, c11, c12, density):
        return cls(c11, c12, 0.5 * (c11 - c12), density)

    def stiffness(self):
        """Full fourth-rank stiffness tensor C_ijkl (GPa)."""
        voigt = np.zeros((6, 6))
        voigt[:3, :3] = self.c12
        voigt[np.arange(3), np.arange(3)] = self.c11
        voigt[np.arange(3, 6), np.arange(3, 6)] = self.c44
        pair = {(0, 0): 0, (1, 1): 1, (2, 2): 2, (1, 2): 3, (2, 1): 3,
                (0, 2): 4, (2, 0): 4, (0, 1): 5, (1, 0): 5}
        c = np.zeros((3, 3, 3, 3))
        for (i, j), a in pair.items():
            for (k, l), b in pair.items():
                c[i, j, k, l] = voigt[a, b]
        return c


@lru_cache(maxsize=32)
def _stiffness_cached(medium):
    return medium.stiffness()


def christoffel_matrices(directions, medium):
    """Christoffel matrices C_ijkl n_j n_k for unit directions of shape (N, 3)."""
    c = _stiffness_cached(medium)
    return np.einsum("ijkl,nj,nk->nil", c, directions, directions)


def _modes(directions, medium):
    """Velocities (km/s, descending) and polarizations (columns) per direction."""
    lam, vec = np.linalg.eigh(christoffel_matrices(directions, medium))
    lam, vec = lam[:, ::-1], vec[:, :, ::-1]
    if np.any(lam <= 0):
        raise NumericalFailure("non-positive Christoffel eigenvalue")
    # GPa / (g/cm^3) = 1e6 m^2/s^2, so the square root is in km/s
    return np.sqrt(lam / medium.density), vec


def christoffel_velocities(direction, medium):
    """Three (velocity km/s, polarization) pairs for a propagation direction."""
    n = np.asarray(direction, dtype=float).reshape(3)
    if abs(np.linalg.norm(n) - 1) > 1e-12:
        raise DomainError("direction must be a unit vector")
    v, q = _modes(n[None, :], medium)
    return [(float(v[0, m]), q[0, :, m]) for m in range(3)]


def strain_matrices(d, f):
    """The x and y strain-susceptibility matrices of one orbital manifold (PHz)."""
    dx = np.array([[d, 0, f / 2], [0, -d, 0], [f / 2, 0, 0]], dtype=float)
    dy = np.array([[0, -d, 0], [-d, 0, f / 2], [0, f / 2, 0]], dtype=float)
    return {"x": dx, "y": dy}


def sphere_rule(kind="lebedev", order=131):
    """Nodes (N, 3) and weights on the unit sphere; weights sum to 4 pi.

    ``kind="product"`` takes ``order`` Gauss-Legendre nodes in cos(theta)
    and ``2 * order`` uniform nodes in phi.
    """
    if kind == "lebedev":
        x, w = lebedev_rule(order)
        return x.T, w
    if kind == "product":
        u, wu = np.polynomial.legendre.leggauss(order)
        nphi = 2 * order
        phi = 2 * np.pi * np.arange(nphi) / nphi
        s = np.sqrt(1 - u * u)
        nodes = np.stack([np.outer(s, np.cos(phi)), np.outer(s, np.sin(phi)),
                          np.outer(u, np.ones(nphi))], axis=-1).reshape(-1, 3)
        return nodes, np.outer(wu, np.full(nphi, 2 * np.pi / nphi)).ravel()
    raise DomainError(f"unknown sphere rule {kind!r}")


def _cross_section_on(nodes, weights, d_matrix, medium):
    v, q = _modes(nodes, medium)
    # tr(D k q^T) = q . (D k)
    dk = nodes @ np.asarray(d_matrix, dtype=float).T
    proj = np.einsum("ni,nim->nm", dk, q)
    c_si = v * 1e3
    rho_si = medium.density * 1e3
    integrand = (proj ** 2 / c_si ** 5).sum(axis=1)
    d_scale = (2 * np.pi * 1e15) ** 2  # PHz -> rad/s, squared
    return HBAR * d_scale * float(weights @ integrand) / (16 * np.pi ** 3 * rho_si)


def absorption_cross_section(d_matrix, medium, rtol=1e-6):
    """Phonon absorption cross-section (s^2) of a strain-susceptibility matrix.

    Two high-order Lebedev rules are compared first; if they disagree the
    product rule is doubled from 128 x 256 until successive values agree.
    """
    d_matrix = np.asarray(d_matrix, dtype=float)
    if not np.any(d_matrix):
        return 0.0
    prev = _cross_section_on(*sphere_rule("lebedev", 125), d_matrix, medium)
    cur = _cross_section_on(*sphere_rule("lebedev", 131), d_matrix, medium)
    if abs(cur - prev) <= rtol * abs(cur):
        return cur
    order = 128
    prev = _cross_section_on(*sphere_rule("product", order), d_matrix, medium)
    while order < 2048:
        order *= 2
        cur = _cross_section_on(*sphere_rule("product", order), d_matrix, medium)
        if abs(cur - prev) <= rtol * abs(cur):
            return cur
        prev = cur
    raise NumericalFailure("phonon cross-section did not converge")


def occupation(omega_ghz, temperature_k):
    """Bose occupation at frequency omega; the omega < 0 branch adds one."""
    if temperature_k <= 0:
        raise DomainError("temperature must be positive")
    if omega_ghz == 0:
        raise DomainError("occupation diverges at zero frequency")
    x = HBAR * 2 * np.pi * abs(omega_ghz) * 1e9 / (K_B * temperature_k)
    n = 1.0 / math.expm1(x) if x < 700 else 0.0
    return n + 1.0 if omega_ghz < 0 else n


@dataclass(frozen=True)
class RateMatrixInput:
    """Phonon matrix elements ``h[mode][i][j]``, level frequencies (GHz) and temperature (K)."""

    h: dict
    level_ghz: tuple
    temperature_k: float
    chi: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.temperature_k <= 0:
            raise DomainError("temperature must be positive")


def phonon_rate(i, j, inp, chi=None):
    """Rate (1/ms) of the phonon-induced jump from level i to level j.

    Going up in energy absorbs a phonon (weight n), going down emits one
    (weight n + 1).
    """
    if i == j:
        raise DomainError("a rate needs two distinct levels")
    chi = chi if chi is not None else inp.chi
    if not chi:
        raise ConfigError("no cross-sections supplied")
    dw = 2 * np.pi * (inp.level_ghz[j] - inp.level_ghz[i]) * 1e9
    total = 0.0
    for mode, x in chi.items():
        try:
            h = complex(np.asarray(inp.h[mode])[i][j])
        except (KeyError, IndexError) as exc:
            raise ConfigError(f"missing matrix element h[{mode}][{i}][{j}]") from exc
        total += abs(h) ** 2 * x
    n = occupation(inp.level_ghz[j] - inp.level_ghz[i], inp.temperature_k)
    return 2 * np.pi * total * abs(dw) ** 3 * n * 1e-3


def ground_cross_sections(medium=None, manifold="g"):
    """Cross-sections of the x and y strain modes of a manifold (s^2)."""
    medium = medium or ElasticMedium.diamond()
    d, f = SUSCEPTIBILITY[manifold]
    return {k: absorption_cross_section(m, medium) for k, m in strain_matrices(d, f).items()}


def electron_rates(inp, lower=0, upper=1, dephasing_per_s=0.0):
    """Decoherence rates of the qubit formed by levels ``lower`` and ``upper``."""
    return DecoherenceRates(gamma_minus=phonon_rate(upper, lower, inp),
                            gamma_plus=phonon_rate(lower, upper, inp),
                            gamma_dephase=dephasing_per_s)
