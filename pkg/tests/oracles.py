"""Independent reference implementations used only by the tests."""

import math

import numpy as np


def reflection(x, omega_a, delta, kappa, kappa_l, g, gamma_atom):
    """Reflection amplitude written out directly from the input-output relation."""
    atom = -1j * (x - omega_a) + gamma_atom
    cav = -1j * (x - omega_a + delta) + kappa
    return -1 + 2 * kappa_l * atom / (cav * atom + g * g)


def lorentz_moment_residue(r, center, fwhm, h=1e-4):
    """Integral of r against the squared normalized Lorentzian by residues.

    Valid for r analytic in the upper half plane; the double pole at
    center + i fwhm/2 gives r(z) - i (fwhm/2) r'(z).
    """
    z = center + 0.5j * fwhm
    # fourth-order central difference of an analytic function
    d = (-r(z + 2 * h) + 8 * r(z + h) - 8 * r(z - h) + r(z - 2 * h)) / (12 * h)
    return r(z) - 0.5j * fwhm * d


def theta_midpoint(f, center, fwhm, n=1_000_000):
    """Midpoint rule for int f(w) S(w)^2 dw after w = center + (fwhm/2) tan(theta)."""
    theta = -np.pi / 2 + (np.arange(n) + 0.5) * np.pi / n
    w = center + 0.5 * fwhm * np.tan(theta)
    weight = (2 / np.pi) * np.cos(theta) ** 2
    return np.sum(f(w) * weight) * np.pi / n


def lindblad_rk4(rho, gamma_minus, gamma_plus, t, steps=20000):
    """RK4 integration of the two-level relaxation master equation."""
    down = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|
    up = down.conj().T
    ops = [(gamma_minus, down), (gamma_plus, up)]

    def rhs(r):
        out = np.zeros((2, 2), dtype=complex)
        for rate, L in ops:
            LdL = L.conj().T @ L
            out += rate * (L @ r @ L.conj().T - 0.5 * (LdL @ r + r @ LdL))
        return out

    r = np.array(rho, dtype=complex)
    dt = t / steps
    for _ in range(steps):
        k1 = rhs(r)
        k2 = rhs(r + 0.5 * dt * k1)
        k3 = rhs(r + 0.5 * dt * k2)
        k4 = rhs(r + dt * k3)
        r = r + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return r


def ideal_store_ket(a, b):
    """Spin ket after storing a|e> + b|l> with r1 = -1, r2 = +1 and an ideal
    y rotation, traced by hand through the three steps (either outcome,
    after correction)."""
    v = np.array([-(a + b), b - a], dtype=complex) / math.sqrt(2)
    return v / np.linalg.norm(v)


def christoffel_cubic(n, c11, c12, c44, density):
    """Velocities (km/s, descending) from the closed-form cubic Christoffel matrix."""
    n = np.asarray(n, dtype=float)
    g = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            g[i, j] = (c11 * n[i] ** 2 + c44 * (1 - n[i] ** 2)) if i == j \
                else (c12 + c44) * n[i] * n[j]
    lam, vec = np.linalg.eigh(g)
    return np.sqrt(lam[::-1] / density), vec[:, ::-1]


def cross_section_midpoint(d_matrix, medium_consts, n_theta=1000, n_phi=1000):
    """Cross-section on a midpoint (theta, phi) grid with the closed-form Christoffel matrix."""
    from scipy import constants
    c11, c12, c44, density = medium_consts
    th = (np.arange(n_theta) + 0.5) * np.pi / n_theta
    ph = (np.arange(n_phi) + 0.5) * 2 * np.pi / n_phi
    T, P = np.meshgrid(th, ph, indexing="ij")
    n = np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], -1).reshape(-1, 3)
    w = (np.sin(T) * (np.pi / n_theta) * (2 * np.pi / n_phi)).ravel()
    g = np.empty((n.shape[0], 3, 3))
    for i in range(3):
        for j in range(3):
            g[:, i, j] = (c11 * n[:, i] ** 2 + c44 * (1 - n[:, i] ** 2)) if i == j \
                else (c12 + c44) * n[:, i] * n[:, j]
    lam, q = np.linalg.eigh(g)
    v = np.sqrt(lam / density) * 1e3
    dk = n @ np.asarray(d_matrix).T
    proj = np.einsum("ni,nim->nm", dk, q)
    integrand = (proj ** 2 / v ** 5).sum(axis=1)
    scale = (2 * np.pi * 1e15) ** 2 * constants.hbar / (16 * np.pi ** 3 * density * 1e3)
    return scale * float(w @ integrand)
