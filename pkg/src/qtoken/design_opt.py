"""Point and fabrication-robust optimization of the cavity design.

The design vector is ``(kappa, delta, omega0_offset)`` in GHz, where
``omega0_offset`` is the photon center relative to the atomic line. The
global stage is differential evolution on a fixed population, refined by
Nelder-Mead restarted from the best few population members.
"""

from dataclasses import dataclass, asdict, field
import math

import numpy as np
from scipy.optimize import differential_evolution, minimize
from scipy.stats import qmc

from .errors import DomainError, NumericalFailure, OptimizationFailure
from .spectra import CavitySpinParams, CouplingModel, PhotonSpectrum, spectral_moments

DEFAULT_BOUNDS = ((1.0, 200.0), (-300.0, 300.0), (-300.0, 300.0))
# value assigned to designs whose fidelity integral fails; worse than any real infidelity
_PENALTY = 2.0


@dataclass(frozen=True)
class UncertaintyRegion:
    """Box of fabrication errors in kappa and cavity frequency (GHz)."""

    half_kappa: float = 0.0
    half_omega_c: float = 0.0
    n_kappa: int = 5
    n_omega_c: int = 5

    def __post_init__(self):
        if self.half_kappa < 0 or self.half_omega_c < 0:
            raise DomainError("region half-widths must be non-negative")
        for h, n in ((self.half_kappa, self.n_kappa), (self.half_omega_c, self.n_omega_c)):
            if n < 1 or (h > 0 and n < 2):
                raise DomainError("need at least two grid points along a non-zero half-width")

    def offsets(self):
        """Grid of (d_kappa, d_omega_c) pairs with uniform weight."""
        dk = np.linspace(-self.half_kappa, self.half_kappa, self.n_kappa) if self.half_kappa else [0.0]
        dc = (np.linspace(-self.half_omega_c, self.half_omega_c, self.n_omega_c)
              if self.half_omega_c else [0.0])
        return [(float(a), float(b)) for a in dk for b in dc]

    @property
    def is_point(self):
        return self.half_kappa == 0 and self.half_omega_c == 0


@dataclass(frozen=True)
class DesignProblem:
    """Everything held fixed while the cavity design is optimized.

    ``base`` supplies omega_a, the atomic relaxation, the spin splitting and
    the ratio kappa_l/kappa; its kappa, delta and g are overwritten.
    """

    base: CavitySpinParams
    coupling: CouplingModel
    fwhm: float

    def params(self, kappa, delta):
        if kappa <= 0:
            raise DomainError("kappa must be positive")
        ratio = self.base.kappa_l / self.base.kappa
        g = self.coupling.coupling(self.base.omega_a - delta)
        return self.base.with_(kappa=kappa, delta=delta, g=g, kappa_l=ratio * kappa)

    def spectrum(self, omega0_offset):
        return PhotonSpectrum(self.base.omega_a + omega0_offset, self.fwhm)

    def point_infidelity(self, x, d_kappa=0.0, d_omega_c=0.0):
        kappa, delta, offset = x
        # shifting the cavity up by d_omega_c lowers the atom-cavity detuning
        p = self.params(kappa + d_kappa, delta - d_omega_c)
        return 1.0 - spectral_moments(p, self.spectrum(offset)).cp_fidelity()

    def average_infidelity(self, x, region):
        vals = [self.point_infidelity(x, a, b) for a, b in region.offsets()]
        return math.fsum(vals) / len(vals)


@dataclass(frozen=True)
class OptimalDesign:
    kappa: float
    delta: float
    omega0_offset: float
    infidelity: float
    average_infidelity: float
    cooperativity: float
    region: UncertaintyRegion = field(default_factory=UncertaintyRegion)
    evaluations: int = 0
    failed_evaluations: int = 0

    @property
    def x(self):
        return np.array([self.kappa, self.delta, self.omega0_offset])

    def to_dict(self):
        d = asdict(self)
        d["region"] = asdict(self.region)
        return d


class _Objective:
    """Counts evaluations, absorbs quadrature failures and tracks the best point."""

    def __init__(self, problem, region):
        self.problem = problem
        self.region = region
        self.calls = 0
        self.failures = 0
        self.best_x = None
        self.best_f = math.inf

    def __call__(self, x):
        self.calls += 1
        try:
            f = self.problem.average_infidelity(x, self.region)
        except (NumericalFailure, DomainError):
            self.failures += 1
            return _PENALTY
        if not math.isfinite(f):
            self.failures += 1
            return _PENALTY
        if _better(f, x, self.best_f, self.best_x):
            self.best_f, self.best_x = f, np.array(x, dtype=float)
        return f


def _better(f, x, f_ref, x_ref):
    """Lower infidelity wins; exact ties go to the smaller kappa."""
    if x_ref is None or f < f_ref:
        return True
    return f == f_ref and x[0] < x_ref[0]


def _optimize(problem, bounds, region, seed, popsize, generations, n_starts, xatol):
    bounds = np.array(bounds if bounds is not None else DEFAULT_BOUNDS, dtype=float)
    if bounds.shape != (3, 2) or np.any(bounds[:, 1] < bounds[:, 0]):
        raise DomainError("bounds must be three (low, high) pairs with low <= high")
    obj = _Objective(problem, region)
    free = bounds[:, 1] > bounds[:, 0]
    if not free.any():
        obj(bounds[:, 0])
    else:
        lo, hi = bounds[free, 0], bounds[free, 1]
        fixed = bounds[:, 0].copy()

        def full(z):
            x = fixed.copy()
            x[free] = z
            return x

        def sub(z):
            return obj(full(z))

        rng = np.random.default_rng(seed)
        sampler = qmc.LatinHypercube(d=int(free.sum()), rng=rng)
        init = qmc.scale(sampler.random(popsize), lo, hi)
        de = differential_evolution(sub, list(zip(lo, hi)), maxiter=generations, init=init,
                                    rng=rng, polish=False, tol=1e-10, updating="deferred")
        order = np.argsort(de.population_energies, kind="stable")
        starts = [de.x] + [de.population[i] for i in order[: n_starts - 1]]
        for z0 in starts:
            minimize(sub, z0, method="Nelder-Mead", bounds=list(zip(lo, hi)),
                     options={"xatol": xatol, "fatol": 1e-16, "maxiter": 4000,
                              "maxfev": 8000})
    if obj.best_x is None:
        raise OptimizationFailure("every objective evaluation failed", best=None)
    x = obj.best_x
    try:
        point = problem.point_infidelity(x)
        avg = obj.best_f if not region.is_point else point
        p = problem.params(x[0], x[1])
    except (NumericalFailure, DomainError) as exc:
        raise OptimizationFailure(f"re-evaluation at the optimum failed: {exc}", best=x) from exc
    coop = p.g ** 2 / (p.kappa * p.gamma_atom) if p.gamma_atom > 0 else math.inf
    return OptimalDesign(float(x[0]), float(x[1]), float(x[2]), point, avg, coop, region,
                         obj.calls, obj.failures)


def optimize_standard(problem, bounds=None, seed=0, popsize=32, generations=400,
                      n_starts=4, xatol=1e-12):
    """Maximize the point CP-gate fidelity over the design box."""
    return _optimize(problem, bounds, UncertaintyRegion(), seed, popsize, generations,
                     n_starts, xatol)


def optimize_robust(problem, region, bounds=None, seed=0, popsize=32, generations=400,
                    n_starts=4, xatol=1e-12):
    """Maximize the fidelity averaged over the fabrication-error grid."""
    return _optimize(problem, bounds, region, seed, popsize, generations, n_starts, xatol)


@dataclass
class Landscape:
    """Row-major infidelity grid: rows follow kappa, columns follow delta."""

    kappa: np.ndarray
    delta: np.ndarray
    omega0_offset: float
    infidelity: np.ndarray
    failed: np.ndarray

    def rows(self):
        for i, k in enumerate(self.kappa):
            for j, d in enumerate(self.delta):
                yield float(k), float(d), float(self.infidelity[i, j])


def fidelity_landscape(center, problem, kappa_span=2.0, delta_span=2.0, resolution=(21, 21)):
    """Infidelity over ``center +- span`` in (kappa, delta) at fixed photon offset.

    A resolution of 1 along an axis collapses it onto the center value.
    Failed cells are flagged and hold NaN instead of aborting the grid.
    """
    nk, nd = (resolution, resolution) if np.isscalar(resolution) else resolution
    if nk < 1 or nd < 1:
        raise DomainError("resolution must be at least 1 per axis")
    ks = np.linspace(center.kappa - kappa_span, center.kappa + kappa_span, nk) if nk > 1 \
        else np.array([center.kappa])
    ds = np.linspace(center.delta - delta_span, center.delta + delta_span, nd) if nd > 1 \
        else np.array([center.delta])
    grid = np.full((nk, nd), np.nan)
    failed = np.zeros((nk, nd), dtype=bool)
    for i, k in enumerate(ks):
        for j, d in enumerate(ds):
            try:
                grid[i, j] = problem.point_infidelity((k, d, center.omega0_offset))
            except (NumericalFailure, DomainError):
                failed[i, j] = True
    return Landscape(ks, ds, center.omega0_offset, grid, failed)
