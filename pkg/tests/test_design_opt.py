import math

import numpy as np
import pytest

from qtoken.design_opt import (DesignProblem, OptimalDesign, UncertaintyRegion,
                               fidelity_landscape, optimize_robust, optimize_standard)
from qtoken.errors import DomainError, NumericalFailure, OptimizationFailure
from qtoken.spectra import (CavitySpinParams, CouplingModel, PhotonSpectrum,
                            coupling_for_cooperativity, spectral_moments)

GAMMA = 0.6 / (2 * math.pi * 4.5)
G_REF = coupling_for_cooperativity(35.85, 34.07, GAMMA)
REPORTED = (34.07, 108.76, -63.66)
NARROW = ((33.0, 35.0), (107.0, 110.0), (-65.0, -62.0))


@pytest.fixture(scope="module")
def problem():
    base = CavitySpinParams(0.0, 108.76, 34.07, G_REF, omega_s=70.8039)
    return DesignProblem(base, CouplingModel(G_REF), 3.18 / (2 * math.pi))


def test_region_grid():
    r = UncertaintyRegion(2.0, 2.0)
    offs = r.offsets()
    assert len(offs) == 25 and (-2.0, -2.0) in offs and (2.0, 2.0) in offs
    assert UncertaintyRegion().offsets() == [(0.0, 0.0)] and UncertaintyRegion().is_point
    with pytest.raises(DomainError):
        UncertaintyRegion(-1.0, 0.0)
    with pytest.raises(DomainError):
        UncertaintyRegion(1.0, 1.0, n_kappa=1)


def test_average_matches_naive_double_loop(problem):
    x = np.array(REPORTED)
    region = UncertaintyRegion(2.0, 1.5, 3, 4)
    total, count = 0.0, 0
    for dk in np.linspace(-2.0, 2.0, 3):
        for dc in np.linspace(-1.5, 1.5, 4):
            p = CavitySpinParams(0.0, x[1] - dc, x[0] + dk, G_REF, omega_s=70.8039)
            s = PhotonSpectrum(x[2], 3.18 / (2 * math.pi))
            total += 1.0 - spectral_moments(p, s).cp_fidelity()
            count += 1
    assert problem.average_infidelity(x, region) == pytest.approx(total / count, abs=1e-12)


def test_average_dominates_point_at_point_optimum(problem):
    # every grid value is >= the minimum, so the mean is too
    best = optimize_standard(problem, NARROW, seed=1, popsize=8, generations=5, n_starts=1)
    region = UncertaintyRegion(0.5, 0.5, 3, 3)
    assert problem.average_infidelity(best.x, region) >= best.infidelity - 1e-15


def test_zero_region_equals_standard(problem):
    a = optimize_standard(problem, NARROW, seed=3, popsize=8, generations=4, n_starts=1)
    b = optimize_robust(problem, UncertaintyRegion(), NARROW, seed=3, popsize=8, generations=4,
                        n_starts=1)
    assert np.array_equal(a.x, b.x)
    assert a.infidelity == b.infidelity == b.average_infidelity


def test_degenerate_bounds_evaluate_single_point(problem):
    box = tuple((v, v) for v in REPORTED)
    res = optimize_standard(problem, box)
    assert res.evaluations == 1
    assert res.infidelity == pytest.approx(problem.point_infidelity(REPORTED), rel=1e-14)
    assert res.cooperativity == pytest.approx(35.85)


def test_bad_bounds_rejected(problem):
    with pytest.raises(DomainError):
        optimize_standard(problem, ((2, 1), (0, 1), (0, 1)))


def test_all_failures_raise(problem, monkeypatch):
    def boom(*a, **k):
        raise NumericalFailure("forced")
    monkeypatch.setattr(DesignProblem, "point_infidelity", boom)
    with pytest.raises(OptimizationFailure):
        optimize_standard(problem, NARROW, popsize=5, generations=1, n_starts=1)


def test_landscape_single_cell(problem):
    c = OptimalDesign(*REPORTED, infidelity=0.0, average_infidelity=0.0, cooperativity=0.0)
    land = fidelity_landscape(c, problem, resolution=1)
    assert land.infidelity.shape == (1, 1)
    assert land.infidelity[0, 0] == problem.point_infidelity(REPORTED)


def test_landscape_minimum_not_below_optimizer(problem):
    best = optimize_standard(problem, NARROW, seed=0, popsize=10, generations=20, n_starts=2)
    land = fidelity_landscape(best, problem, 0.5, 0.5, (7, 7))
    assert np.nanmin(land.infidelity) >= best.infidelity - 1e-9
    assert len(list(land.rows())) == 49


def test_landscape_flags_failed_cells(problem):
    c = OptimalDesign(1.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    land = fidelity_landscape(c, problem, kappa_span=2.0, delta_span=0.0, resolution=(3, 1))
    # kappa = -1 is unphysical: flagged, not fatal
    assert land.failed[0, 0] and math.isnan(land.infidelity[0, 0])
    assert not land.failed[2, 0]


def test_threshold_contour_near_robust_design(problem):
    # a 1e-4 infidelity contour lies within +-2 GHz of a robust design
    c = OptimalDesign(35.53, 115.5, -79.6, 0.0, 0.0, 0.0)
    land = fidelity_landscape(c, problem, 2.0, 2.0, (9, 9))
    assert np.nanmin(land.infidelity) < 1e-4 < np.nanmax(land.infidelity)
