"""End-to-end evaluation of a configured token experiment.

Turns a validated configuration into cavity parameters, photon spectra,
channel fidelities and finally the average token acceptance rate, and
runs one-dimensional sweeps over bandwidth, efficiency, link length,
storage time and spectral diffusion.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import math

import numpy as np

from . import phonon
from .config import ScenarioConfig, load_config, validate
from .design_opt import DesignProblem
from .errors import ConfigError, QTokenError
from .spectra import CavitySpinParams, CouplingModel, PhotonSpectrum, coupling_for_cooperativity
from .spin_channel import (DecoherenceRates, Pi2Channel, gauss_hermite_moments,
                           memory_fidelity, stored_fidelity)
from .token import (EfficiencyBudget, TokenTiming, acceptance_rate, average_fidelity,
                    combined_efficiency, min_token_size)

SWEEP_AXES = {
    "bandwidth": ("photon", "linewidth_ghz"),
    "efficiency": ("link", "eta_c"),
    "length": ("link", "length_km"),
    "storage": ("memory", "storage_ms"),
    "diffusion": ("photon", "diffusion_sigma_ghz"),
}


@dataclass
class Evaluation:
    gamma_a_hz: float
    gamma_tok_hz: float
    f_avg: float
    p_survive: float
    n: int
    t: int
    f_in: dict
    f_out: dict
    f_mem: dict
    cp_infidelity: float
    breakdown: object = field(repr=False, default=None)


class Scenario:
    """A configuration plus the objects derived from it."""

    def __init__(self, config=None):
        self.config = config if config is not None else load_config(preset="optical")

    @classmethod
    def from_preset(cls, name, overrides=()):
        return cls(load_config(preset=name, overrides=overrides))

    def with_values(self, **dotted):
        return Scenario(self.config.with_values(**dotted))

    # ----- cavity and photon --------------------------------------------

    def coupling_model(self):
        cav = self.config["cavity"]
        g = cav.get("coupling_ghz")
        if g is None:
            g = coupling_for_cooperativity(cav["cooperativity"], cav["kappa_ghz"],
                                           cav["gamma_atom_ghz"])
        ref = cav.get("coupling_ref_ghz", abs(cav["omega_a_ghz"] - cav["delta_ghz"]) or 1.0)
        return CouplingModel(g, ref, cav["coupling_mode"])

    def cavity_params(self):
        cav = self.config["cavity"]
        omega_c = cav["omega_a_ghz"] - cav["delta_ghz"]
        return CavitySpinParams(
            omega_a=cav["omega_a_ghz"], delta=cav["delta_ghz"], kappa=cav["kappa_ghz"],
            g=self.coupling_model().coupling(omega_c), gamma_atom=cav["gamma_atom_ghz"],
            omega_s=cav["spin_splitting_ghz"], kappa_l=cav.get("kappa_l_ghz"))

    def effective_width(self, linewidth_ghz=None):
        ph = self.config["photon"]
        return (linewidth_ghz or ph["linewidth_ghz"]) * ph["width_factor"]

    def spectrum(self):
        cav = self.config["cavity"]
        return PhotonSpectrum(cav["omega_a_ghz"] + cav["photon_offset_ghz"], self.effective_width())

    def design_problem(self):
        return DesignProblem(self.cavity_params(), self.coupling_model(), self.effective_width())

    def channel(self):
        return Pi2Channel.depolarized(self.config["gates"]["pi2_fidelity"])

    def moments(self):
        ph = self.config["photon"]
        sigma = ph["diffusion_sigma_ghz"] * ph["width_factor"]
        return gauss_hermite_moments(self.cavity_params(), self.spectrum(), sigma)

    # ----- memory, link, timing -----------------------------------------

    def decoherence_rates(self):
        mem = self.config["memory"]
        if not mem["use_phonon_rates"]:
            return DecoherenceRates(mem["gamma_minus_per_ms"], mem["gamma_plus_per_ms"],
                                    mem["dephasing_per_s"])
        ph = self.config["phonon"]
        medium = phonon.ElasticMedium(ph["c11_gpa"], ph["c12_gpa"], ph["c44_gpa"],
                                      ph["density_g_cm3"])
        mats = phonon.strain_matrices(ph["d_phz"], ph["f_phz"])
        chi = {k: phonon.absorption_cross_section(m, medium) for k, m in mats.items()}
        inp = phonon.RateMatrixInput({"x": ph["h_x"], "y": ph["h_y"]}, tuple(ph["level_ghz"]),
                                     ph["temperature_k"], chi)
        lower, upper = ph["qubit_levels"]
        return phonon.electron_rates(inp, lower, upper, mem["dephasing_per_s"])

    def memory_fidelities(self):
        mem = self.config["memory"]
        rates = self.decoherence_rates()
        t_ms = mem["storage_ms"]
        if mem["medium"] == "electron":
            decay = memory_fidelity(rates, t_electron_ms=t_ms)
            extra = 1.0
        else:
            decay = memory_fidelity(rates, t_nuclear_s=t_ms * 1e-3)
            extra = mem["swap_fidelity"] ** 2
        return {x: mem["f_mem"] * extra * f for x, f in decay.items()}

    def efficiency(self):
        link = self.config["link"]
        if "eta_cf" in link:
            eta = combined_efficiency(link["eta_cf"], link["eta_fc"], link["eta_d"])
        else:
            eta = link.get("eta_c", 1.0)
        return EfficiencyBudget(eta, link["length_km"], link["attenuation_km"])

    def timing(self):
        g, mem, link = self.config["gates"], self.config["memory"], self.config["link"]
        storage_ns = mem["storage_ms"] * 1e6
        if mem["medium"] == "nuclear":
            storage_ns += 2 * mem["swap_ns"]
        lifetime = 1.0 / (2 * math.pi * self.config["photon"]["linewidth_ghz"])
        return TokenTiming(lifetime, g["gate_ns"], g["measure_ns"], storage_ns,
                           link["length_km"], link["c_fiber_km_s"], g["slot_factor"])

    def security(self):
        sec = self.config["security"]
        return min_token_size(sec["p_th"], sec["alpha"])

    # ----- evaluation ---------------------------------------------------

    def evaluate(self, moments=None):
        cfg = self.config
        m = moments if moments is not None else self.moments()
        fids = stored_fidelity(m, self.channel(), cfg["photon"]["source_fidelity"],
                               cfg["cavity"]["spectral_model"])
        f_mem = self.memory_fidelities()
        f_avg = average_fidelity(fids.f_in, f_mem, fids.f_out)
        design = self.security()
        budget = self.efficiency()
        rate_hz = self.timing().token_rate_hz(design.n)
        b = acceptance_rate(design, f_avg, budget.p_survive, rate_hz,
                            cfg["security"]["acceptance_model"])
        return Evaluation(b.gamma_a_hz, rate_hz, f_avg, budget.p_survive, design.n, design.t,
                          fids.f_in, fids.f_out, f_mem, 1.0 - m.cp_fidelity(), b)


@dataclass
class SweepRow:
    axis_value: float
    gamma_a_hz: float
    f_avg: float
    gamma_tok_hz: float
    error: str = ""


@dataclass
class SweepResult:
    axis: str
    rows: list
    markers: dict = field(default_factory=dict)

    def values(self, name):
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    def peak(self):
        ok = [r for r in self.rows if not r.error]
        return max(ok, key=lambda r: r.gamma_a_hz) if ok else None


def _override_axis(config, axis, value):
    section, key = SWEEP_AXES[axis]
    doc = {s: dict(body) for s, body in config.data.items()}
    if axis == "efficiency":
        for k in ("eta_cf", "eta_fc", "eta_d"):
            doc["link"].pop(k, None)
    doc[section][key] = value
    return ScenarioConfig(validate(doc), config.source)


def threshold_crossing(xs, ys, level=0.75):
    """First x where ys falls through ``level`` (linear interpolation)."""
    for i in range(1, len(xs)):
        y0, y1 = ys[i - 1], ys[i]
        if np.isfinite(y0) and np.isfinite(y1) and y0 >= level > y1:
            return xs[i - 1] + (level - y0) * (xs[i] - xs[i - 1]) / (y1 - y0)
    return None


def _evaluate_point(config, axis, value):
    try:
        ev = Scenario(_override_axis(config, axis, value)).evaluate()
        return SweepRow(value, ev.gamma_a_hz, ev.f_avg, ev.gamma_tok_hz)
    except ConfigError:
        raise
    except QTokenError as exc:
        return SweepRow(value, math.nan, math.nan, math.nan, str(exc))


def sweep(config, axis, values, workers=1):
    """Evaluate the acceptance rate along one axis.

    Points whose evaluation fails are kept as flagged rows with NaN values.
    With ``workers > 1`` points run in separate processes; rows always come
    back in axis order.
    """
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {sorted(SWEEP_AXES)}")
    values = [float(v) for v in values]
    if workers > 1 and len(values) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_evaluate_point, [config] * len(values),
                                 [axis] * len(values), values))
    else:
        rows = [_evaluate_point(config, axis, v) for v in values]
    result = SweepResult(axis, rows)
    if axis == "storage":
        cross = threshold_crossing(result.values("axis_value"), result.values("f_avg"))
        if cross is not None:
            result.markers["f_avg_three_quarters"] = cross
    return result
