"""Scenario configuration: TOML documents validated against a fixed schema.

Every key carries its unit in the name. Unknown sections or keys, wrong
types and out-of-range values raise ConfigError at load time.
"""

from dataclasses import dataclass
import copy
import hashlib
import json
import math
from importlib import resources
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError
from .spectra import DEFAULT_GAMMA_ATOM_GHZ


def _positive(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _unit(v):
    return 0 <= v <= 1


def _prob_open(v):
    return 0 < v < 1


def _half_to_one(v):
    return 0.5 <= v <= 1


def _finite(v):
    return math.isfinite(v)


def _choice(*options):
    def check(v):
        return v in options
    check.__doc__ = f"one of {options}"
    return check


def _matrix(v):
    return isinstance(v, list) and all(isinstance(r, list) for r in v)


_NUM = (int, float)
_OPT = object()  # marks keys without a default

# section -> key -> (accepted types, default, validator)
SCHEMA = {
    "cavity": {
        "omega_a_ghz": (_NUM, 0.0, _finite),
        "kappa_ghz": (_NUM, 34.07, _positive),
        "delta_ghz": (_NUM, 108.76, _finite),
        "photon_offset_ghz": (_NUM, -63.66, _finite),
        "cooperativity": (_NUM, 35.85, _nonneg),
        "coupling_ghz": (_NUM, _OPT, _nonneg),
        "coupling_mode": (str, "fixed", _choice("fixed", "sqrt-frequency")),
        "coupling_ref_ghz": (_NUM, _OPT, _positive),
        "gamma_atom_ghz": (_NUM, DEFAULT_GAMMA_ATOM_GHZ, _positive),
        "spin_splitting_ghz": (_NUM, 70.8039, _positive),
        "kappa_l_ghz": (_NUM, _OPT, _nonneg),
        "spectral_model": (str, "projection", _choice("projection", "traced")),
    },
    "photon": {
        "linewidth_ghz": (_NUM, 3.18, _positive),
        "width_factor": (_NUM, 1.0 / (2 * math.pi), _positive),
        "source_fidelity": (_NUM, 1.0, _half_to_one),
        "diffusion_sigma_ghz": (_NUM, 0.0, _nonneg),
    },
    "gates": {
        "pi2_fidelity": (_NUM, 0.9977, _half_to_one),
        "gate_ns": (_NUM, 1.5, _nonneg),
        "measure_ns": (_NUM, 0.1, _nonneg),
        "slot_factor": (_NUM, 20.0, _positive),
    },
    "memory": {
        "medium": (str, "electron", _choice("electron", "nuclear")),
        "f_mem": (_NUM, 1.0, _unit),
        "storage_ms": (_NUM, 0.0, _nonneg),
        "gamma_minus_per_ms": (_NUM, 0.0, _nonneg),
        "gamma_plus_per_ms": (_NUM, 0.0, _nonneg),
        "dephasing_per_s": (_NUM, 0.0, _nonneg),
        "swap_fidelity": (_NUM, 1.0, _unit),
        "swap_ns": (_NUM, 0.0, _nonneg),
        "use_phonon_rates": (bool, False, None),
    },
    "security": {
        "p_th": (_NUM, 1e-4, _prob_open),
        "alpha": (_NUM, 0.75, _prob_open),
        "acceptance_model": (str, "printed", _choice("printed", "coupled")),
    },
    "link": {
        "length_km": (_NUM, 0.5, _nonneg),
        "attenuation_km": (_NUM, 20.0, _positive),
        "eta_c": (_NUM, _OPT, _unit),
        "eta_cf": (_NUM, _OPT, _unit),
        "eta_fc": (_NUM, _OPT, _unit),
        "eta_d": (_NUM, _OPT, _unit),
        "c_fiber_km_s": (_NUM, 299_792.458, _positive),
    },
    "phonon": {
        "c11_gpa": (_NUM, 1079.6, _positive),
        "c12_gpa": (_NUM, 126.73, _finite),
        "c44_gpa": (_NUM, 578.16, _positive),
        "density_g_cm3": (_NUM, 3.51, _positive),
        "d_phz": (_NUM, 0.787, _finite),
        "f_phz": (_NUM, -0.562, _finite),
        "temperature_k": (_NUM, 0.1, _positive),
        "level_ghz": (list, _OPT, None),
        "h_x": (list, _OPT, _matrix),
        "h_y": (list, _OPT, _matrix),
        "qubit_levels": (list, [0, 1], None),
    },
}


def defaults():
    return {sec: {k: copy.deepcopy(spec[1]) for k, spec in keys.items() if spec[1] is not _OPT}
            for sec, keys in SCHEMA.items()}


def _check_value(section, key, value):
    types, _, check = SCHEMA[section][key]
    if types is _NUM:
        if isinstance(value, bool) or not isinstance(value, _NUM):
            raise ConfigError(f"[{section}] {key} must be a number, got {value!r}")
        value = float(value)
    elif not isinstance(value, types):
        raise ConfigError(f"[{section}] {key} must be {types.__name__}, got {value!r}")
    if check is not None and not check(value):
        hint = check.__doc__ or check.__name__.strip("_")
        raise ConfigError(f"[{section}] {key} = {value!r} is invalid ({hint})")
    return value


def validate(doc):
    """Merge ``doc`` over the defaults and check every key and cross-constraint."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a table of sections")
    merged = defaults()
    for section, body in doc.items():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        if not isinstance(body, dict):
            raise ConfigError(f"[{section}] must be a table")
        for key, value in body.items():
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            merged[section][key] = _check_value(section, key, value)
    link = merged["link"]
    parts = [k for k in ("eta_cf", "eta_fc", "eta_d") if k in link]
    if parts and "eta_c" in link:
        raise ConfigError("[link] give either eta_c or the eta_cf/eta_fc/eta_d components")
    if parts and len(parts) != 3:
        raise ConfigError("[link] eta_cf, eta_fc and eta_d must be given together")
    cav = merged["cavity"]
    if cav.get("kappa_l_ghz", 0.0) > cav["kappa_ghz"]:
        raise ConfigError("[cavity] kappa_l_ghz cannot exceed kappa_ghz")
    if cav["coupling_mode"] == "sqrt-frequency" and "coupling_ref_ghz" not in cav:
        raise ConfigError("[cavity] sqrt-frequency coupling needs coupling_ref_ghz")
    ph = merged["phonon"]
    if merged["memory"]["use_phonon_rates"]:
        missing = [k for k in ("level_ghz", "h_x", "h_y") if k not in ph]
        if missing:
            raise ConfigError(f"[phonon] use_phonon_rates needs {', '.join(missing)}")
    return merged


def parse_override(text):
    """Split ``section.key=value``; the value is read as a TOML literal."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form section.key=value")
    path, raw = text.split("=", 1)
    if path.count(".") != 1:
        raise ConfigError(f"override key {path!r} must be section.key")
    section, key = (s.strip() for s in path.split("."))
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return section, key, value


@dataclass(frozen=True)
class ScenarioConfig:
    """A validated configuration document."""

    data: dict
    source: str = "<defaults>"

    def __getitem__(self, section):
        return self.data[section]

    def digest(self):
        """Short hash of the canonical JSON form, used in output provenance."""
        blob = json.dumps(self.data, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def with_values(self, **dotted):
        """Copy with ``section__key=value`` replacements, re-validated."""
        doc = copy.deepcopy(self.data)
        for name, value in dotted.items():
            section, key = name.split("__", 1)
            doc.setdefault(section, {})[key] = value
        return ScenarioConfig(validate(doc), self.source)


def preset_path(name):
    return resources.files("qtoken") / "presets" / f"{name}.toml"


def load_config(path=None, overrides=(), preset=None):
    """Load a TOML file (or a bundled preset) and apply ``--set`` overrides."""
    doc = {}
    source = "<defaults>"
    try:
        if preset is not None:
            doc = tomllib.loads(preset_path(preset).read_text())
            source = f"preset:{preset}"
        if path is not None:
            with open(path, "rb") as fh:
                file_doc = tomllib.load(fh)
            for section, body in file_doc.items():
                if isinstance(body, dict) and isinstance(doc.get(section), dict):
                    doc[section].update(body)
                else:
                    doc[section] = body
            source = str(Path(path))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {exc.filename}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed TOML: {exc}") from exc
    for text in overrides:
        section, key, value = parse_override(text)
        doc.setdefault(section, {})
        if not isinstance(doc[section], dict):
            raise ConfigError(f"[{section}] must be a table")
        doc[section][key] = value
    return ScenarioConfig(validate(doc), source)
