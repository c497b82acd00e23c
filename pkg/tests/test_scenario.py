import math

import pytest

from qtoken.config import ScenarioConfig, validate
from qtoken.errors import ConfigError
from qtoken.scenario import Scenario, sweep, threshold_crossing


def test_optical_preset_evaluation():
    ev = Scenario().evaluate()
    assert (ev.n, ev.t) == (42, 41)
    assert 0.9 < ev.f_avg < 1 and ev.p_survive == pytest.approx(math.exp(-0.5 / 20))
    assert set(ev.f_in) == {"+", "-", "e", "l"}
    assert ev.gamma_a_hz < ev.gamma_tok_hz


def test_efficiency_components_match_combined_value():
    sc = Scenario()
    a = sc.with_values(link__eta_c=(0.9 * 0.8 * 0.95) ** 2).evaluate()
    doc = {k: dict(v) for k, v in sc.config.data.items()}
    doc["link"].pop("eta_c")
    doc["link"].update(eta_cf=0.9, eta_fc=0.8, eta_d=0.95)
    c = Scenario(ScenarioConfig(validate(doc))).evaluate()
    assert c.gamma_a_hz == pytest.approx(a.gamma_a_hz, rel=1e-12)


def test_sweep_order_flags_and_workers():
    cfg = Scenario().config
    vals = [2.0, 4.0, 6.0]
    a = sweep(cfg, "bandwidth", vals)
    b = sweep(cfg, "bandwidth", vals, workers=2)
    assert [r.axis_value for r in a.rows] == vals
    assert a.rows == b.rows
    with pytest.raises(ConfigError):
        sweep(cfg, "temperature", vals)
    with pytest.raises(ConfigError):
        sweep(cfg, "bandwidth", [-1.0])


def test_length_sweep_decreases():
    res = sweep(Scenario().config, "length", [0.0, 5.0, 20.0])
    g = res.values("gamma_a_hz")
    assert g[0] > g[1] > g[2]


def test_storage_marker():
    res = sweep(Scenario.from_preset("nuclear").config, "storage", [0.0, 1000.0, 3000.0])
    x = res.markers["f_avg_three_quarters"]
    assert 1000 < x < 3000
    assert threshold_crossing([0, 1], [0.8, 0.7]) == pytest.approx(0.5)
    assert threshold_crossing([0, 1], [0.8, 0.79]) is None


def test_phonon_rates_feed_memory():
    sc = Scenario().with_values(memory__use_phonon_rates=True, memory__storage_ms=1.0,
                                phonon__level_ghz=[0.0, 50.0], phonon__temperature_k=1.0,
                                phonon__h_x=[[0, 1], [1, 0]], phonon__h_y=[[0, 1], [1, 0]])
    r = sc.decoherence_rates()
    assert r.gamma_minus > r.gamma_plus > 0
    assert min(sc.memory_fidelities().values()) < sc.config["memory"]["f_mem"]
