import hashlib
import json

import pytest

from wsqkd.scenario import (
    ScenarioError,
    builtin_scenario_text,
    load_scenario,
    parse_scenario,
    serialize_scenario,
)

WUHU_SHA256 = "d47b5d85a2766c28dce322ea4fc327a077bca2f1c3f5771c760dad2f9831265b"


def test_builtin_document_checksum():
    text = builtin_scenario_text("wuhu")
    assert hashlib.sha256(text.encode()).hexdigest() == WUHU_SHA256


def test_wuhu_dataset_values(wuhu):
    assert wuhu.name == "wuhu"
    assert wuhu.n_wavelengths == 2
    assert wuhu.node_labels == ("A", "B", "C", "D", "E")
    assert wuhu.wavelength_nm == (1530.0, 1550.0)
    assert wuhu.source.mu == 0.6 and wuhu.source.nu == 0.2
    assert wuhu.source.state_ratio == (6, 3, 1)
    assert wuhu.source.pulse_rate_hz == 2.0e7
    assert wuhu.source.extinction_ratio_db == 27.0
    assert wuhu.detector.efficiency == 0.2
    assert wuhu.detector.dark_per_gate == 2e-5
    assert wuhu.detector.gate_ns == 1.0
    assert wuhu.system.f_ec == 1.22
    assert wuhu.reference.p0_dbm == -24.0
    assert wuhu.reference.measured_path_loss_db == 4.14
    assert wuhu.reference.effective_insertion_loss_db == 3.1
    assert wuhu.reference.y0_reference == 1.24e-5
    assert wuhu.reference.yx_reference == 7.98e-6

    rows = {
        "A2R2B": (1530.0, 7.24, -38.37, 5.0, 31.00, 2.92, 4.91),
        "A2R2C": (1550.0, 8.78, -36.07, 10.0, 17.64, 2.84, 2.02),
        "D2R2A": (1550.0, 10.79, -35.88, 25.0, 8.16, 2.78, 1.82),
        "E2R2A": (1530.0, 14.77, -34.62, 50.0, 3.83, 3.76, 0.41),
    }
    assert set(wuhu.links) == set(rows)
    for key, (nm, att, xt, dead, sifted, qber, secure) in rows.items():
        link = wuhu.links[key]
        assert link.wavelength_nm == nm
        assert link.attenuation_db == att
        assert link.crosstalk_db == xt
        assert link.dead_time_us == dead
        assert link.sifted_kbit_s == sifted
        assert link.signal_qber_pct == qber
        assert link.secure_kbit_s == secure


def test_parse_builtin_equals_wuhu(wuhu):
    assert parse_scenario(builtin_scenario_text("wuhu")) == wuhu


def test_round_trip_identity(wuhu):
    assert parse_scenario(serialize_scenario(wuhu)) == wuhu


def test_per_link_parameters(wuhu):
    det = wuhu.detector_for("E2R2A")
    assert det.dead_time_us == 50.0
    sysp = wuhu.system_for("E2R2A")
    assert sysp.e_detector == pytest.approx(0.0352840183, abs=1e-9)
    assert sysp.f_ec == 1.22


def test_explicit_e_detector_wins(wuhu):
    doc = json.loads(serialize_scenario(wuhu))
    doc["system"]["e_detector"] = 0.02
    s = parse_scenario(json.dumps(doc))
    assert s.system_for("A2R2B").e_detector == 0.02


def test_empty_document_rejected():
    with pytest.raises(ScenarioError, match="n_wavelengths required"):
        parse_scenario("{}")


def test_syntax_error_has_location():
    with pytest.raises(ScenarioError, match=r"line \d+, column \d+"):
        parse_scenario("{\n  broken\n}")


def test_negative_attenuation_rejected(wuhu):
    doc = json.loads(serialize_scenario(wuhu))
    doc["links"]["A2R2B"]["attenuation_db"] = -1.0
    with pytest.raises(ScenarioError, match="attenuation_db"):
        parse_scenario(json.dumps(doc))


def test_unknown_keys_rejected(wuhu):
    doc = json.loads(serialize_scenario(wuhu))
    doc["frobnication"] = 1
    with pytest.raises(ScenarioError, match="unknown key"):
        parse_scenario(json.dumps(doc))
    doc = json.loads(serialize_scenario(wuhu))
    doc["detector"]["dead_time_us"] = 5.0
    with pytest.raises(ScenarioError, match="detector"):
        parse_scenario(json.dumps(doc))


def test_link_key_must_match_endpoints(wuhu):
    doc = json.loads(serialize_scenario(wuhu))
    doc["links"]["B2R2A"] = doc["links"].pop("A2R2B")
    with pytest.raises(ScenarioError, match="B2R2A"):
        parse_scenario(json.dumps(doc))


def test_link_direction_checked_against_plan(wuhu):
    # The plan routes the A-B pair as A -> B; declaring B -> A must fail.
    doc = json.loads(serialize_scenario(wuhu))
    entry = doc["links"].pop("A2R2B")
    entry["from"], entry["to"] = "B", "A"
    doc["links"]["B2R2A"] = entry
    with pytest.raises(ScenarioError, match="plan routes"):
        parse_scenario(json.dumps(doc))


def test_link_wavelength_checked_against_plan(wuhu):
    doc = json.loads(serialize_scenario(wuhu))
    doc["links"]["A2R2B"]["wavelength_nm"] = 1550.0
    with pytest.raises(ScenarioError, match="1530"):
        parse_scenario(json.dumps(doc))


def test_unknown_node_label_rejected(wuhu):
    doc = json.loads(serialize_scenario(wuhu))
    doc["fibers"]["Z"] = doc["fibers"]["A"]
    with pytest.raises(ScenarioError, match="unknown node label"):
        parse_scenario(json.dumps(doc))


def test_load_scenario_sources(tmp_path, wuhu):
    assert load_scenario("wuhu") == wuhu
    path = tmp_path / "copy.json"
    path.write_text(serialize_scenario(wuhu), encoding="utf-8")
    assert load_scenario(str(path)) == wuhu
    with pytest.raises(ScenarioError, match="neither a file nor a built-in"):
        load_scenario("atlantis")


def test_fiber_map_and_timing(wuhu):
    fibers = wuhu.fiber_map()
    assert set(fibers) == {0, 1, 2, 3, 4}
    assert fibers[4].length_km == pytest.approx(47.952381)
    timing = wuhu.timing()
    assert timing.pulse_period_ns == pytest.approx(50.0)


def test_wuhu_fibers_reconstruct_measured_attenuation(wuhu):
    # The nominal fiber lengths were chosen so that fiber loss plus the
    # effective insertion loss reproduces each measured attenuation.
    from wsqkd.netgraph import label_to_index, route_lookup
    from wsqkd.optics import link_budget

    plan = wuhu.plan()
    for key, link in wuhu.links.items():
        planned = route_lookup(
            plan, label_to_index(link.from_label), label_to_index(link.to_label)
        )
        fibers = [wuhu.fibers[link.from_label], wuhu.fibers[link.to_label]]
        budget = link_budget(
            planned, fibers, wuhu.reference.effective_insertion_loss_db
        )
        assert budget.total_db == pytest.approx(link.attenuation_db, abs=0.005), key
