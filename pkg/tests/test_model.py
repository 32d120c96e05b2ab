"""Scenario construction, validation errors, and JSON round trips."""

import numpy as np
import pytest

from skyhaul.model import (ChannelParams, ScenarioError, ScenarioParseError,
                           SensorNode, apply_config_overrides, db_to_linear,
                           generate_scenario, linear_to_db, load_scenario,
                           save_scenario, scenario_from_dict, scenario_to_dict)


def test_db_conversion_round_trip():
    for db in (-7.5, 0.0, 13.0, 19.5, 20.0, 23.0):
        assert linear_to_db(db_to_linear(db)) == pytest.approx(db, abs=1e-12)


def test_default_thresholds_are_linear():
    p = ChannelParams()
    assert p.snr_th_g2u == pytest.approx(100.0, rel=1e-12)
    assert p.snr_th_u2u == pytest.approx(10.0 ** 1.95, rel=1e-12)
    assert p.snr_th_u2b == pytest.approx(10.0 ** 1.3, rel=1e-12)


def test_generate_scenario_is_deterministic():
    a = generate_scenario(1000.0, 1000.0, 50, seed=5)
    b = generate_scenario(1000.0, 1000.0, 50, seed=5)
    assert np.array_equal(a.sensor_positions, b.sensor_positions)
    c = generate_scenario(1000.0, 1000.0, 50, seed=6)
    assert not np.array_equal(a.sensor_positions, c.sensor_positions)


def test_generate_scenario_field_bounds():
    sc = generate_scenario(2000.0, 1500.0, 200, seed=1)
    xy = sc.sensor_positions
    assert xy.shape == (200, 2)
    assert (xy[:, 0] >= 0).all() and (xy[:, 0] <= 2000).all()
    assert (xy[:, 1] >= 0).all() and (xy[:, 1] <= 1500).all()
    assert sc.bs_position_m == (0.0, 0.0)
    assert sc.n_sensors == 200
    assert (sc.sensor_data_bits == 1e7).all()


def test_scenario_rejects_sensor_outside_region():
    sc = generate_scenario(500.0, 500.0, 3, seed=0)
    d = scenario_to_dict(sc)
    d["sensors"][1]["position_m"] = [600.0, 100.0]
    with pytest.raises(ScenarioError):
        scenario_from_dict(d)


def test_scenario_rejects_duplicate_sensor_ids():
    sc = generate_scenario(500.0, 500.0, 3, seed=0)
    d = scenario_to_dict(sc)
    d["sensors"][2]["id"] = d["sensors"][0]["id"]
    with pytest.raises(ScenarioError):
        scenario_from_dict(d)


def test_scenario_rejects_uav_below_bs():
    with pytest.raises(ScenarioError):
        generate_scenario(500.0, 500.0, 3, seed=0,
                          params=ChannelParams(uav_height_m=10.0))


def test_sensor_requires_positive_data():
    with pytest.raises(ScenarioError):
        SensorNode(id=0, position_m=(1.0, 1.0), data_bits=0.0)


def test_channel_params_reject_nonpositive():
    with pytest.raises(ScenarioError):
        ChannelParams(beta0=0.0)
    with pytest.raises(ScenarioError):
        ChannelParams(noise_w=-1e-14)
    with pytest.raises(ScenarioError):
        ChannelParams(kappa=1.5)


def test_json_round_trip_identical_bytes(tmp_path):
    sc = generate_scenario(3000.0, 2000.0, 40, seed=9)
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_scenario(sc, p1)
    save_scenario(load_scenario(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()
    back = load_scenario(p1)
    assert back.rng_seed == sc.rng_seed
    assert back.params == sc.params
    assert np.array_equal(back.sensor_positions, sc.sensor_positions)


def test_load_rejects_malformed_json(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ScenarioParseError):
        load_scenario(bad)


def test_missing_field_is_named(tmp_path):
    sc = generate_scenario(500.0, 500.0, 2, seed=0)
    d = scenario_to_dict(sc)
    del d["n_th"]
    with pytest.raises(ScenarioParseError, match="n_th"):
        scenario_from_dict(d)


def test_apply_config_overrides_thresholds_in_db():
    p = apply_config_overrides(ChannelParams(), {"snr_th_g2u_db": 17.0,
                                                 "beta0": 2e-4})
    assert p.snr_th_g2u == pytest.approx(db_to_linear(17.0), rel=1e-12)
    assert p.beta0 == 2e-4
    assert p.snr_th_u2u == pytest.approx(10.0 ** 1.95, rel=1e-12)


def test_apply_config_rejects_unknown_key():
    with pytest.raises(ScenarioParseError, match="not_a_field"):
        apply_config_overrides(ChannelParams(), {"not_a_field": 1.0})
