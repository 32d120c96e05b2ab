"""Problem instances: sensor fields, radio parameters, scenario JSON I/O.

All lengths are meters, powers watts, data sizes bits. SNR thresholds are
linear in memory; scenario files store them in dB and the loader converts
once at parse time.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

DEFAULT_DATA_BITS = 1e7


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


def _db_exact(linear: float) -> float:
    """dB value whose round trip through db_to_linear reproduces `linear`.

    linear_to_db followed by db_to_linear can be off by an ulp; nudge the dB
    value so saved files reload bit-identically whenever such a value exists.
    """
    d = linear_to_db(linear)
    if db_to_linear(d) == linear:
        return d
    up = down = d
    for _ in range(8):
        up = math.nextafter(up, math.inf)
        if db_to_linear(up) == linear:
            return up
        down = math.nextafter(down, -math.inf)
        if db_to_linear(down) == linear:
            return down
    return d


class ScenarioError(ValueError):
    """Scenario contents violate an invariant."""


class ScenarioParseError(ScenarioError):
    """Malformed scenario/config data; the message names the offending field."""


@dataclass(frozen=True)
class ChannelParams:
    """Radio model constants. Defaults follow the dense-urban evaluation setup."""

    a: float = 4.88                 # LoS sigmoid shape
    b: float = 0.43                 # LoS sigmoid slope, per degree
    kappa: float = 0.2              # NLoS attenuation factor
    alpha: float = 2.0              # path-loss exponent
    beta0: float = 1.42e-4          # reference channel gain at 1 m
    uav_height_m: float = 100.0
    bandwidth_hz: float = 2e6
    p_sensor_w: float = 0.05
    p_uav_w: float = 0.1
    noise_w: float = 1e-14          # -110 dBm
    snr_th_g2u: float = db_to_linear(20.0)
    snr_th_u2u: float = db_to_linear(19.5)
    snr_th_u2b: float = db_to_linear(13.0)

    def __post_init__(self):
        for name in ("a", "b", "alpha", "beta0", "uav_height_m", "bandwidth_hz",
                     "p_sensor_w", "p_uav_w", "noise_w",
                     "snr_th_g2u", "snr_th_u2u", "snr_th_u2b"):
            if not getattr(self, name) > 0:
                raise ScenarioError(f"channel parameter {name} must be positive")
        if not 0 <= self.kappa <= 1:
            raise ScenarioError("channel parameter kappa must be in [0, 1]")


@dataclass(frozen=True)
class SensorNode:
    id: int
    position_m: tuple[float, float]
    data_bits: float

    def __post_init__(self):
        if not self.data_bits > 0:
            raise ScenarioError(f"sensor {self.id}: data_bits must be positive")


@dataclass(frozen=True)
class Scenario:
    region_width_m: float
    region_height_m: float
    bs_position_m: tuple[float, float]
    bs_height_m: float
    sensors: tuple[SensorNode, ...]
    params: ChannelParams
    n_th: int
    v_max_mps: float
    d_safe_m: float
    rng_seed: int

    def __post_init__(self):
        if not (self.region_width_m > 0 and self.region_height_m > 0):
            raise ScenarioError("region dimensions must be positive")
        if not self.v_max_mps > 0:
            raise ScenarioError("v_max_mps must be positive")
        if self.d_safe_m < 0:
            raise ScenarioError("d_safe_m must be non-negative")
        if self.n_th < 1:
            raise ScenarioError("n_th must be at least 1")
        if self.bs_height_m < 0:
            raise ScenarioError("bs_height_m must be non-negative")
        if self.params.uav_height_m <= self.bs_height_m:
            raise ScenarioError("UAV altitude must exceed BS height")
        seen = set()
        for s in self.sensors:
            if s.id in seen:
                raise ScenarioError(f"duplicate sensor id {s.id}")
            seen.add(s.id)
            x, y = s.position_m
            if not (0 <= x <= self.region_width_m and 0 <= y <= self.region_height_m):
                raise ScenarioError(f"sensor {s.id} lies outside the region")

    @property
    def n_sensors(self) -> int:
        return len(self.sensors)

    @cached_property
    def sensor_positions(self) -> np.ndarray:
        """(N, 2) array of sensor coordinates, row order = sensors order."""
        if not self.sensors:
            return np.zeros((0, 2))
        return np.array([s.position_m for s in self.sensors], dtype=float)

    @cached_property
    def sensor_data_bits(self) -> np.ndarray:
        return np.array([s.data_bits for s in self.sensors], dtype=float)

    @cached_property
    def bs_xy(self) -> np.ndarray:
        return np.array(self.bs_position_m, dtype=float)


def generate_scenario(width_m: float, height_m: float, n_sensors: int,
                      data_bits: float = DEFAULT_DATA_BITS,
                      params: ChannelParams | None = None,
                      seed: int = 0, *,
                      n_th: int = 60, v_max_mps: float = 30.0,
                      d_safe_m: float = 30.0, bs_height_m: float = 20.0) -> Scenario:
    """Uniform sensor field over [0,w]x[0,h] with the BS at the origin corner."""
    if n_sensors < 1:
        raise ScenarioError("n_sensors must be at least 1")
    params = params or ChannelParams()
    rng = np.random.default_rng(seed)
    xy = rng.uniform(0.0, 1.0, size=(n_sensors, 2)) * [width_m, height_m]
    sensors = tuple(
        SensorNode(id=i, position_m=(float(x), float(y)), data_bits=float(data_bits))
        for i, (x, y) in enumerate(xy)
    )
    return Scenario(
        region_width_m=float(width_m), region_height_m=float(height_m),
        bs_position_m=(0.0, 0.0), bs_height_m=float(bs_height_m),
        sensors=sensors, params=params, n_th=int(n_th),
        v_max_mps=float(v_max_mps), d_safe_m=float(d_safe_m), rng_seed=int(seed),
    )


_PARAM_DB_FIELDS = {"snr_th_g2u": "snr_th_g2u_db",
                    "snr_th_u2u": "snr_th_u2u_db",
                    "snr_th_u2b": "snr_th_u2b_db"}
_PARAM_PLAIN_FIELDS = ("a", "b", "kappa", "alpha", "beta0", "uav_height_m",
                       "bandwidth_hz", "p_sensor_w", "p_uav_w", "noise_w")


def _params_to_dict(p: ChannelParams) -> dict:
    out = {name: getattr(p, name) for name in _PARAM_PLAIN_FIELDS}
    for attr, key in _PARAM_DB_FIELDS.items():
        out[key] = _db_exact(getattr(p, attr))
    return out


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ScenarioParseError(f"missing field '{key}' in {context}")
    return mapping[key]


def _params_from_dict(d: dict, context: str = "channel") -> ChannelParams:
    kwargs = {name: float(_require(d, name, context)) for name in _PARAM_PLAIN_FIELDS}
    for attr, key in _PARAM_DB_FIELDS.items():
        kwargs[attr] = db_to_linear(float(_require(d, key, context)))
    return ChannelParams(**kwargs)


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "region_width_m": s.region_width_m,
        "region_height_m": s.region_height_m,
        "bs_position_m": list(s.bs_position_m),
        "bs_height_m": s.bs_height_m,
        "n_th": s.n_th,
        "v_max_mps": s.v_max_mps,
        "d_safe_m": s.d_safe_m,
        "rng_seed": s.rng_seed,
        "channel": _params_to_dict(s.params),
        "sensors": [
            {"id": n.id, "position_m": list(n.position_m), "data_bits": n.data_bits}
            for n in s.sensors
        ],
    }


def scenario_from_dict(d: dict) -> Scenario:
    params = _params_from_dict(dict(_require(d, "channel", "scenario")))
    raw_sensors = _require(d, "sensors", "scenario")
    sensors = []
    for i, entry in enumerate(raw_sensors):
        ctx = f"sensors[{i}]"
        pos = _require(entry, "position_m", ctx)
        if not (isinstance(pos, (list, tuple)) and len(pos) == 2):
            raise ScenarioParseError(f"field 'position_m' in {ctx} must be [x, y]")
        sensors.append(SensorNode(
            id=int(_require(entry, "id", ctx)),
            position_m=(float(pos[0]), float(pos[1])),
            data_bits=float(_require(entry, "data_bits", ctx)),
        ))
    bs = _require(d, "bs_position_m", "scenario")
    if not (isinstance(bs, (list, tuple)) and len(bs) == 2):
        raise ScenarioParseError("field 'bs_position_m' in scenario must be [x, y]")
    return Scenario(
        region_width_m=float(_require(d, "region_width_m", "scenario")),
        region_height_m=float(_require(d, "region_height_m", "scenario")),
        bs_position_m=(float(bs[0]), float(bs[1])),
        bs_height_m=float(_require(d, "bs_height_m", "scenario")),
        sensors=tuple(sensors),
        params=params,
        n_th=int(_require(d, "n_th", "scenario")),
        v_max_mps=float(_require(d, "v_max_mps", "scenario")),
        d_safe_m=float(_require(d, "d_safe_m", "scenario")),
        rng_seed=int(_require(d, "rng_seed", "scenario")),
    )


def save_scenario(s: Scenario, path: str | Path):
    Path(path).write_text(json.dumps(scenario_to_dict(s), indent=1) + "\n")


def load_scenario(path: str | Path) -> Scenario:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ScenarioParseError(f"scenario file is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ScenarioParseError("scenario file must contain a JSON object")
    return scenario_from_dict(data)


def apply_config_overrides(params: ChannelParams, overrides: dict) -> ChannelParams:
    """Override ChannelParams fields from a config mapping.

    Accepts the same keys as the scenario 'channel' section (thresholds in dB);
    unknown keys are rejected by name.
    """
    current = _params_to_dict(params)
    for key, value in overrides.items():
        if key not in current:
            raise ScenarioParseError(f"unknown field '{key}' in config")
        current[key] = float(value)
    return _params_from_dict(current, context="config")
