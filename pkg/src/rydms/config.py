"""Run configuration: YAML documents with unit-suffixed keys.

Frequencies are ordinary frequencies in MHz or kHz (the 2 pi is applied
here), times are in us or ns, lengths in um or nm and temperatures in uK.
Everything is converted to SI / rad/s exactly once, in :func:`build`.
Unknown keys are rejected by the schema.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import jsonschema
import numpy as np
import yaml

from .analysis import MeasurementModel
from .hamiltonian import DriveParams, InteractionParams, RampSchedule
from .noise import NoiseConfig, OUNoise, TablePSD, WhiteNoise
from .units import GHZ_UM6, KHZ, MHZ, NM, NS, TWO_PI, UK, UM, US

SCHEMA_VERSION = 1

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_PROB = {"type": "number", "minimum": 0, "maximum": 1}
_SHAPE = {"enum": ["linear", "sine-squared"]}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "additionalProperties": False,
            "required": list(required)}


def _range(item) -> dict:
    return {"type": "array", "prefixItems": [item, item, {"type": "integer", "minimum": 1}],
            "minItems": 3, "maxItems": 3}


SCHEMA = {"$schema": "https://json-schema.org/draft/2020-12/schema", **_obj({
    "schema_version": {"const": SCHEMA_VERSION},
    "seed": {"type": "integer", "minimum": 0},
    "drive": _obj({
        "omega_MHz": _NONNEG,
        "delta_MHz": _NUM,
        "omega_ratio": _NONNEG,
        "delta_offset1_MHz": _NUM,
        "delta_offset2_MHz": _NUM,
    }),
    "interaction": _obj({
        "c6_GHz_um6": _NONNEG,
        "r_um": _POS,
        "axis": {"enum": ["parallel", "perpendicular"]},
    }),
    "ramp": _obj({
        "t_ramp_up_us": _NONNEG,
        "t_ramp_down_us": _NONNEG,
        "delta_start_MHz": _NUM,
        "omega_shape": _SHAPE,
        "delta_shape": _SHAPE,
    }),
    "gate": _obj({
        "phi_j_target_rad": _NUM,
        "leakage_threshold": _POS,
        "raman_phase_rad": _NUM,
        "echo": {"type": "boolean"},
    }),
    "spectrum": _obj({
        "sweep": {"enum": ["r", "delta"]},
        "r_range_um": _range(_POS),
        "delta_range_MHz": _range(_NUM),
    }),
    "noise": _obj({
        "temperature_uK": _NONNEG,
        "wavelength_nm": _POS,
        "trap_radial_kHz": _POS,
        "rydberg_lifetime_us": _POS,
        "decayed_score": _PROB,
        "noise_dt_ns": _POS,
        "n_shots": {"type": "integer", "minimum": 1},
        "method": {"enum": ["adiabatic", "schrodinger"]},
        "channels": _obj({k: {"type": "boolean"} for k in ("doppler", "position", "laser", "decay")}),
        "laser": {"oneOf": [
            {"type": "null"},
            _obj({"model": {"const": "white"}, "level_kHz2_per_Hz": _NONNEG}, ["model", "level_kHz2_per_Hz"]),
            _obj({"model": {"const": "ou"}, "rms_kHz": _NONNEG, "correlation_time_us": _POS},
                 ["model", "rms_kHz", "correlation_time_us"]),
            _obj({"model": {"const": "table"},
                  "frequencies_Hz": {"type": "array", "items": _NONNEG, "minItems": 2},
                  "psd_kHz2_per_Hz": {"type": "array", "items": _NONNEG, "minItems": 2}},
                 ["model", "frequencies_Hz", "psd_kHz2_per_Hz"]),
        ]},
    }),
    "measurement": _obj({
        **{k: _PROB for k in ("p_b1", "p_b2", "p_d1", "p_d2", "p_pump1", "p_pump2")},
        "n_shots": {"oneOf": [{"type": "null"}, {"type": "integer", "minimum": 1}]},
    }),
    "parity": _obj({
        "phis_rad": {"type": "array", "items": _NUM},
        "n_phases": {"type": "integer", "minimum": 0},
        "n_mc": {"type": "integer", "minimum": 1},
        "noise": {"type": "boolean"},
    }),
    "fit_c6": _obj({
        "delta_MHz": _NUM,
    }),
}, ["schema_version"])}

DEFAULTS: dict = {
    "schema_version": SCHEMA_VERSION,
    "seed": 0,
    "drive": {"omega_MHz": 2.95, "delta_MHz": 2.0, "omega_ratio": 1.0,
              "delta_offset1_MHz": 0.0, "delta_offset2_MHz": 0.0},
    "interaction": {"c6_GHz_um6": 25.0, "r_um": 2.6, "axis": "parallel"},
    "ramp": {"t_ramp_up_us": 3.0, "t_ramp_down_us": 3.0, "delta_start_MHz": 16.0,
             "omega_shape": "sine-squared", "delta_shape": "sine-squared"},
    "gate": {"phi_j_target_rad": -float(np.pi / 2), "leakage_threshold": 1e-4,
             "raman_phase_rad": 0.0, "echo": True},
    "spectrum": {"sweep": "r", "r_range_um": [2.0, 5.0, 61], "delta_range_MHz": [-5.0, 5.0, 101]},
    "noise": {"temperature_uK": 10.0, "wavelength_nm": 319.0, "trap_radial_kHz": 34.0,
              "rydberg_lifetime_us": 170.0, "decayed_score": 0.25, "noise_dt_ns": 10.0,
              "n_shots": 1000, "method": "adiabatic",
              "channels": {"doppler": True, "position": True, "laser": False, "decay": True},
              "laser": None},
    "measurement": {"p_b1": 0.939, "p_b2": 0.908, "p_d1": 0.0162, "p_d2": 0.0456,
                    "p_pump1": 0.963, "p_pump2": 0.963, "n_shots": None},
    "parity": {"n_phases": 25, "n_mc": 200, "noise": False},
    "fit_c6": {"delta_MHz": -0.2},
}


class ConfigError(ValueError):
    """Invalid or unreadable configuration."""


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def validate(doc: dict) -> None:
    try:
        jsonschema.Draft202012Validator(SCHEMA).validate(doc)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {exc.message}") from None


def load(path: Optional[str | Path] = None) -> dict:
    """Read, validate and merge a config document over :data:`DEFAULTS`."""
    doc: Any = {"schema_version": SCHEMA_VERSION}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        try:
            doc = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
    validate(doc)
    merged = _merge(DEFAULTS, doc)
    validate(merged)
    return merged


@dataclass(frozen=True)
class Run:
    """Physical objects built from a validated config."""

    drive: DriveParams
    interaction: InteractionParams
    ramp: RampSchedule
    noise: NoiseConfig
    measurement: MeasurementModel
    phi_j_target: float
    leakage_threshold: float
    raman_phase: float
    echo: bool
    n_shots: int
    method: str
    seed: int
    raw: dict


def _laser(cfg) -> Optional[object]:
    if cfg is None:
        return None
    k2 = KHZ**2
    if cfg["model"] == "white":
        return WhiteNoise(cfg["level_kHz2_per_Hz"] * k2)
    if cfg["model"] == "ou":
        return OUNoise((cfg["rms_kHz"] * KHZ) ** 2, cfg["correlation_time_us"] * US)
    f, s = cfg["frequencies_Hz"], cfg["psd_kHz2_per_Hz"]
    if len(f) != len(s):
        raise ConfigError("noise/laser: frequencies_Hz and psd_kHz2_per_Hz differ in length")
    return TablePSD(tuple(f), tuple(x * k2 for x in s))


def build(doc: dict) -> Run:
    dr, it, rp, gt = doc["drive"], doc["interaction"], doc["ramp"], doc["gate"]
    nz, ms = doc["noise"], doc["measurement"]
    omega = dr["omega_MHz"] * MHZ
    delta = dr["delta_MHz"] * MHZ
    drive = DriveParams(omega, omega * dr["omega_ratio"],
                        delta + dr["delta_offset1_MHz"] * MHZ, delta + dr["delta_offset2_MHz"] * MHZ)
    inter = InteractionParams(it["c6_GHz_um6"] * GHZ_UM6, it["r_um"] * UM, it["axis"])
    ramp = RampSchedule(rp["t_ramp_up_us"] * US, 0.0, rp["t_ramp_down_us"] * US, omega,
                        rp["delta_start_MHz"] * MHZ, delta, rp["omega_shape"], rp["delta_shape"])
    try:
        noise = NoiseConfig(
            laser_model=_laser(nz["laser"]),
            temperature=nz["temperature_uK"] * UK,
            wavevector=TWO_PI / (nz["wavelength_nm"] * NM),
            trap_radial=TWO_PI * nz["trap_radial_kHz"] * 1e3,
            rydberg_lifetime=nz["rydberg_lifetime_us"] * US,
            seed=doc["seed"],
            decayed_score=nz["decayed_score"],
            noise_dt=nz["noise_dt_ns"] * NS,
            **nz["channels"],
        )
        meas = MeasurementModel(**ms)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return Run(drive, inter, ramp, noise, meas, gt["phi_j_target_rad"], gt["leakage_threshold"],
               gt["raman_phase_rad"], gt["echo"], nz["n_shots"], nz["method"], doc["seed"], doc)


def dump_defaults() -> str:
    return yaml.safe_dump(DEFAULTS, sort_keys=False)
