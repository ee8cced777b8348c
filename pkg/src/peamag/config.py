"""Flat key-value run configuration with one section per module.

The on-disk format is INI-style text. Every key is declared in SCHEMA with a
type tag and default; parsing rejects unknown sections or keys by name, and
serialize() writes values back so that a parse -> serialize -> parse round
trip reproduces the configuration exactly (floats are written with repr).
The special spelling "none" encodes optional values.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field
from typing import Any

# type tags: int, float, bool, str, and the optional variants int?, float?
SCHEMA: dict[str, dict[str, tuple[str, Any]]] = {
    "harness": {
        "experiment": ("str", "napea"),
        "seed": ("int", 12345),
        "trials": ("int", 100),
        "threads": ("int", 1),
    },
    "readout": {
        "alpha0": ("float", 0.010),
        "alpha1": ("float", 0.007),
        "kappa_mult": ("float", 5.0),
        "ideal": ("bool", False),
    },
    "pea": {
        "k_total": ("int", 6),
        "m_k": ("int", 4),
        "f": ("int", 4),
        "t_min": ("float", 20e-9),
        "t2_star": ("float?", 1200e-9),
        "phase_set": ("str?", "OCT"),
        "b_ext": ("float?", None),
        "refine_mle": ("bool", False),
    },
    "estimation": {
        "n_grid": ("int", 4096),
    },
    "ramsey": {
        "b_ext": ("float", 142.9e-6),
        "t_max": ("float", 1.2e-6),
        "n_points": ("int", 61),
        "t_fixed": ("float", 640e-9),
        "field_half_span": ("float", 150e-6),
        "sweep": ("str", "time"),
    },
    "fidelity": {
        "mult_lo": ("float", 1.0),
        "mult_hi": ("float", 10.0),
        "n_mult": ("int", 10),
    },
    "scaling": {
        "k_lo": ("int", 1),
        "k_hi": ("int", 9),
        "algorithm": ("str", "napea"),
        "ideal": ("bool", False),
    },
    "variance": {
        "phase_sets": ("str", "DUAL,QUAD,OCT,VAR"),
        "n_phi": ("int", 32),
        "k_total": ("int", 3),
    },
    "sensitivity": {
        "n_fields": ("int", 16),
        "fill": ("float", 0.8),
        "napea_k": ("int", 6),
        "napea_m_k": ("int", 20),
        "napea_f": ("int", 0),
        "napea_mult": ("float", 2.0),
        "napea_phase_set": ("str", "OCT"),
        "qpea_k": ("int", 7),
        "qpea_m_k": ("int", 1),
        "qpea_f": ("int", 0),
        "qpea_mult": ("float", 10.0),
    },
    "dynamic_range": {
        "t_mins_ns": ("str", "10,20,40,80"),
        "longest_ns": ("float", 1280.0),
        "m_high": ("int", 8),
        "m_low": ("int", 4),
    },
    "imaging": {
        "dipoles": ("str", "proton:0,0,0;carbon13:10,0,0"),
        "scan_height_nm": ("float", 10.0),
        "extent_nm": ("float", 60.0),
        "pixels": ("int", 256),
        "nv_axis": ("str", "0,0,1"),
        "center_nm": ("str", "5,0"),
        "target_field": ("float", 1.5e-9),
        "linewidth": ("float", 30e-12),
        "t2_s": ("float", 0.1),
    },
    "ac": {
        "omega": ("float", 2 * math.pi * 1e6),
        "b_ac": ("float?", None),
        "theta": ("float?", None),
        "n_theta": ("int", 64),
        "algorithm": ("str", "napea"),
        "ideal": ("bool", True),
    },
}

_TRUE = {"true", "1", "yes", "on"}
_FALSE = {"false", "0", "no", "off"}


def _parse_value(tag: str, raw: str, where: str):
    raw = raw.strip()
    if tag.endswith("?"):
        if raw.lower() == "none":
            return None
        tag = tag[:-1]
    if tag == "int":
        try:
            return int(raw)
        except ValueError:
            raise ValueError(f"{where}: expected an integer, got {raw!r}") from None
    if tag == "float":
        try:
            return float(raw)
        except ValueError:
            raise ValueError(f"{where}: expected a number, got {raw!r}") from None
    if tag == "bool":
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError(f"{where}: expected a boolean, got {raw!r}")
    return raw


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class Config:
    """Typed configuration values plus which keys were set explicitly."""

    values: dict[str, dict[str, Any]]
    explicit: frozenset = field(default_factory=frozenset)

    def get(self, section: str, key: str):
        return self.values[section][key]

    def set(self, section: str, key: str, value) -> None:
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ValueError(f"unknown configuration key [{section}] {key}")
        self.values[section][key] = value
        self.explicit = self.explicit | {(section, key)}

    def is_explicit(self, section: str, key: str) -> bool:
        return (section, key) in self.explicit


def default_config() -> Config:
    values = {sec: {k: spec[1] for k, spec in keys.items()}
              for sec, keys in SCHEMA.items()}
    return Config(values=values)


def parse_config(text: str) -> Config:
    """Parse INI text over the defaults; unknown keys are rejected by name."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ValueError(f"malformed configuration: {exc}") from None
    cfg = default_config()
    explicit = set()
    for section in parser.sections():
        if section not in SCHEMA:
            raise ValueError(f"unknown configuration section [{section}]")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ValueError(f"unknown configuration key [{section}] {key}")
            tag = SCHEMA[section][key][0]
            cfg.values[section][key] = _parse_value(tag, raw, f"[{section}] {key}")
            explicit.add((section, key))
    cfg.explicit = frozenset(explicit)
    return cfg


def load_config(path) -> Config:
    with open(path) as fh:
        return parse_config(fh.read())


def serialize_config(cfg: Config) -> str:
    out = io.StringIO()
    for section in SCHEMA:
        out.write(f"[{section}]\n")
        for key in SCHEMA[section]:
            out.write(f"{key} = {_format_value(cfg.values[section][key])}\n")
        out.write("\n")
    return out.getvalue()
