"""Flat sectioned key-value configuration with strict validation.

The grammar is INI: sections in brackets, one key = value per line.  Every
key is declared in the schema below with a parser and range check; unknown
sections or keys are rejected so typos fail loudly.  Overrides arrive as
"section.key=value" strings and are applied before validation.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from .errors import ValidationError


def _parse_float(lo=None, hi=None, lo_open=False):
    def parse(raw, key):
        try:
            value = float(raw)
        except ValueError:
            raise ValidationError(f"{key}: expected a number, got {raw!r}") from None
        if lo is not None and (value <= lo if lo_open else value < lo):
            raise ValidationError(f"{key}: {value} below allowed minimum {lo}")
        if hi is not None and value > hi:
            raise ValidationError(f"{key}: {value} above allowed maximum {hi}")
        return value
    return parse


def _parse_int(lo=None, hi=None):
    def parse(raw, key):
        try:
            value = int(raw)
        except ValueError:
            raise ValidationError(f"{key}: expected an integer, got {raw!r}") from None
        if lo is not None and value < lo:
            raise ValidationError(f"{key}: {value} below allowed minimum {lo}")
        if hi is not None and value > hi:
            raise ValidationError(f"{key}: {value} above allowed maximum {hi}")
        return value
    return parse


def _parse_choice(*choices):
    def parse(raw, key):
        raw = raw.strip()
        if raw not in choices:
            raise ValidationError(f"{key}: {raw!r} not one of {choices}")
        return raw
    return parse


def _parse_atoms(raw, key):
    raw = raw.strip()
    if not raw:
        return ()
    atoms = []
    for part in raw.split(","):
        bits = part.strip().split(":")
        if len(bits) != 2:
            raise ValidationError(f"{key}: atom {part!r} is not size:rate")
        try:
            atoms.append((float(bits[0]), float(bits[1])))
        except ValueError:
            raise ValidationError(f"{key}: atom {part!r} is not numeric") from None
    return tuple(atoms)


def _parse_float_list(raw, key):
    raw = raw.strip()
    if not raw:
        return ()
    try:
        return tuple(float(p) for p in raw.split(","))
    except ValueError:
        raise ValidationError(f"{key}: expected comma-separated numbers, got {raw!r}") from None


def _parse_str(raw, key):
    return raw.strip()


def _parse_optional_float(lo=None, hi=None, lo_open=False):
    inner = _parse_float(lo, hi, lo_open)

    def parse(raw, key):
        raw = raw.strip()
        if raw in ("", "auto", "none"):
            return None
        return inner(raw, key)
    return parse


SCHEMA = {
    "model": {
        "atoms": _parse_atoms,
        "sigma0": _parse_float(lo=0.0),
        "drift": _parse_float(),
        "m": _parse_int(lo=1, hi=8),
    },
    "grid": {
        "t0": _parse_float(),
        "T": _parse_float(),
        "n_steps": _parse_int(lo=1, hi=10_000_000),
    },
    "monte_carlo": {
        "n_paths": _parse_int(lo=1, hi=50_000_000),
        "seed": _parse_int(lo=0),
        "n_rep": _parse_int(lo=1, hi=1024),
    },
    "solver": {
        "scheme": _parse_choice("direct", "penalized"),
        "n_penalty": _parse_float(lo=0.0),
        "n_list": _parse_float_list,
        "degree": _parse_int(lo=0, hi=12),
        "ridge": _parse_float(lo=0.0),
        "tol": _parse_float(lo=0.0, lo_open=True),
        "max_iter": _parse_int(lo=1, hi=10_000),
        "alpha_prime": _parse_optional_float(lo=0.0, hi=1.0, lo_open=True),
    },
    "problem": {
        "scenario": _parse_str,
        "r": _parse_float(),
        "alpha": _parse_float(lo=0.0, lo_open=True),
        "beta": _parse_float(),
        "a": _parse_float(),
        "x0": _parse_float(),
        "m": _parse_int(lo=1, hi=8),
    },
    "outputs": {
        "directory": _parse_str,
        "formats": _parse_choice("csv"),
    },
    "surface": {
        "t_points": _parse_int(lo=2, hi=2000),
        "x_points": _parse_int(lo=3, hi=2000),
        "dt": _parse_float(lo=0.0, lo_open=True),
    },
}

DEFAULTS = {
    "model": {"atoms": (), "sigma0": 1.0, "drift": 0.0, "m": 1},
    "grid": {"t0": None, "T": None, "n_steps": None},
    "monte_carlo": {"n_paths": 256, "seed": 0, "n_rep": 1},
    "solver": {"scheme": "direct", "n_penalty": 100.0, "n_list": (1.0, 4.0, 16.0, 64.0),
               "degree": 2, "ridge": 1e-8, "tol": 1e-8, "max_iter": 25,
               "alpha_prime": None},
    "problem": {"scenario": "", "r": None, "alpha": None, "beta": None,
                "a": None, "x0": None, "m": None},
    "outputs": {"directory": "out", "formats": "csv"},
    "surface": {"t_points": 6, "x_points": 11, "dt": 0.01},
}


@dataclass(eq=False)
class ExperimentConfig:
    """Resolved configuration: schema defaults overlaid with file and CLI values."""

    sections: Dict[str, Dict[str, object]] = field(default_factory=dict)
    raw_lines: Dict[str, Dict[str, str]] = field(default_factory=dict)

    def get(self, section: str, key: str):
        return self.sections[section][key]

    def set_value(self, section: str, key: str, raw: str):
        if section not in SCHEMA:
            raise ValidationError(f"unknown config section [{section}]")
        if key not in SCHEMA[section]:
            raise ValidationError(f"unknown config key {section}.{key}")
        self.sections[section][key] = SCHEMA[section][key](raw, f"{section}.{key}")
        self.raw_lines.setdefault(section, {})[key] = raw

    def echo(self) -> str:
        """INI text of the resolved values, stable across runs."""
        out = []
        for section in SCHEMA:
            out.append(f"[{section}]")
            for key, value in self.sections[section].items():
                if value is None:
                    continue  # unset optional key; omitted so the echo re-parses
                if isinstance(value, tuple):
                    if value and isinstance(value[0], tuple):
                        text = ",".join(f"{s}:{r}" for s, r in value)
                    else:
                        text = ",".join(repr(v) for v in value)
                else:
                    text = repr(value) if isinstance(value, float) else str(value)
                out.append(f"{key} = {text}")
            out.append("")
        return "\n".join(out)


def _fresh_config() -> ExperimentConfig:
    sections = {sec: dict(vals) for sec, vals in DEFAULTS.items()}
    return ExperimentConfig(sections=sections)


def parse_config(text: Optional[str] = None, path: Optional[str] = None,
                 overrides: Optional[List[str]] = None) -> ExperimentConfig:
    """Parse config text or a file plus "section.key=value" overrides."""
    cfg = _fresh_config()
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    if text:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str  # keys are case-sensitive (grid.T)
        try:
            parser.read_file(io.StringIO(text))
        except configparser.Error as exc:
            raise ValidationError(f"config parse error: {exc}") from None
        for section in parser.sections():
            for key, raw in parser.items(section):
                cfg.set_value(section, key, raw)
    for item in overrides or []:
        if "=" not in item:
            raise ValidationError(f"override {item!r} is not section.key=value")
        dotted, raw = item.split("=", 1)
        if "." not in dotted:
            raise ValidationError(f"override key {dotted!r} is not section.key")
        section, key = dotted.split(".", 1)
        cfg.set_value(section.strip(), key.strip(), raw.strip())
    return cfg


def scenario_grid(cfg: ExperimentConfig, default_grid):
    """Grid from config where given, falling back to the scenario default."""
    t0 = cfg.get("grid", "t0")
    T = cfg.get("grid", "T")
    n = cfg.get("grid", "n_steps")
    d_t0, d_T, d_n = default_grid
    from .paths import TimeGrid
    return TimeGrid(d_t0 if t0 is None else t0,
                    d_T if T is None else T,
                    d_n if n is None else n)


def scenario_params(cfg: ExperimentConfig) -> Dict[str, object]:
    """Per-scenario numeric overrides taken from the [problem] section."""
    out = {}
    for key in ("r", "alpha", "beta", "a", "x0", "m"):
        value = cfg.get("problem", key)
        if value is not None:
            out[key] = value
    return out
