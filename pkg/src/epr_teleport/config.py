"""JSON run configuration with unit-suffixed keys.

A config is a flat JSON object::

    {"species": "Li+", "D_m": 3e-7, "dd_v_m": 1e-10, "dd_m": 1e-9, "L_m": 1e-6,
     "v_y_mps": 300, "dd_c_m": 1e-8,
     "noise": {"x_meas_m": "auto", "p_meas_kgmps": "auto"},
     "input": {"type": "gaussian", "sigma_x_m": "matched"},
     "events": 50000, "seed": 42, "mode": "quantum", "workers": 1}

``normalize_config`` fills defaults so that the normalised dict alone
reproduces a run; ``config_from_dict`` validates and builds a
:class:`~epr_teleport.teleport.RunConfig`.
"""

from __future__ import annotations

import copy
import json
import math
from typing import Any

from .collision import DEFAULT_INSTRUMENT_SPEED, CollisionParams
from .physconst import UnknownSpeciesError, species_preset
from .phasespace import CatState, mus_wavepacket
from .source import SourceParams
from .teleport import HistogramSettings, MatchedInput, NoiseSettings, RunConfig

__all__ = [
    "ConfigError",
    "AUTO",
    "MATCHED",
    "parse_config",
    "load_config",
    "normalize_config",
    "config_from_dict",
    "apply_overrides",
]

AUTO = "auto"
MATCHED = "matched"

_TOP_KEYS = {
    "species", "D_m", "dd_v_m", "dd_m", "L_m", "dv01_mps", "v_z_mps",
    "lens_resolution_m", "v_y_mps", "dd_c_m", "p_instr_mps", "noise", "input",
    "events", "seed", "mode", "workers", "hist",
}
_NOISE_KEYS = {"x_meas_m", "p_meas_kgmps", "x_shift_m", "p_shift_kgmps"}
_INPUT_KEYS = {
    "gaussian": {"type", "sigma_x_m", "mean_x_m", "mean_p_kgmps"},
    "cat": {"type", "separation_m", "peak_sigma_m", "mean_x_m"},
}
_HIST_KEYS = {"bins", "x_range_m", "p_range_kgmps"}


class ConfigError(ValueError):
    pass


def _check_keys(obj: dict, allowed: set, where: str):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r} in {where}")


def _number(obj: dict, key: str, where: str = "config", default=None, required=True) -> float:
    if key not in obj:
        if required and default is None:
            raise ConfigError(f"missing required key {key!r} in {where}")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"key {key!r} in {where} must be a finite number")
    return float(v)


def _integer(obj: dict, key: str, default: int) -> int:
    v = obj.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"key {key!r} must be an integer")
    return v


def _auto_or_number(obj: dict, key: str, where: str):
    v = obj.get(key, AUTO)
    if v == AUTO:
        return None
    return _number(obj, key, where)


def _range(obj: dict, key: str):
    v = obj.get(key)
    if v is None:
        return None
    if (not isinstance(v, list) or len(v) != 2
            or not all(isinstance(e, (int, float)) and not isinstance(e, bool) for e in v)):
        raise ConfigError(f"key {key!r} in hist must be a [lo, hi] pair")
    return (float(v[0]), float(v[1]))


def normalize_config(raw: dict) -> dict:
    """Return a copy of ``raw`` with every optional key made explicit."""
    _check_keys(raw, _TOP_KEYS, "config")
    cfg = copy.deepcopy(raw)
    cfg.setdefault("dv01_mps", 0.0)
    cfg.setdefault("v_z_mps", 0.0)
    cfg.setdefault("lens_resolution_m", 0.0)
    if "v_y_mps" in cfg or "dd_c_m" in cfg:
        cfg.setdefault("p_instr_mps", DEFAULT_INSTRUMENT_SPEED)
    noise = cfg.get("noise", AUTO)
    if noise == AUTO:
        noise = {}
    _check_keys(noise, _NOISE_KEYS, "noise")
    noise = {"x_meas_m": AUTO, "p_meas_kgmps": AUTO, "x_shift_m": 0.0,
             "p_shift_kgmps": 0.0, **noise}
    cfg["noise"] = noise
    if "input" in cfg:
        inp = cfg["input"]
        if not isinstance(inp, dict):
            raise ConfigError("input must be a JSON object")
        kind = inp.get("type", "gaussian")
        if kind not in _INPUT_KEYS:
            raise ConfigError(f"input type must be 'gaussian' or 'cat', got {kind!r}")
        _check_keys(inp, _INPUT_KEYS[kind], f"input ({kind})")
        defaults = {"type": kind, "mean_x_m": 0.0}
        if kind == "gaussian":
            defaults["mean_p_kgmps"] = 0.0
        cfg["input"] = {**defaults, **inp}
    hist = cfg.get("hist", {})
    _check_keys(hist, _HIST_KEYS, "hist")
    cfg["hist"] = {"bins": 80, **hist}
    cfg.setdefault("events", 50_000)
    cfg.setdefault("seed", 0)
    cfg.setdefault("mode", "quantum")
    cfg.setdefault("workers", 1)
    return cfg


def config_from_dict(raw: dict) -> RunConfig:
    cfg = normalize_config(raw)
    name = cfg.get("species")
    if not isinstance(name, str):
        raise ConfigError("missing required key 'species' (string)")
    try:
        species = species_preset(name)
    except UnknownSpeciesError as exc:
        raise ConfigError(f"key 'species': {exc.args[0]}") from None

    try:
        source = SourceParams(
            species,
            D=_number(cfg, "D_m"),
            dd_v=_number(cfg, "dd_v_m"),
            dd=_number(cfg, "dd_m"),
            L=_number(cfg, "L_m"),
            dv01=_number(cfg, "dv01_mps"),
            v_z=_number(cfg, "v_z_mps"),
            lens_resolution=_number(cfg, "lens_resolution_m"),
        )
        collision = None
        if "v_y_mps" in cfg or "dd_c_m" in cfg:
            collision = CollisionParams.with_instrument_speed(
                species, _number(cfg, "v_y_mps"), _number(cfg, "dd_c_m"),
                _number(cfg, "p_instr_mps"),
            )
            if not collision.p_instr >= 0:
                raise ValueError("collision violates p_instr >= 0")

        n = cfg["noise"]
        noise = NoiseSettings(
            _auto_or_number(n, "x_meas_m", "noise"),
            _auto_or_number(n, "p_meas_kgmps", "noise"),
            _number(n, "x_shift_m", "noise"),
            _number(n, "p_shift_kgmps", "noise"),
        )
        for key in _NOISE_KEYS:
            if n[key] != AUTO and not n[key] >= 0:
                raise ValueError(f"noise violates {key} >= 0")

        inp = None
        if "input" in cfg:
            i = cfg["input"]
            if i["type"] == "gaussian":
                if i.get("sigma_x_m", MATCHED) == MATCHED:
                    inp = MatchedInput(_number(i, "mean_x_m", "input"),
                                       _number(i, "mean_p_kgmps", "input"))
                else:
                    sx = _number(i, "sigma_x_m", "input")
                    if not sx > 0:
                        raise ValueError("input violates sigma_x > 0")
                    inp = mus_wavepacket(sx, _number(i, "mean_x_m", "input"),
                                         _number(i, "mean_p_kgmps", "input"))
            else:
                inp = CatState(
                    _number(i, "separation_m", "input"),
                    _number(i, "peak_sigma_m", "input"),
                    _number(i, "mean_x_m", "input"),
                )

        h = cfg["hist"]
        bins = _integer(h, "bins", 80)
        if bins < 1:
            raise ValueError("hist violates bins >= 1")
        hist = HistogramSettings(bins, _range(h, "x_range_m"), _range(h, "p_range_kgmps"))

        mode = cfg["mode"]
        if mode not in ("quantum", "classical"):
            raise ConfigError(f"key 'mode' must be 'quantum' or 'classical', got {mode!r}")
        return RunConfig(
            source=source,
            collision=collision,
            noise=noise,
            input=inp,
            n_events=_integer(cfg, "events", 50_000),
            seed=_integer(cfg, "seed", 0),
            mode=mode,
            workers=_integer(cfg, "workers", 1),
            histogram=hist,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"invariant violated: {exc}") from None


def _loads(text: str) -> dict:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return raw


def parse_config(text: str) -> RunConfig:
    return config_from_dict(_loads(text))


def load_config(path) -> dict:
    """Read a config file into a raw dict (not yet normalised)."""
    with open(path, encoding="utf-8") as fh:
        return _loads(fh.read())


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Apply ``key=value`` overrides; dotted keys address nested objects.

    Values are read as JSON when possible, otherwise kept as strings.
    """
    cfg = copy.deepcopy(raw)
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        *parents, leaf = key.split(".")
        node = cfg
        for part in parents:
            child = node.get(part)
            if child is None or child == AUTO:
                child = node[part] = {}
            if not isinstance(child, dict):
                raise ConfigError(f"override {item!r}: {part!r} is not an object")
            node = child
        node[leaf] = _parse_value(value)
    return cfg
