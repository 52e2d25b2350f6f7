"""Scenario configuration: flat ``key = value`` lines with dotted sections.

``#`` starts a comment.  Every key is checked against the schema of the
chosen model before anything is allocated; unknown keys, duplicates and
bad values are reported with their line number.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

REQUIRED = object()

_TRUE = {"on", "true", "yes", "1"}
_FALSE = {"off", "false", "no", "0"}


def parse_float(text: str) -> float:
    """Plain floats plus multiples of pi such as ``2pi`` or ``0.5*pi``."""
    t = text.strip().lower().replace(" ", "")
    m = re.fullmatch(r"([-+]?[0-9.eE+-]*)\*?pi", t)
    if m:
        coef = m.group(1)
        c = 1.0 if coef in ("", "+") else -1.0 if coef == "-" else float(coef)
        return c * math.pi
    return float(t)


def parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in _TRUE:
        return True
    if t in _FALSE:
        return False
    raise ValueError(f"expected on/off, got {text!r}")


def parse_ints(text: str) -> tuple[int, ...]:
    parts = [p for p in re.split(r"[,\sx]+", text.strip()) if p]
    if not parts:
        raise ValueError("empty integer list")
    return tuple(int(p) for p in parts)


def parse_dt(text: str):
    return "auto" if text.strip().lower() == "auto" else parse_float(text)


TYPES = {"float": parse_float, "int": int, "str": str.strip, "bool": parse_bool, "ints": parse_ints, "dt": parse_dt}

COMMON = {
    "model": ("str", REQUIRED),
    "name": ("str", None),
    "seed": ("int", 0),
    "grid.dims": ("int", 1),
    "grid.n": ("ints", REQUIRED),
    "grid.length": ("float", 2 * math.pi),
    "time.dt": ("dt", "auto"),
    "time.steps": ("int", REQUIRED),
    "time.settle_periods": ("int", 0),
    "init.preset": ("str", None),
    "init.amplitude": ("float", None),
    "init.mode": ("int", 1),
    "forcing.preset": ("str", "none"),
    "forcing.amplitude": ("float", 0.0),
    "forcing.omega": ("float", 1.0),
    "forcing.mode": ("int", 1),
    "output.dir": ("str", None),
    "output.every": ("int", 1),
}

MODELS = {
    "gk": {
        "keys": {
            "model.tau_r": ("float", REQUIRED),
            "model.tau_n": ("float", REQUIRED),
            "model.c0": ("float", REQUIRED),
            "model.c_heat": ("float", 1.0),
            "init.theta": ("float", 1.0),
        },
        "presets": ("uniform_flux", "sine", "random", "rest"),
        "forcings": ("none", "standing_wave"),
        "checks": ("uniform_decay", "second_law", "entropy_balance", "cycle", "virtual_balance"),
    },
    "memory_heat": {
        "keys": {
            "model.k1.amplitude": ("float", REQUIRED),
            "model.k1.lambda": ("float", REQUIRED),
            "model.k2.amplitude": ("float", REQUIRED),
            "model.k2.lambda": ("float", REQUIRED),
            "model.c_heat": ("float", 1.0),
            "model.buffer.m": ("int", None),
            "init.theta": ("float", 1.0),
        },
        "presets": ("switch_on", "oscillating"),
        "forcings": ("none",),
        "checks": ("psi2", "entropy_action", "virtual_balance"),
    },
    "cahn_hilliard": {
        "keys": {
            "model.gamma": ("float", REQUIRED),
            "model.beta": ("float", REQUIRED),
            "model.theta0": ("float", REQUIRED),
            "model.theta": ("float", REQUIRED),
            "model.mobility.kind": ("str", "constant"),
            "model.mobility.m0": ("float", 1.0),
            "init.modes": ("ints", (1,)),
            "init.mean": ("float", 0.0),
        },
        "presets": ("noise", "modes", "uniform"),
        "forcings": ("none", "standing_wave"),
        "checks": ("mass", "free_energy", "dual_form", "growth_rate", "cycle"),
    },
    "plate": {
        "keys": {
            "model.rho": ("float", 1.0),
            "model.a": ("float", REQUIRED),
            "model.b": ("float", 0.0),
            "model.c_th": ("float", 0.0),
            "model.memory.c0": ("float", None),
            "model.memory.c1": ("float", 0.0),
            "model.memory.lambda": ("float", 1.0),
            "theta.preset": ("str", "uniform"),
            "theta.value": ("float", 1.0),
            "theta.amplitude": ("float", 0.0),
            "f.preset": ("str", "none"),
            "f.amplitude": ("float", 0.0),
            "f.omega": ("float", 1.0),
        },
        "presets": ("single_mode",),
        "forcings": ("none",),
        "checks": ("energy_drift", "frequency", "balance", "dual_form", "cycle", "potential", "virtual_balance"),
    },
    "dielectric": {
        "keys": {
            "model.mu": ("float", 1.0),
            "model.eps0": ("float", 1.0),
            "model.eps1": ("float", 0.0),
            "model.eps2": ("float", 0.0),
            "init.width": ("float", 0.5),
        },
        "presets": ("plane_wave", "gaussian"),
        "forcings": ("none",),
        "checks": ("energy_drift", "frequency", "external_null", "heat_difference", "dual_form"),
    },
    "fourier": {
        "keys": {
            "model.k": ("float", 1.0),
            "model.c_heat": ("float", 1.0),
            "init.theta": ("float", 1.0),
        },
        "presets": ("sine",),
        "forcings": ("none", "standing_wave"),
        "checks": ("virtual_balance",),
    },
}


@dataclass
class Scenario:
    name: str
    model: str
    values: dict
    checks: tuple
    source: str | None = None
    lines: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        v = self.values.get(key)
        return default if v is None else v

    def echo(self) -> dict:
        """Parsed values as plain JSON-able data, sorted by key."""
        out = {}
        for k in sorted(self.values):
            v = self.values[k]
            out[k] = list(v) if isinstance(v, tuple) else v
        out["checks"] = list(self.checks)
        return out


def required_keys(model: str | None = None) -> list[str]:
    keys = [k for k, (_, d) in COMMON.items() if d is REQUIRED]
    if model in MODELS:
        keys += [k for k, (_, d) in MODELS[model]["keys"].items() if d is REQUIRED]
    return keys


def parse_config(text: str, name: str | None = None, source: str | None = None) -> Scenario:
    raw: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", lineno)
        key, value = (part.strip() for part in body.split("=", 1))
        if not key:
            raise ConfigError("missing key", lineno)
        if key in raw:
            raise ConfigError(f"duplicate key {key!r} (first set on line {raw[key][1]})", lineno)
        raw[key] = (value, lineno)

    if not raw:
        raise ConfigError("empty configuration; required keys: " + ", ".join(required_keys()))
    if "model" not in raw:
        raise ConfigError("missing required key 'model' (one of " + ", ".join(sorted(MODELS)) + ")")
    model, mline = raw["model"]
    if model not in MODELS:
        raise ConfigError(f"unknown model {model!r}; choose one of {', '.join(sorted(MODELS))}", mline)
    spec = MODELS[model]
    schema = dict(COMMON)
    schema.update(spec["keys"])

    values, checks, lines = {}, [], {}
    for key, (value, lineno) in raw.items():
        lines[key] = lineno
        if key.startswith("checks."):
            check = key[len("checks."):]
            if check not in spec["checks"]:
                raise ConfigError(
                    f"unknown check {check!r} for model {model}; available: {', '.join(spec['checks'])}", lineno
                )
            try:
                if parse_bool(value):
                    checks.append(check)
            except ValueError as exc:
                raise ConfigError(str(exc), lineno) from None
            continue
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} for model {model}", lineno)
        kind = schema[key][0]
        try:
            values[key] = TYPES[kind](value)
        except (ValueError, TypeError):
            raise ConfigError(f"bad {kind} value {value!r} for {key}", lineno) from None

    missing = [k for k, (_, d) in schema.items() if d is REQUIRED and k not in values]
    if missing:
        raise ConfigError("missing required keys: " + ", ".join(missing))
    for k, (_, d) in schema.items():
        if k not in values:
            values[k] = d

    _validate(model, spec, values, lines)
    if not checks:
        checks = list(spec["checks"])
    checks = [c for c in spec["checks"] if c in checks]
    return Scenario(values.get("name") or name or model, model, values, tuple(checks), source, lines)


def _validate(model, spec, values, lines):
    def fail(msg, key):
        raise ConfigError(msg, lines.get(key))

    dims = values["grid.dims"]
    if dims not in (1, 2):
        fail("grid.dims must be 1 or 2", "grid.dims")
    n = values["grid.n"]
    if len(n) == 1:
        n = n * dims
    if len(n) != dims:
        fail(f"grid.n needs {dims} entries", "grid.n")
    if any(k < 8 for k in n):
        fail("grid.n must be at least 8 per axis", "grid.n")
    values["grid.n"] = n
    if not values["grid.length"] > 0:
        fail("grid.length must be positive", "grid.length")
    if values["time.steps"] < 1:
        fail("time.steps must be positive", "time.steps")
    dt = values["time.dt"]
    if dt != "auto" and not dt > 0:
        fail("time.dt must be positive or 'auto'", "time.dt")
    if values["output.every"] < 1:
        fail("output.every must be positive", "output.every")
    preset = values["init.preset"] or spec["presets"][0]
    if preset not in spec["presets"]:
        fail(f"init.preset must be one of {', '.join(spec['presets'])}", "init.preset")
    values["init.preset"] = preset
    if values["forcing.preset"] not in spec["forcings"]:
        fail(f"forcing.preset must be one of {', '.join(spec['forcings'])}", "forcing.preset")
    if model == "dielectric" and dims != 2:
        fail("the dielectric runs on 2D grids (grid.dims = 2)", "grid.dims")
    if model == "cahn_hilliard" and values["model.mobility.kind"] not in ("constant", "degenerate"):
        fail("model.mobility.kind must be constant or degenerate", "model.mobility.kind")
    if model == "plate":
        if values["theta.preset"] not in ("uniform", "sine"):
            fail("theta.preset must be uniform or sine", "theta.preset")
        if values["f.preset"] not in ("none", "sine"):
            fail("f.preset must be none or sine", "f.preset")


def load_config(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, name=path.stem, source=str(path))
