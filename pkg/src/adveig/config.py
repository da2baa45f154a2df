"""Problem configuration files.

The format is INI-style: ``[section]`` headers, ``key = value`` lines and
``#`` comments.  Values are Python-style literals (numbers, quoted strings,
lists) or the bare words ``true`` / ``false``.  Every key is checked against
a schema and errors carry the offending line number.

Example::

    [problem]
    preset = "P3"

    [domain]
    nx = 65
    ny = 65

    [flow]
    kind = "stream"
    expr = "sin(pi*x)*sin(pi*y)"
"""

from __future__ import annotations

import ast
import configparser
import copy
import re
from dataclasses import dataclass, field
from typing import Optional

from . import expr as ex
from . import flows
from .mesh import BadGridSpec, build_grid
from .problem import PRESETS, Problem, preset

__all__ = ["ConfigError", "Config", "parse_config", "load_config", "effective_config", "build_problem", "SCHEMA"]


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


SCHEMA = {
    "problem": {"preset": "str", "name": "str"},
    "domain": {"x": "interval", "y": "interval", "nx": "int", "ny": "int"},
    "bc": {"b": "float"},
    "coefficients": {"a": "expr", "c": "expr"},
    "flow": {"kind": "str", "expr": "expr", "direction": "str", "vector": "floats"},
    "amplitudes": {"values": "floats", "A": "float", "A_max": "float", "A_start": "float"},
    "solver": {"tol": "float", "max_iter": "int", "shift": "float"},
    "analysis": {
        "delta": "float",
        "K": "int",
        "seed": "int",
        "directions": "int",
        "t": "float",
        "decomposition_tol": "float",
        "scan_step": "float",
        "tol_limit": "float",
        "limit_delta": "float",
        "rtol": "float",
    },
    "output": {"dir": "str"},
}

FLOW_KINDS = ("zero", "constant", "stream", "shear", "gradient")

ANALYSIS_DEFAULTS = {
    "delta": 0.01,
    "K": 6,
    "seed": 0,
    "directions": 20,
    "t": 0.05,
    "decomposition_tol": 5e-6,
    "scan_step": 0.05,
    "tol_limit": 1e-3,
    "limit_delta": 0.05,
    "rtol": 1e-6,
}


@dataclass
class Config:
    values: dict
    lines: dict = field(default_factory=dict)
    source: str = "<string>"

    def get(self, section: str, key: str, default=None):
        return self.values.get(section, {}).get(key, default)

    def line(self, section: str, key: Optional[str] = None) -> Optional[int]:
        return self.lines.get((section, key))


_SECTION = re.compile(r"^\s*\[([^\]]*)\]")
_KEY = re.compile(r"^\s*([^=:\s#;][^=:]*?)\s*[=:]")


def _line_index(text: str) -> dict:
    lines, section = {}, None
    for n, raw in enumerate(text.splitlines(), start=1):
        m = _SECTION.match(raw)
        if m:
            section = m.group(1).strip()
            lines.setdefault((section, None), n)
            continue
        m = _KEY.match(raw)
        if m and section is not None and not raw.lstrip().startswith(("#", ";")):
            lines.setdefault((section, m.group(1).strip()), n)
    return lines


def _literal(raw: str):
    s = raw.strip()
    if s.lower() in ("true", "false"):
        return s.lower() == "true"
    try:
        return ast.literal_eval(s)
    except (ValueError, SyntaxError):
        return s


def _number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _coerce(kind: str, v, where: str, line):
    def bad(msg):
        return ConfigError(f"{where}: {msg}", line)

    if kind == "float":
        if not _number(v):
            raise bad(f"expected a number, got {v!r}")
        return float(v)
    if kind == "int":
        if isinstance(v, float) and v.is_integer():
            v = int(v)
        if not isinstance(v, int) or isinstance(v, bool):
            raise bad(f"expected an integer, got {v!r}")
        return v
    if kind == "str":
        if not isinstance(v, str):
            raise bad(f"expected a string, got {v!r}")
        return v
    if kind == "expr":
        if _number(v):
            v = repr(float(v))
        if not isinstance(v, str):
            raise bad(f"expected an expression string, got {v!r}")
        try:
            ex.compile_expr(v)
        except ex.ExprError as exc:
            raise bad(f"bad expression {v!r}: {exc}") from None
        return v
    if kind in ("interval", "floats"):
        if _number(v):
            v = [v]
        if not isinstance(v, (list, tuple)) or not all(_number(x) for x in v):
            raise bad(f"expected a list of numbers, got {v!r}")
        v = [float(x) for x in v]
        if kind == "interval" and len(v) != 2:
            raise bad(f"expected two numbers, got {len(v)}")
        return v
    raise AssertionError(kind)


def parse_config(text: str, source: str = "<string>") -> Config:
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";"), strict=True, default_section="\x00"
    )
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside of any [section]", exc.lineno) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(exc.message.split(": ", 1)[-1] if hasattr(exc, "message") else str(exc), exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("cannot parse line", line) from None
    lines = _line_index(text)
    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", lines.get((section, None)))
        values[section] = {}
        for key, raw in parser.items(section):
            line = lines.get((section, key))
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]", line)
            values[section][key] = _coerce(SCHEMA[section][key], _literal(raw), f"{section}.{key}", line)
    return Config(values, lines, source)


def load_config(path) -> Config:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except FileNotFoundError:
        raise ConfigError(f"config not found: {path}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, str(path))


def _from_problem(p: Problem) -> dict:
    d = p.describe()
    out = {
        "problem": {"name": d["name"]},
        "domain": {"x": d["x"], "nx": d["nx"]},
        "bc": {"b": d["b"]},
        "coefficients": {"a": d["a"], "c": d["c"]},
        "flow": {"kind": d["flow"]["kind"]},
        "amplitudes": {"values": d["amplitudes"]},
        "solver": {"tol": d["tol"], "max_iter": d["max_iter"]},
    }
    if d["dim"] == 2:
        out["domain"].update(y=d["y"], ny=d["ny"])
    flow = d["flow"]
    for key in ("expr", "direction", "vector"):
        if key in flow:
            out["flow"][key] = flow[key]
    if d["shift"] is not None:
        out["solver"]["shift"] = d["shift"]
    return out


def effective_config(cfg: Config, nx: Optional[int] = None, ny: Optional[int] = None, A: Optional[float] = None) -> dict:
    """Merge preset, file values, defaults and command-line overrides."""
    name = cfg.get("problem", "preset")
    if name is not None:
        if name.upper() not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}", cfg.line("problem", "preset"))
        eff = _from_problem(preset(name))
    else:
        eff = {
            "problem": {"name": "custom"},
            "domain": {"x": [0.0, 1.0], "nx": 65},
            "bc": {"b": 0.0},
            "coefficients": {"a": "1", "c": "0"},
            "flow": {"kind": "zero"},
            "amplitudes": {"values": [0.0]},
            "solver": {"tol": 1e-10, "max_iter": 500},
        }
    eff = copy.deepcopy(eff)
    for section, items in cfg.values.items():
        eff.setdefault(section, {}).update(items)
    if "flow" in cfg.values and "kind" in cfg.values["flow"] and name is not None:
        # an explicit flow kind replaces the preset flow entirely
        eff["flow"] = dict(cfg.values["flow"])
    eff["problem"].setdefault("name", "custom")
    if name is not None:
        eff["problem"]["preset"] = name.upper()
    analysis = dict(ANALYSIS_DEFAULTS)
    analysis.update(eff.get("analysis", {}))
    eff["analysis"] = analysis
    eff.setdefault("output", {}).setdefault("dir", "adveig-out")
    if nx is not None:
        eff["domain"]["nx"] = int(nx)
    if ny is not None:
        eff["domain"]["ny"] = int(ny)
    if A is not None:
        eff["amplitudes"]["A"] = float(A)
    amps = eff["amplitudes"]
    if "A" not in amps:
        vals = amps.get("values") or [0.0]
        amps["A"] = float(vals[-1])
    return eff


def _flow_spec(flow: dict, cfg: Config):
    kind = flow.get("kind", "zero")
    line = cfg.line("flow", "kind")
    if kind not in FLOW_KINDS:
        raise ConfigError(f"flow.kind must be one of {', '.join(FLOW_KINDS)}, got {kind!r}", line)

    def need(key):
        if key not in flow:
            raise ConfigError(f"flow kind {kind!r} needs flow.{key}", line)
        return flow[key]

    if kind == "zero":
        return flows.Zero()
    if kind == "constant":
        return flows.Constant(tuple(need("vector")))
    if kind == "stream":
        return flows.StreamFunction(need("expr"))
    if kind == "gradient":
        return flows.Gradient(need("expr"))
    return flows.Shear(need("expr"), flow.get("direction", "x"))


def build_problem(cfg: Config, nx: Optional[int] = None, ny: Optional[int] = None, A: Optional[float] = None):
    """Return ``(Problem, effective config dict)``."""
    eff = effective_config(cfg, nx, ny, A)
    dom = eff["domain"]
    try:
        grid = build_grid(tuple(dom["x"]), dom["nx"], tuple(dom["y"]) if "y" in dom else None, dom.get("ny"))
    except BadGridSpec as exc:
        raise ConfigError(f"bad domain: {exc}", cfg.line("domain")) from None
    b = eff["bc"]["b"]
    if not 0.0 <= b <= 1.0:
        raise ConfigError(f"bc.b must lie in [0, 1], got {b}", cfg.line("bc", "b"))
    amps = eff["amplitudes"]["values"]
    solver = eff["solver"]
    problem = Problem(
        name=eff["problem"]["name"],
        grid=grid,
        b=b,
        a=eff["coefficients"]["a"],
        c=eff["coefficients"]["c"],
        flow=_flow_spec(eff["flow"], cfg),
        amplitudes=tuple(amps),
        tol=solver["tol"],
        max_iter=solver["max_iter"],
        shift=solver.get("shift"),
    )
    try:
        problem.a_field, problem.c_field, problem.velocity
    except ex.ExprError as exc:
        raise ConfigError(f"coefficient or flow expression: {exc}", cfg.line("coefficients")) from None
    except flows.DimensionMismatch as exc:
        raise ConfigError(f"flow: {exc}", cfg.line("flow")) from None
    return problem, eff
