"""Chain configuration files and result documents (JSON text).

A chain configuration looks like::

    {
      "n": 4,
      "alpha": {"constant": 1},
      "beta": [[2, 0], [2, 0], [2, 0]],
      "omega": {"yuce": {"gamma": 2, "v0": 0.5}},
      "cyclic": false,
      "q1": 1
    }

Complex numbers are ``[re, im]`` pairs (plain reals are accepted).  A
sequence is an explicit array or one of the generator tags ``constant``,
``alternating`` (site 1 takes the first value), or, for ``omega`` only,
``yuce`` giving ``(-1)**j i v0``.  With ``omega`` set by ``yuce``, omitted
``alpha`` and ``beta`` default to ``1`` and ``gamma``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Optional

import numpy as np

from .errors import QhermError
from .lattice import ChainSpec


class ConfigError(QhermError, ValueError):
    """Malformed configuration text or structure."""


def parse_complex(value, where: str) -> complex:
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number or [re, im], got {value!r}")
    if isinstance(value, (int, float)):
        return complex(float(value), 0.0)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return complex(float(value[0]), float(value[1]))
    raise ConfigError(f"{where}: expected a number or [re, im], got {value!r}")


def parse_real(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a real number, got {value!r}")
    return float(value)


def complex_pair(z) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def complex_list(values) -> list[list[float]]:
    return [complex_pair(z) for z in np.asarray(values).reshape(-1)]


def yuce_omega(n: int, v0: float) -> np.ndarray:
    j = np.arange(1, n + 1)
    return 1j * v0 * (-1.0) ** j


def expand_sequence(value, length: int, name: str, allow_yuce: bool = False) -> np.ndarray:
    """Expand an explicit array or generator tag into ``length`` complex values."""
    if isinstance(value, list):
        if len(value) != length:
            raise ConfigError(f"{name}: expected {length} entries, got {len(value)}")
        return np.array([parse_complex(v, f"{name}[{i}]") for i, v in enumerate(value)],
                        dtype=np.complex128)
    if isinstance(value, dict) and len(value) == 1:
        (tag, arg), = value.items()
        if tag == "constant":
            return np.full(length, parse_complex(arg, f"{name}.constant"))
        if tag == "alternating":
            if not isinstance(arg, list) or len(arg) != 2:
                raise ConfigError(f"{name}.alternating: expected two values")
            a = parse_complex(arg[0], f"{name}.alternating[0]")
            b = parse_complex(arg[1], f"{name}.alternating[1]")
            return np.array([a if i % 2 == 0 else b for i in range(length)], dtype=np.complex128)
        if tag == "yuce" and allow_yuce:
            gamma, v0 = yuce_parameters(arg, name)
            return yuce_omega(length, v0)
    raise ConfigError(f"{name}: expected an array or generator tag, got {value!r}")


def yuce_parameters(arg, name: str = "omega") -> tuple[float, float]:
    if not isinstance(arg, dict) or set(arg) != {"gamma", "v0"}:
        raise ConfigError(f"{name}.yuce: expected {{'gamma': .., 'v0': ..}}")
    gamma = parse_real(arg["gamma"], f"{name}.yuce.gamma")
    v0 = parse_real(arg["v0"], f"{name}.yuce.v0")
    return gamma, v0


@dataclass(frozen=True)
class ChainConfig:
    """Parsed configuration: the chain, the metric choice ``q1`` and, for
    alternating gain/loss chains, ``(gamma, v0)``."""

    spec: ChainSpec
    q1: float = 1.0
    yuce: Optional[tuple[float, float]] = None
    raw: dict = field(default_factory=dict, compare=False)


_CHAIN_KEYS = {"n", "alpha", "beta", "omega", "cyclic", "corner_up", "corner_down", "q1", "sweep"}


def parse_chain_config(obj: Any, overrides: Optional[dict] = None) -> ChainConfig:
    """Build a :class:`ChainConfig` from decoded JSON.

    ``overrides`` replaces top-level keys before parsing (used by sweeps).
    """
    if not isinstance(obj, dict):
        raise ConfigError("configuration must be a JSON object")
    obj = {**obj, **(overrides or {})}
    unknown = set(obj) - _CHAIN_KEYS
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")
    n = obj.get("n")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ConfigError(f"n: expected a positive integer, got {n!r}")
    if "omega" not in obj:
        raise ConfigError("omega: required")
    omega_raw = obj["omega"]
    yuce = None
    if isinstance(omega_raw, dict) and "yuce" in omega_raw:
        yuce = yuce_parameters(omega_raw["yuce"])
    omega = expand_sequence(omega_raw, n, "omega", allow_yuce=True)
    defaults = {"alpha": {"constant": 1.0}, "beta": {"constant": yuce[0]}} if yuce else {}
    hops = {}
    for name in ("alpha", "beta"):
        if name in obj:
            hops[name] = expand_sequence(obj[name], n - 1, name)
        elif name in defaults:
            hops[name] = expand_sequence(defaults[name], n - 1, name)
        elif n == 1:
            hops[name] = np.zeros(0, dtype=np.complex128)
        else:
            raise ConfigError(f"{name}: required")
    cyclic = obj.get("cyclic", False)
    if not isinstance(cyclic, bool):
        raise ConfigError(f"cyclic: expected a boolean, got {cyclic!r}")
    corners = {}
    for name in ("corner_up", "corner_down"):
        if name in obj:
            corners[name] = parse_complex(obj[name], name)
        elif cyclic:
            raise ConfigError(f"{name}: required when cyclic")
    if not cyclic and corners:
        raise ConfigError("corner entries given for a non-cyclic chain")
    q1 = parse_real(obj.get("q1", 1.0), "q1")
    if q1 == 0.0 or not math.isfinite(q1):
        raise ConfigError("q1: must be finite and nonzero")
    spec = ChainSpec(n, hops["alpha"], hops["beta"], omega, cyclic,
                     corners.get("corner_up"), corners.get("corner_down"))
    return ChainConfig(spec, q1, yuce, obj)


def explicit_config(cfg: ChainConfig) -> dict:
    """Configuration with every sequence written out as ``[re, im]`` arrays."""
    spec = cfg.spec
    out = {
        "n": int(spec.n),
        "alpha": complex_list(spec.alpha),
        "beta": complex_list(spec.beta),
        "omega": complex_list(spec.omega),
        "cyclic": bool(spec.cyclic),
        "q1": float(cfg.q1),
    }
    if spec.cyclic:
        out["corner_up"] = complex_pair(spec.corner_up)
        out["corner_down"] = complex_pair(spec.corner_down)
    return out


def loads(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def load(path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return loads(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc


def _plain(obj):
    """Convert numpy scalars/arrays and complex numbers to JSON-native values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        val = float(obj)
        if not math.isfinite(val):
            return repr(val)
        return val
    if isinstance(obj, (complex, np.complexfloating)):
        return _plain(complex_pair(obj))
    return obj


@dataclass
class ResultDocument:
    """Output of one CLI command.

    Floats are written with ``repr``, the shortest string that reads back to
    the same double, so the text round-trips exactly.
    """

    command: str
    input: dict
    exit_code: int = 0
    spectrum: Optional[list] = None
    all_real: Optional[bool] = None
    metric: Optional[dict] = None
    residuals: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)
    timestamp: Optional[str] = None

    _ORDER = ("command", "exit_code", "input", "spectrum", "all_real", "metric",
              "residuals", "details", "diagnostics", "timestamp")

    def to_dict(self, include_timestamp: bool = True) -> dict:
        out = {key: _plain(getattr(self, key)) for key in self._ORDER}
        if not include_timestamp:
            out.pop("timestamp")
        return out

    def to_text(self, include_timestamp: bool = True) -> str:
        return json.dumps(self.to_dict(include_timestamp), indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ResultDocument":
        data = loads(text)
        if not isinstance(data, dict) or "command" not in data:
            raise ConfigError("not a result document")
        return cls(**{key: data[key] for key in cls._ORDER if key in data})

    def stamp(self) -> "ResultDocument":
        self.timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
        return self
