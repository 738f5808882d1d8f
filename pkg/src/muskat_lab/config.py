"""Scenario configuration: a key = value document with one ``[scenario]`` section."""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from typing import Optional, Tuple

from .errors import ValidationError

PRESET_NAMES = ("stable", "backward", "turnover", "custom", "flat")
SECTION = "scenario"


class ConfigError(ValidationError):
    """Validation failure naming the offending field."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class ScenarioConfig:
    """Physical and numerical parameters of one run.

    Attributes
    ----------
    preset : str
        One of ``stable``, ``backward``, ``turnover``, ``flat`` or ``custom``
        (the latter reads ``curve_path``).
    n : int
        Grid size, a power of two in [64, 4096].
    eps_sweep : tuple of float
        Regularization scales used by the verification suites.
    """

    preset: str = "stable"
    n: int = 512
    dt_override: Optional[float] = None
    t_end: float = 0.1
    rho_bar: float = 1.0
    delta: float = 0.5
    delta_c: float = 0.05
    eps: float = 1e-2
    m: int = 2
    gamma_nodes: int = 9
    output_every: int = 10
    out_dir: str = "out"
    seed: int = 0
    dealias: bool = False
    cfl_safety: float = 0.1
    curve_path: Optional[str] = None
    eps_sweep: Tuple[float, ...] = field(default=(1e-1, 1e-2, 1e-3, 1e-4))
    extend_t: float = 1.0

    def __post_init__(self):
        if self.preset not in PRESET_NAMES:
            raise ConfigError("preset", f"must be one of {', '.join(PRESET_NAMES)}")
        if self.n < 64 or self.n > 4096 or self.n & (self.n - 1):
            raise ConfigError("n", f"must be a power of two in [64, 4096], got {self.n}")
        for name in ("t_end", "rho_bar", "delta", "delta_c", "eps", "cfl_safety", "extend_t"):
            if not getattr(self, name) > 0:
                raise ConfigError(name, "must be positive")
        if self.dt_override is not None and not self.dt_override > 0:
            raise ConfigError("dt_override", "must be positive")
        if self.eps > 1:
            raise ConfigError("eps", "must not exceed 1")
        if self.cfl_safety > 1:
            raise ConfigError("cfl_safety", "must not exceed 1")
        if not 1 <= self.m <= 12:
            raise ConfigError("m", "must lie in [1, 12]")
        if self.gamma_nodes < 5 or self.gamma_nodes % 2 == 0:
            raise ConfigError("gamma_nodes", "must be odd and at least 5")
        if self.output_every < 1:
            raise ConfigError("output_every", "must be at least 1")
        if not self.eps_sweep or any(not 0 < e <= 1 for e in self.eps_sweep):
            raise ConfigError("eps_sweep", "must be a nonempty list of scales in (0, 1]")
        if self.preset == "custom" and not self.curve_path:
            raise ConfigError("curve_path", "required for the custom preset")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["eps_sweep"] = list(self.eps_sweep)
        return d

    def to_text(self) -> str:
        """Canonical document that :func:`parse_config` reads back to an equal config."""
        lines = [f"[{SECTION}]"]
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, tuple):
                v = ", ".join(repr(float(x)) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            elif isinstance(v, bool):
                v = "on" if v else "off"
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    def content_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}


def _convert(name: str, raw: str):
    raw = raw.strip()
    kind = _TYPES[name]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "Optional[float]":
            return None if raw.lower() in ("", "none") else float(raw)
        if kind == "Optional[str]":
            return None if raw.lower() in ("", "none") else raw
        if kind == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind.startswith("Tuple"):
            return tuple(float(x) for x in raw.replace(";", ",").split(",") if x.strip())
    except ValueError:
        raise ConfigError(name, f"cannot parse {raw!r} as {kind}") from None
    return raw


def parse_config(text: str = "", **overrides) -> ScenarioConfig:
    """Validated config from a ``key = value`` document plus keyword overrides.

    The ``[scenario]`` header may be omitted.  Unknown keys are rejected.
    Overrides whose value is ``None`` are ignored.
    """
    parser = configparser.ConfigParser(interpolation=None)
    body = text if text.lstrip().startswith("[") else f"[{SECTION}]\n{text}"
    try:
        parser.read_string(body)
    except configparser.Error as exc:
        raise ConfigError("document", str(exc).splitlines()[0]) from None
    values = {}
    for section in parser.sections():
        if section != SECTION:
            raise ConfigError(section, "unknown section")
        for key, raw in parser[section].items():
            if key not in _TYPES:
                raise ConfigError(key, "unknown key")
            values[key] = _convert(key, raw)
    for key, v in overrides.items():
        if v is None:
            continue
        if key not in _TYPES:
            raise ConfigError(key, "unknown key")
        values[key] = v
    return ScenarioConfig(**values)
