"""Key-value building description: parsing, validation and printing.

The accepted grammar is the brace-nested ``key: value,`` format::

    building: {
        zones: 1,
        rooms: 5,
        start: 20150101T0000,
        control: 2, // 1 - No Control, 2 - Reactive, 3 - MPC
        room: {
            thermal capacity of room: 2000 kJ/K,
            ...
        },
    }

Keys are case-insensitive and whitespace inside keys is equivalent to an
underscore. Numeric values may carry a trailing unit (``2000 kJ/K``,
``5%``); the unit text is ignored and the documented unit is assumed.
Lists use brackets: ``tsa grid: [12, 14, 16]``. ``//`` starts a comment.
"""

from __future__ import annotations

import enum
import logging
import math
import re
from dataclasses import dataclass, field, fields, replace
from datetime import datetime
from pathlib import Path
from typing import Any

from .errors import (
    ConfigSyntaxError,
    FileUnreadable,
    MalformedTimestamp,
    MissingRequiredKey,
    OutOfRangeValue,
)

log = logging.getLogger(__name__)

TIMESTAMP_FORMAT = "%Y%m%dT%H%M"


class Control(enum.IntEnum):
    NO_CONTROL = 1
    REACTIVE = 2
    MPC = 3


@dataclass(frozen=True)
class AhuParams:
    heating_efficiency: float = 0.9
    cooling_efficiency: float = 0.9


@dataclass(frozen=True)
class RoomParams:
    thermal_capacity: float = 2000.0  # kJ/K
    heat_transfer_coeff_outside: float = 0.048  # kJ/(K s)
    equipment_load: float = 0.1  # kW
    occupant_load: float = 0.1  # kW
    fan_coefficient: float = 0.094
    wall_coeff: float = 0.024  # kJ/(K s), between adjacent rooms


@dataclass(frozen=True)
class AirParams:
    density: float = 1.225  # kg/m3
    specific_heat: float = 1.003  # kJ/(kg K)


@dataclass(frozen=True)
class PmvCoeffs:
    p1: float = 0.2466
    p2: float = 1.4075
    p3: float = 0.581
    p4: float = 5.4468


@dataclass(frozen=True)
class ComfortBand:
    pmv_lower: float = -0.5
    pmv_upper: float = 0.5


@dataclass(frozen=True)
class ErrorParams:
    occupancy: float = 5.0  # percent
    external_temperature: float = 0.0  # percent
    tolerance: float = 1.0  # percentage points


@dataclass(frozen=True)
class FileParams:
    weather: str | None = None
    occupancy: str | None = None
    output: str | None = None


@dataclass(frozen=True)
class MpcParams:
    discomfort_weight: float = 1.0  # kWh per unit discomfort-step
    tsa_grid: tuple[float, ...] = (12.0, 14.0, 16.0, 30.0, 35.0, 40.0)
    airflow_grid: tuple[float, ...] = (0.0, 0.1, 0.25, 0.5, 1.0)


@dataclass(frozen=True)
class ReactiveParams:
    deadband: float = 0.1


@dataclass(frozen=True)
class SimulationConfig:
    start: datetime
    stop: datetime
    zones: int = 1
    rooms: int = 5
    horizon: int = 4  # hours
    time_step: int = 600  # seconds
    control: Control = Control.REACTIVE
    replicates: int = 15
    rng_seed: int = 0
    initial_temperature: float | None = None
    ahu: AhuParams = field(default_factory=AhuParams)
    room: RoomParams = field(default_factory=RoomParams)
    air: AirParams = field(default_factory=AirParams)
    pmv: PmvCoeffs = field(default_factory=PmvCoeffs)
    comfort: ComfortBand = field(default_factory=ComfortBand)
    error: ErrorParams = field(default_factory=ErrorParams)
    files: FileParams = field(default_factory=FileParams)
    mpc: MpcParams = field(default_factory=MpcParams)
    reactive: ReactiveParams = field(default_factory=ReactiveParams)

    @property
    def steps_per_day(self) -> int:
        return 86400 // self.time_step

    @property
    def n_steps(self) -> int:
        return int((self.stop - self.start).total_seconds()) // self.time_step


_SECTIONS = {
    "ahu": AhuParams,
    "room": RoomParams,
    "air": AirParams,
    "pmv": PmvCoeffs,
    "comfort": ComfortBand,
    "error": ErrorParams,
    "files": FileParams,
    "mpc": MpcParams,
    "reactive": ReactiveParams,
}

# Long-form names used in the original input format -> canonical field names.
_ALIASES = {
    "room": {
        "thermal_capacity_of_room": "thermal_capacity",
        "heat_transfer_coefficient_for_outside": "heat_transfer_coeff_outside",
        "heat_transfer_coefficient_outside": "heat_transfer_coeff_outside",
        "heat_load_due_to_equipments": "equipment_load",
        "heat_load_due_to_equipment": "equipment_load",
        "heat_load_due_to_occupants": "occupant_load",
        "coefficient_of_fan": "fan_coefficient",
        "wall_coefficient": "wall_coeff",
    },
    "comfort": {"p_ll": "pmv_lower", "p_ul": "pmv_upper"},
    "mpc": {"lambda": "discomfort_weight"},
    "": {
        "timestep": "time_step",
        "seed": "rng_seed",
        "comfort_band": "comfort",
    },
}

_REQUIRED = ("start", "stop")


# --------------------------------------------------------------------------
# Tokenising parser


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, msg: str) -> ConfigSyntaxError:
        line = self.text.count("\n", 0, self.pos) + 1
        return ConfigSyntaxError(f"line {line}: {msg}")

    def skip(self, commas: bool = False) -> None:
        t = self.text
        while self.pos < len(t):
            c = t[self.pos]
            if c.isspace() or (commas and c == ","):
                self.pos += 1
            elif t.startswith("//", self.pos):
                nl = t.find("\n", self.pos)
                self.pos = len(t) if nl < 0 else nl
            else:
                break

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse_document(self) -> dict[str, Any]:
        pairs = self.parse_pairs(closing="")
        if set(pairs) == {"building"} and isinstance(pairs["building"], dict):
            return pairs["building"]
        return pairs

    def parse_pairs(self, closing: str) -> dict[str, Any]:
        out: dict[str, Any] = {}
        while True:
            self.skip(commas=True)
            c = self.peek()
            if c == closing:
                self.pos += 1 if closing else 0
                return out
            if c == "":
                raise self.error("unexpected end of input, missing '}'")
            if c in "{}[]":
                raise self.error(f"unexpected {c!r}")
            key = self.parse_key()
            self.skip()
            out[key] = self.parse_value()

    def parse_key(self) -> str:
        end = self.text.find(":", self.pos)
        if end < 0:
            raise self.error("expected 'key: value'")
        raw = self.text[self.pos:end]
        if any(c in raw for c in "{}[],\n"):
            raise self.error(f"expected ':' after key {raw.strip()!r}")
        self.pos = end + 1
        return normalize_key(raw)

    def parse_value(self) -> Any:
        c = self.peek()
        if c == "{":
            self.pos += 1
            return self.parse_pairs(closing="}")
        if c == "[":
            self.pos += 1
            items = []
            while True:
                self.skip(commas=True)
                if self.peek() == "]":
                    self.pos += 1
                    return items
                if self.peek() == "":
                    raise self.error("unterminated list")
                items.append(self.parse_scalar(stops=",]\n"))
        return self.parse_scalar(stops=",}\n")

    def parse_scalar(self, stops: str) -> str:
        t = self.text
        if self.peek() in "\"'":
            quote = self.peek()
            end = t.find(quote, self.pos + 1)
            if end < 0:
                raise self.error("unterminated string")
            value = t[self.pos + 1:end]
            self.pos = end + 1
            return value
        start = self.pos
        while self.pos < len(t) and t[self.pos] not in stops and not t.startswith("//", self.pos):
            self.pos += 1
        value = t[start:self.pos].strip()
        if not value:
            raise self.error("empty value")
        return value


def normalize_key(raw: str) -> str:
    return re.sub(r"[^0-9a-z]+", "_", raw.strip().lower()).strip("_")


# --------------------------------------------------------------------------
# Scalar conversion

# number followed by an optional unit that does not start with a digit or sign
_NUMBER = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(?:\s*[^\d\s.+-].*)?$")


def _to_float(key: str, raw: Any) -> float:
    if isinstance(raw, (int, float)):
        return float(raw)
    if not isinstance(raw, str):
        raise OutOfRangeValue(key, "a number")
    m = _NUMBER.match(raw)
    if not m:
        raise OutOfRangeValue(key, "a number")
    return float(m.group(1))


def _to_int(key: str, raw: Any) -> int:
    if isinstance(raw, int):
        return raw
    if isinstance(raw, str):
        m = _NUMBER.match(raw)
        # plain digit strings parse exactly; seeds can exceed float precision
        if m and re.fullmatch(r"[+-]?\d+", m.group(1)):
            return int(m.group(1))
    value = _to_float(key, raw)
    if not math.isfinite(value) or value != int(value):
        raise OutOfRangeValue(key, "an integer")
    return int(value)


def parse_timestamp(text: str) -> datetime:
    try:
        return datetime.strptime(text.strip(), TIMESTAMP_FORMAT)
    except ValueError:
        raise MalformedTimestamp(text) from None


def format_timestamp(ts: datetime) -> str:
    return ts.strftime(TIMESTAMP_FORMAT)


def _to_control(raw: Any) -> Control:
    if isinstance(raw, str):
        name = normalize_key(raw)
        named = {"no_control": 1, "none": 1, "reactive": 2, "mpc": 3}
        if name in named:
            return Control(named[name])
    code = _to_int("control", raw)
    if code not in (1, 2, 3):
        raise OutOfRangeValue("control", "one of 1 (No Control), 2 (Reactive), 3 (MPC)")
    return Control(code)


def _convert(section: str, name: str, annotation: str, raw: Any) -> Any:
    key = f"{section}.{name}" if section else name
    if annotation.startswith("tuple"):
        if not isinstance(raw, list):
            raw = [raw]
        return tuple(_to_float(key, v) for v in raw)
    if annotation.startswith("str"):
        if isinstance(raw, (dict, list)):
            raise OutOfRangeValue(key, "a string")
        return str(raw)
    if isinstance(raw, (dict, list)):
        raise OutOfRangeValue(key, "a scalar")
    if annotation == "datetime":
        return parse_timestamp(raw)
    if annotation == "Control":
        return _to_control(raw)
    if annotation == "int":
        return _to_int(key, raw)
    return _to_float(key, raw)


def _build_section(section: str, cls, raw: Any):
    if not isinstance(raw, dict):
        raise OutOfRangeValue(section, "a { ... } block")
    aliases = _ALIASES.get(section, {})
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        name = aliases.get(key, key)
        if name not in known:
            log.warning("ignoring unknown key %s.%s", section, key)
            continue
        kwargs[name] = _convert(section, name, str(known[name].type), value)
    return cls(**kwargs)


def config_from_mapping(raw: dict[str, Any]) -> SimulationConfig:
    """Build and validate a config from a parsed (normalized-key) mapping."""
    aliases = _ALIASES[""]
    raw = {aliases.get(k, k): v for k, v in raw.items()}
    for key in _REQUIRED:
        if key not in raw:
            raise MissingRequiredKey(key)
    top = {f.name: f for f in fields(SimulationConfig)}
    kwargs: dict[str, Any] = {}
    for key, value in raw.items():
        if key in _SECTIONS:
            kwargs[key] = _build_section(key, _SECTIONS[key], value)
        elif key in top:
            ann = str(top[key].type)
            if ann.startswith("float | None"):
                ann = "float"
            kwargs[key] = _convert("", key, ann, value)
        else:
            log.warning("ignoring unknown key %s", key)
    config = SimulationConfig(**kwargs)
    validate(config)
    return config


def parse_config(text: str) -> SimulationConfig:
    """Parse config text into a validated :class:`SimulationConfig`."""
    return config_from_mapping(_Parser(text).parse_document())


def load_config(path) -> SimulationConfig:
    """Read a config file; relative data-file paths are taken relative to it."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FileUnreadable(path, exc.strerror or str(exc)) from None
    cfg = parse_config(text)
    base = Path(path).parent

    def resolve(name):
        if name is None or Path(name).is_absolute():
            return name
        return str(base / name)

    f = cfg.files
    return replace(cfg, files=FileParams(resolve(f.weather), resolve(f.occupancy), resolve(f.output)))


def validate(cfg: SimulationConfig) -> None:
    def check(ok: bool, key: str, bound: str) -> None:
        if not ok:
            raise OutOfRangeValue(key, bound)

    check(cfg.start < cfg.stop, "stop", "start < stop")
    check(cfg.time_step > 0, "time_step", "time_step > 0")
    check(86400 % cfg.time_step == 0, "time_step", "86400 mod time_step = 0")
    check(int((cfg.stop - cfg.start).total_seconds()) % cfg.time_step == 0,
          "stop", "stop - start a multiple of time_step")
    check(cfg.zones >= 1, "zones", "zones >= 1")
    check(cfg.zones == 1, "zones", "zones = 1 (single-zone engine)")
    check(cfg.rooms >= 1, "rooms", "rooms >= 1")
    check(cfg.horizon >= 1, "horizon", "horizon >= 1")
    check(cfg.replicates >= 1, "replicates", "replicates >= 1")
    for name in ("heating_efficiency", "cooling_efficiency"):
        v = getattr(cfg.ahu, name)
        check(0 < v <= 1, f"ahu.{name}", "0 < value <= 1")
    for name in ("thermal_capacity", "heat_transfer_coeff_outside"):
        check(getattr(cfg.room, name) > 0, f"room.{name}", "value > 0")
    for name in ("equipment_load", "occupant_load", "fan_coefficient", "wall_coeff"):
        check(getattr(cfg.room, name) >= 0, f"room.{name}", "value >= 0")
    check(cfg.air.density > 0, "air.density", "value > 0")
    check(cfg.air.specific_heat > 0, "air.specific_heat", "value > 0")
    check(cfg.comfort.pmv_lower < cfg.comfort.pmv_upper, "comfort.pmv_upper", "pmv_lower < pmv_upper")
    check(0 <= cfg.error.occupancy <= 100, "error.occupancy", "0 <= value <= 100")
    check(0 <= cfg.error.external_temperature <= 100, "error.external_temperature", "0 <= value <= 100")
    check(cfg.error.tolerance >= 0, "error.tolerance", "value >= 0")
    for name in ("tsa_grid", "airflow_grid"):
        grid = getattr(cfg.mpc, name)
        check(len(grid) > 0, f"mpc.{name}", "nonempty")
        check(list(grid) == sorted(grid), f"mpc.{name}", "sorted ascending")
    check(min(cfg.mpc.airflow_grid) >= 0, "mpc.airflow_grid", "values >= 0")
    check(cfg.mpc.discomfort_weight >= 0, "mpc.discomfort_weight", "value >= 0")
    check(cfg.reactive.deadband >= 0, "reactive.deadband", "value >= 0")


# --------------------------------------------------------------------------
# Printing


def _format_value(value: Any) -> str:
    if isinstance(value, datetime):
        return format_timestamp(value)
    if isinstance(value, Control):
        return str(int(value))
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, tuple):
        return "[" + ", ".join(repr(v) for v in value) + "]"
    text = str(value)
    if re.search(r"[,{}\[\]\n:\"]|//", text) or text != text.strip():
        return "'" + text + "'"
    return text


def format_config(cfg: SimulationConfig) -> str:
    """Render a config in the canonical key-value form accepted by :func:`parse_config`."""
    lines = ["building: {"]
    entries: list[str] = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if value is None:
            continue
        if f.name in _SECTIONS:
            inner = [
                f"        {g.name}: {_format_value(getattr(value, g.name))}"
                for g in fields(value)
                if getattr(value, g.name) is not None
            ]
            if not inner:
                continue
            entries.append(f"    {f.name}: {{\n" + ",\n".join(inner) + "\n    }")
        else:
            entries.append(f"    {f.name}: {_format_value(value)}")
    lines.append(",\n".join(entries))
    lines.append("}")
    return "\n".join(lines) + "\n"


def with_overrides(cfg: SimulationConfig, **changes) -> SimulationConfig:
    """``dataclasses.replace`` followed by validation."""
    out = replace(cfg, **changes)
    validate(out)
    return out
