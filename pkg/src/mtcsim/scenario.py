"""Scenario files: schema, parsing, validation and canonical serialization.

A scenario is a JSON document. Channels are written 1-based as ``"CH1"``
(plain 1-based integers are accepted too) and translated to 0-based indices
on load. A DIRECT interference matrix lists its rows and columns in
ascending GAA id order. See ``README.md`` for a field-by-field description.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

import jsonschema

from .engine import Event, EventKind
from .interference import InterferenceMatrix, PropagationMode, PropagationModel, build_interference_matrix
from .model import Cbsd, ChannelPool, ConfigError, FeasibilityMode, Tier, channel_label

SCHEMA_VERSION = 1

_channel = {"anyOf": [{"type": "string", "pattern": r"^CH[1-9][0-9]*$"},
                      {"type": "integer", "minimum": 1}]}
_channels = {"type": "array", "items": _channel, "uniqueItems": True}
_count = {"type": "integer", "minimum": 0}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "name", "channels", "gamma", "propagation", "cbsds", "horizon"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string", "minLength": 1},
        "channels": {
            "type": "object",
            "additionalProperties": False,
            "required": ["total", "pal_set", "gaa_set"],
            "properties": {
                "total": {"type": "integer", "minimum": 1},
                "pal_set": _channels,
                "gaa_set": _channels,
                "available": _channels,
            },
        },
        "gamma": {"type": "number"},
        "feasibility_mode": {"enum": [m.value for m in FeasibilityMode]},
        "propagation": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["mode", "r"],
                    "properties": {
                        "mode": {"const": "direct"},
                        "r": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["mode", "tx_power", "alpha", "min_distance"],
                    "properties": {
                        "mode": {"const": "power_law"},
                        "tx_power": {"type": "number"},
                        "alpha": {"type": "number"},
                        "min_distance": {"type": "number"},
                    },
                },
            ]
        },
        "cbsds": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["id", "tier", "demand"],
                "properties": {
                    "id": {"type": "integer"},
                    "name": {"type": "string"},
                    "tier": {"enum": ["PAL", "GAA"]},
                    "position": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                    "arrival": _count,
                    "departure": {"type": ["integer", "null"], "minimum": 1},
                    "demand": {
                        "anyOf": [
                            _count,
                            {
                                "type": "object",
                                "patternProperties": {"^(0|[1-9][0-9]*)$": _count},
                                "additionalProperties": False,
                                "minProperties": 1,
                            },
                        ]
                    },
                },
            },
        },
        "events": {
            "type": "array",
            "items": {
                "oneOf": [
                    {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["slot", "kind", "channels"],
                        "properties": {"slot": _count, "kind": {"const": "availability"}, "channels": _channels},
                    },
                    {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["slot", "kind", "cbsd", "demand"],
                        "properties": {"slot": _count, "kind": {"const": "demand"},
                                       "cbsd": {"type": "integer"}, "demand": _count},
                    },
                ]
            },
        },
        "churn": {
            "type": "object",
            "additionalProperties": False,
            "required": ["start", "flip_probability"],
            "properties": {
                "start": _count,
                "flip_probability": {"type": "number", "minimum": 0, "maximum": 1},
            },
        },
        "horizon": {"type": "integer", "minimum": 1},
        "seed": _count,
    },
}


class ScenarioError(ConfigError):
    """Invalid scenario file; ``where`` names the offending line or field."""

    def __init__(self, where: str, message: str):
        self.where = where
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class Churn:
    """Random availability churn: from ``start`` on, every channel's
    availability flips independently with ``flip_probability`` each slot."""

    start: int
    flip_probability: float


@dataclass(frozen=True)
class Scenario:
    name: str
    pool: ChannelPool
    gamma: float
    propagation: PropagationModel
    cbsds: tuple
    horizon: int
    initial_available: frozenset = None
    direct_r: Optional[tuple] = None
    feasibility_mode: FeasibilityMode = FeasibilityMode.PAPER_LITERAL
    events: tuple = ()
    churn: Optional[Churn] = None
    seed: int = 0
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.initial_available is None:
            object.__setattr__(self, "initial_available", frozenset(range(self.pool.total)))

    @property
    def gaas(self) -> list:
        return sorted((c for c in self.cbsds if c.tier is Tier.GAA), key=lambda c: c.id)

    def cbsd(self, k: int) -> Cbsd:
        for c in self.cbsds:
            if c.id == k:
                return c
        raise KeyError(k)

    def interference_matrix(self) -> InterferenceMatrix:
        if "r" not in self._cache:
            gaas = self.gaas
            if self.propagation.mode is PropagationMode.DIRECT:
                r = InterferenceMatrix([g.id for g in gaas], self.direct_r or [], self.gamma)
            else:
                r = build_interference_matrix(gaas, self.propagation, self.gamma)
            self._cache["r"] = r
        return self._cache["r"]

    def with_overrides(self, **changes) -> "Scenario":
        return replace(self, _cache={}, **changes)


def _parse_channel(value, total: int, where: str) -> int:
    s = int(value[2:]) if isinstance(value, str) else int(value)
    if not 1 <= s <= total:
        raise ScenarioError(where, f"channel {value!r} outside CH1..CH{total}")
    return s - 1


def _parse_channels(values, total: int, where: str) -> frozenset:
    return frozenset(_parse_channel(v, total, f"{where}[{i}]") for i, v in enumerate(values))


def _path(error: jsonschema.ValidationError) -> str:
    out = "scenario"
    for part in error.absolute_path:
        out += f"[{part}]" if isinstance(part, int) else f".{part}"
    return out


def scenario_from_dict(doc: dict) -> Scenario:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        if err.context:
            err = min(err.context, key=lambda e: -len(e.absolute_path))
        raise ScenarioError(_path(err), err.message)

    ch = doc["channels"]
    total = ch["total"]
    pool = ChannelPool(total, _parse_channels(ch["pal_set"], total, "channels.pal_set"),
                       _parse_channels(ch["gaa_set"], total, "channels.gaa_set"))
    available = (_parse_channels(ch["available"], total, "channels.available")
                 if "available" in ch else frozenset(range(total)))

    gamma = float(doc["gamma"])
    if gamma < 0:
        raise ScenarioError("gamma", f"must be non-negative, got {doc['gamma']}")

    prop = doc["propagation"]
    try:
        if prop["mode"] == "direct":
            model = PropagationModel(PropagationMode.DIRECT)
        else:
            model = PropagationModel(PropagationMode.POWER_LAW, float(prop["tx_power"]),
                                     float(prop["alpha"]), float(prop["min_distance"]))
    except ConfigError as exc:
        raise ScenarioError("propagation", str(exc)) from None

    cbsds = []
    seen = set()
    for i, item in enumerate(doc["cbsds"]):
        where = f"cbsds[{i}]"
        if item["id"] in seen:
            raise ScenarioError(f"{where}.id", f"duplicate CBSD id {item['id']}")
        seen.add(item["id"])
        demand = item["demand"]
        if isinstance(demand, dict):
            demand = {int(k): v for k, v in demand.items()}
        try:
            cbsds.append(Cbsd(id=item["id"], tier=Tier(item["tier"]), demand=demand,
                              position=item.get("position"), arrival=item.get("arrival", 0),
                              departure=item.get("departure"), name=item.get("name")))
        except ConfigError as exc:
            raise ScenarioError(where, str(exc)) from None
    by_id = {c.id: c for c in cbsds}

    horizon = doc["horizon"]
    events = []
    for i, item in enumerate(doc.get("events", [])):
        where = f"events[{i}]"
        if item["kind"] == "availability":
            chans = _parse_channels(item["channels"], total, f"{where}.channels")
            events.append(Event(item["slot"], EventKind.AVAILABILITY_SET, chans))
        else:
            target = by_id.get(item["cbsd"])
            if target is None:
                raise ScenarioError(f"{where}.cbsd", f"unknown CBSD id {item['cbsd']}")
            if not target.active_at(item["slot"]):
                raise ScenarioError(f"{where}.slot", f"CBSD {item['cbsd']} is not active at slot {item['slot']}")
            events.append(Event(item["slot"], EventKind.DEMAND_SET, (item["cbsd"], item["demand"])))

    direct_r = None
    if model.mode is PropagationMode.DIRECT:
        direct_r = tuple(tuple(float(x) for x in row) for row in prop["r"])
        n = len([c for c in cbsds if c.tier is Tier.GAA])
        if len(direct_r) != n or any(len(row) != n for row in direct_r):
            raise ScenarioError("propagation.r", f"expected a {n}x{n} matrix (one row per GAA)")
    else:
        missing = [i for i, c in enumerate(cbsds) if c.tier is Tier.GAA and c.position is None]
        if missing:
            raise ScenarioError(f"cbsds[{missing[0]}].position", "power-law propagation needs GAA positions")

    churn = Churn(**doc["churn"]) if "churn" in doc else None
    scenario = Scenario(
        name=doc["name"], pool=pool, gamma=gamma, propagation=model,
        cbsds=tuple(sorted(cbsds, key=lambda c: c.id)), horizon=horizon,
        initial_available=available, direct_r=direct_r,
        feasibility_mode=FeasibilityMode(doc.get("feasibility_mode", "literal")),
        events=tuple(events), churn=churn, seed=doc.get("seed", 0))
    try:
        scenario.interference_matrix()
    except ConfigError as exc:
        raise ScenarioError("propagation.r", str(exc)) from None
    return scenario


def _line_of(text: str, pos: int) -> int:
    return text.count("\n", 0, pos) + 1


def parse_scenario_text(text: str, source: str = "<scenario>") -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{source}:{exc.lineno}", exc.msg) from None
    try:
        return scenario_from_dict(doc)
    except ScenarioError as exc:
        line = _locate(text, exc.where)
        where = f"{source}:{line}: {exc.where}" if line else f"{source}: {exc.where}"
        raise ScenarioError(where, str(exc).split(": ", 1)[1]) from None


def _locate(text: str, where: str) -> Optional[int]:
    # best effort: line of the last named key in the field path
    keys = re.findall(r"\.?([A-Za-z_]+)", where.replace("scenario", "", 1))
    if not keys:
        return None
    m = re.search(rf'"{re.escape(keys[-1])}"\s*:', text)
    return _line_of(text, m.start()) if m else None


def bundled_scenarios() -> list:
    root = resources.files("mtcsim") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def parse_scenario(path) -> Scenario:
    """Load a scenario from a file path or the name of a bundled scenario."""
    p = Path(path)
    if not p.exists() and str(path) in bundled_scenarios():
        text = (resources.files("mtcsim") / "scenarios" / f"{path}.json").read_text()
        return parse_scenario_text(text, f"{path}.json")
    try:
        text = p.read_text()
    except FileNotFoundError:
        raise ScenarioError(str(path), "no such scenario file or bundled scenario") from None
    return parse_scenario_text(text, str(path))


def scenario_to_dict(sc: Scenario) -> dict:
    def labels(chans):
        return [channel_label(s) for s in sorted(chans)]

    doc = {
        "schema_version": SCHEMA_VERSION,
        "name": sc.name,
        "channels": {
            "total": sc.pool.total,
            "pal_set": labels(sc.pool.pal_set),
            "gaa_set": labels(sc.pool.gaa_set),
            "available": labels(sc.initial_available),
        },
        "gamma": sc.gamma,
        "feasibility_mode": sc.feasibility_mode.value,
    }
    if sc.propagation.mode is PropagationMode.DIRECT:
        doc["propagation"] = {"mode": "direct", "r": [list(row) for row in sc.direct_r or ()]}
    else:
        m = sc.propagation
        doc["propagation"] = {"mode": "power_law", "tx_power": m.tx_power, "alpha": m.alpha,
                              "min_distance": m.min_distance}
    cbsds = []
    for c in sc.cbsds:
        item = {"id": c.id}
        if c.name is not None:
            item["name"] = c.name
        item["tier"] = c.tier.value
        if c.position is not None:
            item["position"] = list(c.position)
        item["arrival"] = c.arrival
        if c.departure is not None:
            item["departure"] = c.departure
        item["demand"] = ({str(k): v for k, v in c.demand.items()} if isinstance(c.demand, dict)
                          else c.demand)
        cbsds.append(item)
    doc["cbsds"] = cbsds
    events = []
    for e in sc.events:
        if e.kind is EventKind.AVAILABILITY_SET:
            events.append({"slot": e.slot, "kind": "availability", "channels": labels(e.payload)})
        else:
            events.append({"slot": e.slot, "kind": "demand", "cbsd": e.payload[0], "demand": e.payload[1]})
    doc["events"] = events
    if sc.churn is not None:
        doc["churn"] = {"start": sc.churn.start, "flip_probability": sc.churn.flip_probability}
    doc["horizon"] = sc.horizon
    doc["seed"] = sc.seed
    return doc


def dump_scenario(sc: Scenario) -> str:
    """Canonical text form; parsing it back yields an equal scenario."""
    return json.dumps(scenario_to_dict(sc), indent=2) + "\n"


def scenario_hash(sc: Scenario) -> str:
    return hashlib.sha256(dump_scenario(sc).encode()).hexdigest()
