"""Domain types for fault test cases and functional safety requirements.

Everything here is an immutable value object, safe to copy or share
between threads. Invalidity of a candidate test case is a *return value*
(ValidationResult), not an exception: validation accepts arbitrary input
and reports every violated rule.

A LocationMap is deliberately a thin ordered mapping that can hold
out-of-contract keys and values, so that validation has something to
inspect. Maps produced by :func:`parse_location_map` always satisfy the
contract (catalog key set, catalog order, values in {0, 1}).
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Union

from .errors import FormatError

# At most two fault locations may be active in a single test case
# (single or concurrent two-point injection).
MAX_CONCURRENT_LOCATIONS = 2


class ComponentClass(enum.Enum):
    """Two-way split of bus components: signal sources vs. command sinks."""

    SENSOR = "sensor"
    ACTUATOR = "actuator"

    @property
    def label(self) -> str:
        """Lowercase label used in prompts and dataset files."""
        return self.value

    @classmethod
    def from_label(cls, label: str) -> "ComponentClass":
        try:
            return cls(label.strip().lower())
        except ValueError:
            raise FormatError(f"unknown component class: {label!r}") from None


class FaultType(enum.Enum):
    GAIN = "gain"
    OFFSET = "offset"
    STUCK_AT = "stuck_at"
    DELAY = "delay"
    NOISE = "noise"
    PACKET_LOSS = "packet_loss"
    DRIFT = "drift"
    SPIKE = "spike"

    def applicable_to(self, kind: ComponentClass) -> bool:
        """Sensors accept all eight fault types, actuators only the
        subset that makes sense for a command channel."""
        if kind is ComponentClass.SENSOR:
            return True
        return self in ACTUATOR_FAULTS


SENSOR_FAULTS = frozenset(FaultType)
ACTUATOR_FAULTS = frozenset({FaultType.STUCK_AT, FaultType.DELAY, FaultType.PACKET_LOSS})


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    kind: ComponentClass
    description: str
    unit: str = ""


@dataclass(frozen=True)
class ComponentCatalog:
    """Ordered list of injectable components.

    The order is load-bearing: it defines the listing order in prompts
    and the key order of every LocationMap.
    """

    entries: tuple[CatalogEntry, ...]

    def __post_init__(self):
        ids = [e.id for e in self.entries]
        if any(not i for i in ids):
            raise ValueError("catalog ids must be non-empty")
        if len(set(ids)) != len(ids):
            raise ValueError("catalog ids must be unique")

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[CatalogEntry]:
        return iter(self.entries)

    def __contains__(self, component_id: str) -> bool:
        return any(e.id == component_id for e in self.entries)

    def get(self, component_id: str) -> CatalogEntry:
        for e in self.entries:
            if e.id == component_id:
                return e
        raise KeyError(component_id)

    def kind_of(self, component_id: str) -> ComponentClass:
        return self.get(component_id).kind

    def only(self, kind: ComponentClass) -> "ComponentCatalog":
        return ComponentCatalog(tuple(e for e in self.entries if e.kind is kind))

    def drop(self, ids: Iterable[str]) -> "ComponentCatalog":
        """Reduced catalog without the given component ids (order kept)."""
        dropped = set(ids)
        unknown = dropped - set(self.ids)
        if unknown:
            raise KeyError(f"cannot drop unknown components: {sorted(unknown)}")
        return ComponentCatalog(tuple(e for e in self.entries if e.id not in dropped))

    def to_json_obj(self) -> dict:
        return {
            "schema_version": 1,
            "components": [
                {"id": e.id, "kind": e.kind.label, "description": e.description, "unit": e.unit}
                for e in self.entries
            ],
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "ComponentCatalog":
        if not isinstance(obj, Mapping) or "components" not in obj:
            raise FormatError("catalog file must be an object with a 'components' list")
        entries = []
        for item in obj["components"]:
            entries.append(
                CatalogEntry(
                    id=str(item["id"]),
                    kind=ComponentClass.from_label(item["kind"]),
                    description=str(item.get("description", "")),
                    unit=str(item.get("unit", "")),
                )
            )
        return cls(tuple(entries))

    @classmethod
    def load(cls, path) -> "ComponentCatalog":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"catalog file {path} is not valid JSON: {exc}") from None
        try:
            return cls.from_json_obj(obj)
        except (KeyError, ValueError) as exc:
            raise FormatError(f"catalog file {path}: {exc}") from None


@dataclass(frozen=True)
class FunctionalSafetyRequirement:
    """One natural-language safety requirement, optionally gold-labeled."""

    id: str
    text: str
    gold_class: Optional[ComponentClass] = None
    gold_locations: Optional[frozenset[str]] = None

    def __post_init__(self):
        if not self.text:
            raise ValueError(f"FSR {self.id}: text must be non-empty")
        if self.gold_locations is not None and not 1 <= len(self.gold_locations) <= 2:
            raise ValueError(f"FSR {self.id}: gold_locations must have size 1 or 2")

    def to_json_obj(self) -> dict:
        obj: dict = {"id": self.id, "text": self.text}
        if self.gold_class is not None:
            obj["gold_class"] = self.gold_class.label
        if self.gold_locations is not None:
            obj["gold_locations"] = sorted(self.gold_locations)
        return obj

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "FunctionalSafetyRequirement":
        gold_class = obj.get("gold_class")
        gold_locations = obj.get("gold_locations")
        return cls(
            id=str(obj["id"]),
            text=str(obj["text"]),
            gold_class=ComponentClass.from_label(gold_class) if gold_class else None,
            gold_locations=frozenset(gold_locations) if gold_locations is not None else None,
        )


FSR = FunctionalSafetyRequirement


@dataclass(frozen=True)
class LocationMap:
    """Ordered component-id -> {0,1} mapping.

    ``pairs`` preserves insertion order. The construction itself does not
    check keys or value domain (validation needs to see bad maps); use
    :func:`parse_location_map` to get a contract-checked map.
    """

    pairs: tuple[tuple[str, int], ...]

    @classmethod
    def from_items(cls, items: Iterable[tuple[str, int]]) -> "LocationMap":
        return cls(tuple((str(k), v) for k, v in items))

    @classmethod
    def zeros(cls, catalog: ComponentCatalog) -> "LocationMap":
        return cls(tuple((i, 0) for i in catalog.ids))

    @classmethod
    def select(cls, catalog: ComponentCatalog, active: Iterable[str]) -> "LocationMap":
        active = set(active)
        unknown = active - set(catalog.ids)
        if unknown:
            raise KeyError(f"not in catalog: {sorted(unknown)}")
        return cls(tuple((i, 1 if i in active else 0) for i in catalog.ids))

    @property
    def keys(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.pairs)

    @property
    def active(self) -> tuple[str, ...]:
        return tuple(k for k, v in self.pairs if v == 1)

    @property
    def total(self) -> int:
        return sum(v for _, v in self.pairs)

    def value(self, key: str) -> int:
        for k, v in self.pairs:
            if k == key:
                return v
        raise KeyError(key)

    def to_json_obj(self) -> dict:
        return {k: v for k, v in self.pairs}

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())


def location_map_from_obj(obj, catalog: ComponentCatalog) -> LocationMap:
    """Build a contract-checked LocationMap from a parsed JSON value.

    The object must carry exactly the catalog's keys with values 0 or 1.
    The returned map is re-ordered to catalog order.
    """
    if not isinstance(obj, Mapping):
        raise FormatError(f"location map must be a JSON object, got {type(obj).__name__}")
    keys = set(obj.keys())
    catalog_keys = set(catalog.ids)
    unknown = keys - catalog_keys
    if unknown:
        raise FormatError(f"unknown keys: {sorted(unknown)}")
    missing = catalog_keys - keys
    if missing:
        raise FormatError(f"missing keys: {sorted(missing)}")
    for k in catalog.ids:
        v = obj[k]
        if isinstance(v, bool) or not isinstance(v, int) or v not in (0, 1):
            raise FormatError(f"value for {k!r} must be 0 or 1, got {v!r}")
    return LocationMap(tuple((k, int(obj[k])) for k in catalog.ids))


def parse_location_map(json_text: str, catalog: ComponentCatalog) -> LocationMap:
    """Parse an LLM answer into a LocationMap, strictly.

    Raises FormatError on any structural violation (not JSON, not an
    object, wrong key set, values outside {0, 1}); the caller decides
    whether to retry the request or score the answer as wrong.
    """
    try:
        obj = json.loads(json_text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"not valid JSON: {exc}") from None
    return location_map_from_obj(obj, catalog)


# --- fault parameters -------------------------------------------------------

_PARAM_FIELDS: dict[FaultType, tuple[str, ...]] = {}


@dataclass(frozen=True)
class GainParams:
    gain: float


@dataclass(frozen=True)
class OffsetParams:
    offset: float


@dataclass(frozen=True)
class StuckAtParams:
    value: float


@dataclass(frozen=True)
class DelayParams:
    tau_s: float

    def __post_init__(self):
        if self.tau_s < 0:
            raise ValueError("tau_s must be >= 0")


@dataclass(frozen=True)
class NoiseParams:
    sigma: float
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")


class DropPolicy(enum.Enum):
    """What a consumer sees for a lost sample: the literal zero branch of
    the packet-loss model, or the stale last-delivered value."""

    ZERO = "zero"
    HOLD_LAST = "hold_last"


@dataclass(frozen=True)
class PacketLossParams:
    delivery_prob: float
    seed: int = 0
    drop_policy: DropPolicy = DropPolicy.ZERO

    def __post_init__(self):
        if not 0.0 <= self.delivery_prob <= 1.0:
            raise ValueError("delivery_prob must be in [0, 1]")


@dataclass(frozen=True)
class DriftParams:
    slope_per_s: float


@dataclass(frozen=True)
class SpikeParams:
    amplitude: float
    prob: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.prob <= 1.0:
            raise ValueError("prob must be in [0, 1]")


FaultParams = Union[
    GainParams,
    OffsetParams,
    StuckAtParams,
    DelayParams,
    NoiseParams,
    PacketLossParams,
    DriftParams,
    SpikeParams,
]

_PARAMS_BY_TYPE = {
    FaultType.GAIN: (GainParams, ("gain",)),
    FaultType.OFFSET: (OffsetParams, ("offset",)),
    FaultType.STUCK_AT: (StuckAtParams, ("value",)),
    FaultType.DELAY: (DelayParams, ("tau_s",)),
    FaultType.NOISE: (NoiseParams, ("sigma", "seed")),
    FaultType.PACKET_LOSS: (PacketLossParams, ("delivery_prob", "seed", "drop_policy")),
    FaultType.DRIFT: (DriftParams, ("slope_per_s",)),
    FaultType.SPIKE: (SpikeParams, ("amplitude", "prob", "seed")),
}

_TYPE_BY_PARAMS = {cls: ft for ft, (cls, _) in _PARAMS_BY_TYPE.items()}


def fault_type_of(params: FaultParams) -> FaultType:
    return _TYPE_BY_PARAMS[type(params)]


def params_to_json_obj(params: FaultParams) -> dict:
    ft = fault_type_of(params)
    obj: dict = {"type": ft.value}
    _, fields = _PARAMS_BY_TYPE[ft]
    for name in fields:
        v = getattr(params, name)
        obj[name] = v.value if isinstance(v, DropPolicy) else v
    return obj


def params_from_json_obj(obj: Mapping) -> FaultParams:
    """Parse the embedded fault parameter object; unknown keys rejected."""
    if not isinstance(obj, Mapping) or "type" not in obj:
        raise FormatError("fault params must be an object with a 'type' key")
    try:
        ft = FaultType(obj["type"])
    except ValueError:
        raise FormatError(f"unknown fault type: {obj['type']!r}") from None
    cls, fields = _PARAMS_BY_TYPE[ft]
    extra = set(obj.keys()) - set(fields) - {"type"}
    if extra:
        raise FormatError(f"unknown keys for {ft.value} params: {sorted(extra)}")
    kwargs = {}
    for name in fields:
        if name in obj:
            v = obj[name]
            if name == "drop_policy":
                try:
                    v = DropPolicy(v)
                except ValueError:
                    raise FormatError(f"unknown drop_policy: {v!r}") from None
            kwargs[name] = v
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad {ft.value} params: {exc}") from None


# --- test cases -------------------------------------------------------------


@dataclass(frozen=True)
class InjectionWindow:
    """Half-open activity interval [t_start, t_end) in seconds."""

    t_start: float
    t_end: float

    def __post_init__(self):
        if not (0 <= self.t_start < self.t_end):
            raise ValueError(f"window requires 0 <= t_start < t_end, got [{self.t_start}, {self.t_end})")

    def contains(self, t: float) -> bool:
        return self.t_start <= t < self.t_end

    def overlaps(self, other: "InjectionWindow") -> bool:
        return self.t_start < other.t_end and other.t_start < self.t_end

    def to_json_obj(self) -> dict:
        return {"t_start_s": self.t_start, "t_end_s": self.t_end}

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "InjectionWindow":
        return cls(float(obj["t_start_s"]), float(obj["t_end_s"]))


@dataclass(frozen=True)
class ChannelFault:
    """The fault applied at one active location: type, parameters and the
    window it is live in. Windows may differ between concurrent locations
    (they default to a shared one at assembly time)."""

    fault_type: FaultType
    params: FaultParams
    window: InjectionWindow

    def to_json_obj(self) -> dict:
        obj = params_to_json_obj(self.params)
        obj["window"] = self.window.to_json_obj()
        return obj

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "ChannelFault":
        if "window" not in obj:
            raise FormatError("channel fault requires a 'window' object")
        body = {k: v for k, v in obj.items() if k != "window"}
        params = params_from_json_obj(body)
        return cls(fault_type_of(params), params, InjectionWindow.from_json_obj(obj["window"]))


@dataclass(frozen=True)
class FaultTestCase:
    """An executable fault specification: where (locations), what
    (per-location fault) and when (per-location window)."""

    id: str
    source_fsr: str
    locations: LocationMap
    faults: tuple[tuple[str, ChannelFault], ...] = field(default_factory=tuple)

    def fault_for(self, channel: str) -> ChannelFault:
        for cid, cf in self.faults:
            if cid == channel:
                return cf
        raise KeyError(channel)

    def to_json_obj(self) -> dict:
        return {
            "id": self.id,
            "source_fsr": self.source_fsr,
            "locations": self.locations.to_json_obj(),
            "faults": {cid: cf.to_json_obj() for cid, cf in self.faults},
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "FaultTestCase":
        locations = LocationMap.from_items(obj["locations"].items())
        faults = tuple(
            (cid, ChannelFault.from_json_obj(body)) for cid, body in obj.get("faults", {}).items()
        )
        return cls(
            id=str(obj["id"]),
            source_fsr=str(obj.get("source_fsr", "")),
            locations=locations,
            faults=faults,
        )


def load_test_cases(path) -> list[FaultTestCase]:
    """Read a TC file (JSON array of test case objects).

    Structural problems (bad JSON, missing fields, out-of-contract
    windows or parameters) surface as FormatError, never as raw
    ValueError/KeyError.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"test case file is not valid JSON: {exc}") from None
    if not isinstance(payload, list):
        raise FormatError("test case file must be a JSON array")
    tcs = []
    for i, obj in enumerate(payload):
        try:
            tcs.append(FaultTestCase.from_json_obj(obj))
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise FormatError(f"test case #{i}: {exc}") from None
    return tcs


def save_test_cases(tcs: Iterable[FaultTestCase], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([tc.to_json_obj() for tc in tcs], fh, indent=2)
        fh.write("\n")


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    violations: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def validate_test_case(tc: FaultTestCase, catalog: ComponentCatalog) -> ValidationResult:
    """Check a candidate test case against every structural rule.

    Never raises: invalidity comes back as a ValidationResult listing all
    violated rules (bad key set, selection sum outside {1, 2}, fault type
    not applicable to the component kind, missing or extra fault specs,
    bad windows).
    """
    violations: list[str] = []

    map_keys = tc.locations.keys
    if map_keys != catalog.ids:
        violations.append(
            f"key-set-mismatch: map keys {list(map_keys)} != catalog {list(catalog.ids)}"
        )
    bad_values = [(k, v) for k, v in tc.locations.pairs if isinstance(v, bool) or v not in (0, 1)]
    if bad_values:
        violations.append(f"value-domain: values outside {{0,1}}: {bad_values}")

    total = sum(v for _, v in tc.locations.pairs if v in (0, 1) and not isinstance(v, bool))
    if total == 0:
        violations.append("sum=0: at least one location must be selected")
    elif total > MAX_CONCURRENT_LOCATIONS:
        violations.append(f"sum={total}: exceeds the concurrency bound of {MAX_CONCURRENT_LOCATIONS}")

    active = set(tc.locations.active)
    spec_ids = [cid for cid, _ in tc.faults]
    if len(set(spec_ids)) != len(spec_ids):
        violations.append(f"duplicate-fault-spec: {spec_ids}")
    for cid in active - set(spec_ids):
        violations.append(f"missing-fault-spec: no fault given for active location {cid}")
    for cid in set(spec_ids) - active:
        violations.append(f"fault-spec-for-inactive: {cid} is not an active location")

    for cid, cf in tc.faults:
        if cid in catalog:
            kind = catalog.kind_of(cid)
            if not cf.fault_type.applicable_to(kind):
                violations.append(
                    f"inapplicable-fault-type: {cf.fault_type.value} on {kind.label} {cid}"
                )
        # window invariants are enforced by InjectionWindow construction;
        # re-check here for maps deserialized through other paths
        if not (0 <= cf.window.t_start < cf.window.t_end):
            violations.append(f"bad-window: [{cf.window.t_start}, {cf.window.t_end}) on {cid}")

    return ValidationResult(ok=not violations, violations=tuple(violations))
