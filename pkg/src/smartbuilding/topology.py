"""Building description: floors, zones, adjacency and device inventory.

A topology is loaded from a YAML document, validated once, and treated as
immutable afterwards. Every other component (plant, controllers, gateway)
shares the same loaded instance read-only.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import yaml

ZONE_KINDS = {
    "kitchen", "dining", "living", "sunroom",
    "bedroom", "bathroom", "attic", "garage",
}

DEVICE_TYPES = {
    "temp_humidity_sensor", "pir_sensor", "heater", "fan",
    "led_strip", "servo_door", "servo_window", "camera",
}

# Devices a climate-controlled zone must carry to be controllable.
REQUIRED_CLIMATE_DEVICES = (
    "temp_humidity_sensor", "heater", "fan", "led_strip", "pir_sensor",
)

LED_STRIP_DEFAULTS = {
    "led_count": 5,
    "voltage_min_v": 1.4,
    "voltage_max_v": 5.0,
    "max_current_a": 0.29,
}

HEATER_DEFAULTS = {"max_power_w": 120.0}
FAN_DEFAULTS = {"rated_power_w": 3.0, "exchange_w_per_k": 8.0}
SERVO_DEFAULTS = {"transit_time_s": 12.0, "servo_is_front_door": False}


class TopologyError(Exception):
    """Malformed or invariant-violating building configuration."""


@dataclass(frozen=True)
class DevicePlacement:
    device_id: str
    device_type: str
    zone_id: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Zone:
    id: str
    kind: str
    neighbors: tuple[str, ...]
    devices: tuple[DevicePlacement, ...]
    climate_controlled: bool
    thermal: dict = field(default_factory=dict)

    def devices_of_type(self, device_type: str) -> list[DevicePlacement]:
        return [d for d in self.devices if d.device_type == device_type]


@dataclass(frozen=True)
class Floor:
    index: int
    zones: tuple[Zone, ...]


@dataclass(frozen=True)
class BuildingTopology:
    name: str
    floors: tuple[Floor, ...]

    def all_zones(self) -> list[Zone]:
        return [z for f in self.floors for z in f.zones]

    def zone(self, zone_id: str) -> Zone:
        for z in self.all_zones():
            if z.id == zone_id:
                return z
        raise TopologyError(f"unknown zone {zone_id!r}")

    def floor_of(self, zone_id: str) -> int:
        for f in self.floors:
            for z in f.zones:
                if z.id == zone_id:
                    return f.index
        raise TopologyError(f"unknown zone {zone_id!r}")

    def device(self, device_id: str) -> DevicePlacement:
        for z in self.all_zones():
            for d in z.devices:
                if d.device_id == device_id:
                    return d
        raise TopologyError(f"unknown device {device_id!r}")

    def all_devices(self) -> list[DevicePlacement]:
        return [d for z in self.all_zones() for d in z.devices]

    def climate_zones(self) -> list[Zone]:
        return [z for z in self.all_zones() if z.climate_controlled]


_TYPE_DEFAULTS = {
    "led_strip": LED_STRIP_DEFAULTS,
    "heater": HEATER_DEFAULTS,
    "fan": FAN_DEFAULTS,
    "servo_door": SERVO_DEFAULTS,
    "servo_window": SERVO_DEFAULTS,
}


def _device_params(device_type: str, given: dict | None) -> dict:
    params = copy.deepcopy(_TYPE_DEFAULTS.get(device_type, {}))
    if given:
        params.update(given)
    return params


def load_topology(source: str) -> BuildingTopology:
    """Parse and validate a building configuration document.

    Raises TopologyError naming the violated invariant and the offending
    zone or device for any malformed input.
    """
    try:
        doc = yaml.safe_load(source)
    except yaml.YAMLError as exc:
        raise TopologyError(f"config parse error: {exc}") from exc
    if not isinstance(doc, dict):
        raise TopologyError("config must be a mapping with 'name' and 'floors'")

    name = doc.get("name")
    if not isinstance(name, str) or not name:
        raise TopologyError("building 'name' must be a nonempty string")
    raw_floors = doc.get("floors")
    if not isinstance(raw_floors, list) or not raw_floors:
        raise TopologyError("'floors' must be a nonempty list")

    floors = []
    for fi, raw_floor in enumerate(raw_floors, start=1):
        if not isinstance(raw_floor, dict):
            raise TopologyError(f"floor #{fi} must be a mapping")
        index = raw_floor.get("index", fi)
        if not isinstance(index, int) or index < 1:
            raise TopologyError(f"floor #{fi}: 'index' must be an integer >= 1")
        raw_zones = raw_floor.get("zones")
        if not isinstance(raw_zones, list) or not raw_zones:
            raise TopologyError(f"floor {index}: needs at least one zone")
        zones = tuple(_parse_zone(rz, index) for rz in raw_zones)
        floors.append(Floor(index=index, zones=zones))

    topo = BuildingTopology(name=name, floors=tuple(floors))
    _validate(topo)
    return topo


def _parse_zone(raw: dict, floor_index: int) -> Zone:
    if not isinstance(raw, dict):
        raise TopologyError(f"floor {floor_index}: zone entry must be a mapping")
    zone_id = raw.get("id")
    if not isinstance(zone_id, str) or not zone_id:
        raise TopologyError(f"floor {floor_index}: zone 'id' must be a nonempty string")
    kind = raw.get("kind")
    if kind not in ZONE_KINDS:
        raise TopologyError(f"zone {zone_id!r}: unknown kind {kind!r}")
    climate = raw.get("climate_controlled", kind != "garage")
    if not isinstance(climate, bool):
        raise TopologyError(f"zone {zone_id!r}: 'climate_controlled' must be boolean")

    neighbors = raw.get("neighbors", [])
    if not isinstance(neighbors, list) or not all(isinstance(n, str) for n in neighbors):
        raise TopologyError(f"zone {zone_id!r}: 'neighbors' must be a list of zone ids")

    devices = []
    for rd in raw.get("devices", []):
        if not isinstance(rd, dict):
            raise TopologyError(f"zone {zone_id!r}: device entry must be a mapping")
        dev_id = rd.get("id")
        dev_type = rd.get("type")
        if not isinstance(dev_id, str) or not dev_id:
            raise TopologyError(f"zone {zone_id!r}: device 'id' must be a nonempty string")
        if dev_type not in DEVICE_TYPES:
            raise TopologyError(f"device {dev_id!r}: unknown type {dev_type!r}")
        devices.append(DevicePlacement(
            device_id=dev_id,
            device_type=dev_type,
            zone_id=zone_id,
            params=_device_params(dev_type, rd.get("params")),
        ))

    thermal = raw.get("thermal", {})
    if not isinstance(thermal, dict):
        raise TopologyError(f"zone {zone_id!r}: 'thermal' must be a mapping")

    return Zone(
        id=zone_id,
        kind=kind,
        neighbors=tuple(neighbors),
        devices=tuple(devices),
        climate_controlled=climate,
        thermal=thermal,
    )


def _validate(topo: BuildingTopology) -> None:
    zone_ids: set[str] = set()
    for zone in topo.all_zones():
        if zone.id in zone_ids:
            raise TopologyError(f"zone id {zone.id!r} is not unique")
        zone_ids.add(zone.id)

    device_ids: set[str] = set()
    for dev in topo.all_devices():
        if dev.device_id in device_ids:
            raise TopologyError(f"device id {dev.device_id!r} is not unique")
        device_ids.add(dev.device_id)

    by_id = {z.id: z for z in topo.all_zones()}
    for zone in topo.all_zones():
        for nb in zone.neighbors:
            if nb not in by_id:
                raise TopologyError(f"zone {zone.id!r}: neighbor {nb!r} does not exist")
            if zone.id not in by_id[nb].neighbors:
                raise TopologyError(
                    f"adjacency not symmetric: {zone.id!r} lists {nb!r} "
                    f"but not vice versa")
        if zone.id in zone.neighbors:
            raise TopologyError(f"zone {zone.id!r} lists itself as neighbor")

    for zone in topo.all_zones():
        if zone.kind == "garage":
            if zone.climate_controlled:
                raise TopologyError(f"zone {zone.id!r}: a garage cannot be climate controlled")
            for dev in zone.devices:
                if dev.device_type in ("heater", "fan"):
                    raise TopologyError(
                        f"zone {zone.id!r}: garage must not contain {dev.device_type} "
                        f"({dev.device_id!r}); garages have no temperature control")


def zones_on_floor(topology: BuildingTopology, floor_index: int) -> list[Zone]:
    """Zones of one floor in declaration order."""
    for f in topology.floors:
        if f.index == floor_index:
            return list(f.zones)
    raise TopologyError(
        f"floor index {floor_index} out of range 1..{len(topology.floors)}")


def validate_controllability(topology: BuildingTopology) -> list[str]:
    """One diagnostic per device missing from a climate-controlled zone.

    Garages are exempt; an empty list means every controlled zone carries
    the full sensor/actuator set.
    """
    diagnostics = []
    for zone in topology.all_zones():
        if not zone.climate_controlled:
            continue
        present = {d.device_type for d in zone.devices}
        for required in REQUIRED_CLIMATE_DEVICES:
            if required not in present:
                diagnostics.append(f"zone {zone.id!r} is missing a {required}")
    return diagnostics


def serialize(topology: BuildingTopology) -> str:
    """Emit a YAML document that load_topology() parses back to an equal topology."""
    doc = {
        "name": topology.name,
        "floors": [
            {
                "index": f.index,
                "zones": [
                    {
                        "id": z.id,
                        "kind": z.kind,
                        "climate_controlled": z.climate_controlled,
                        "neighbors": list(z.neighbors),
                        "thermal": z.thermal,
                        "devices": [
                            {"id": d.device_id, "type": d.device_type,
                             "params": d.params}
                            for d in z.devices
                        ],
                    }
                    for z in f.zones
                ],
            }
            for f in topology.floors
        ],
    }
    return yaml.safe_dump(doc, sort_keys=False)
