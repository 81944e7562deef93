"""Digital twin of a four-story smart building: simulated physical plant,
decentralized per-floor MPC, an MQTT-subset message bus, telemetry
persistence, and a web gateway with a live dashboard stream."""

from importlib import resources

from .topology import (
    BuildingTopology,
    DevicePlacement,
    Floor,
    TopologyError,
    Zone,
    load_topology,
    serialize,
    validate_controllability,
    zones_on_floor,
)

__version__ = "0.1.0"

BUNDLED_CONFIGS = ("default_building", "reference_scenario",
                   "default_controller")


def bundled_config(name: str) -> str:
    """Text of one of the bundled YAML configuration files."""
    if name not in BUNDLED_CONFIGS:
        raise KeyError(f"no bundled config {name!r}; have {BUNDLED_CONFIGS}")
    return (resources.files("smartbuilding") / "configs" / f"{name}.yaml").read_text()


__all__ = [
    "BUNDLED_CONFIGS",
    "BuildingTopology",
    "DevicePlacement",
    "Floor",
    "TopologyError",
    "Zone",
    "bundled_config",
    "load_topology",
    "serialize",
    "validate_controllability",
    "zones_on_floor",
]
