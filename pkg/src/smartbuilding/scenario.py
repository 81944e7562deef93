"""Scenario inputs for a simulation run: the ambient trajectory, scripted or
stochastic occupancy, seed, tick size and duration."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import yaml

from .plant import AmbientConditions, PlantError
from .topology import BuildingTopology


class ScenarioError(Exception):
    """Malformed scenario document."""


@dataclass(frozen=True)
class AmbientTrajectory:
    """Piecewise-linear outdoor temperature and humidity over the run."""

    temperature_points: tuple[tuple[float, float], ...]
    humidity_points: tuple[tuple[float, float], ...]

    def at(self, t: float, time_of_day: float = 0.0) -> AmbientConditions:
        return AmbientConditions(
            outdoor_temperature=_interp(self.temperature_points, t),
            outdoor_humidity=min(100.0, max(0.0, _interp(self.humidity_points, t))),
            time_of_day=time_of_day,
        )


def _interp(points: tuple[tuple[float, float], ...], t: float) -> float:
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    return float(np.interp(t, xs, ys))


@dataclass(frozen=True)
class OccupancyEvent:
    time_s: float
    zone_id: str
    delta: int = 0
    motion_pulse: bool = False


class ScriptedOccupancy:
    """Replays a fixed event list; each event fires at the first tick whose
    timestamp reaches it."""

    def __init__(self, events: list[OccupancyEvent]):
        self.events = sorted(events, key=lambda e: e.time_s)
        self._cursor = 0

    def reset(self) -> None:
        self._cursor = 0

    def events_at(self, time: float, dt: float, topology) -> list[tuple[str, int, bool]]:
        fired = []
        while self._cursor < len(self.events) and self.events[self._cursor].time_s <= time:
            ev = self.events[self._cursor]
            fired.append((ev.zone_id, ev.delta, ev.motion_pulse))
            self._cursor += 1
        return fired


class StochasticOccupancy:
    """Two-state occupant model: each occupant is home or away, and while
    home wanders between adjacent zones. Fully determined by the seed."""

    def __init__(self, occupants: int, seed: int, home_zone: str,
                 p_leave: float = 0.002, p_return: float = 0.004,
                 p_move: float = 0.05):
        self.rng = np.random.default_rng(seed)
        self.home_zone = home_zone
        self.p_leave = p_leave
        self.p_return = p_return
        self.p_move = p_move
        # (at_home, zone) per occupant
        self.occupants: list[list] = [[True, home_zone] for _ in range(occupants)]

    def events_at(self, time: float, dt: float,
                  topology: BuildingTopology) -> list[tuple[str, int, bool]]:
        fired: list[tuple[str, int, bool]] = []
        for occ in self.occupants:
            at_home, zone = occ
            u = self.rng.random()
            if at_home:
                if u < self.p_leave:
                    occ[0] = False
                    fired.append((zone, -1, False))
                elif u < self.p_leave + self.p_move:
                    neighbors = topology.zone(zone).neighbors
                    if neighbors:
                        idx = int(self.rng.integers(len(neighbors)))
                        occ[1] = neighbors[idx]
                        fired.append((zone, -1, False))
                        fired.append((occ[1], +1, False))
            else:
                if u < self.p_return:
                    occ[0] = True
                    occ[1] = self.home_zone
                    fired.append((self.home_zone, +1, False))
        return fired


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    dt_s: float
    duration_s: float
    initial_temperature: float
    initial_humidity: float
    ambient: AmbientTrajectory
    occupancy_events: tuple[OccupancyEvent, ...] = ()
    stochastic_occupants: int = 0
    stochastic_home_zone: str = ""
    start_time_of_day_s: float = 8 * 3600.0
    initial_occupancy: dict = field(default_factory=dict)

    @property
    def ticks(self) -> int:
        return int(round(self.duration_s / self.dt_s))

    def time_of_day(self, sim_time: float) -> float:
        return (self.start_time_of_day_s + sim_time) % 86400.0

    def make_occupancy_driver(self, topology: BuildingTopology):
        if self.stochastic_occupants > 0:
            return StochasticOccupancy(self.stochastic_occupants, self.seed + 1,
                                       self.stochastic_home_zone)
        return ScriptedOccupancy(list(self.occupancy_events))


def load_scenario(source: str) -> Scenario:
    try:
        doc = yaml.safe_load(source)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"scenario parse error: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a mapping")

    try:
        ambient_doc = doc["ambient"]
        ambient = AmbientTrajectory(
            temperature_points=tuple((float(t), float(v))
                                     for t, v in ambient_doc["temperature_c"]),
            humidity_points=tuple((float(t), float(v))
                                  for t, v in ambient_doc["humidity_pct"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"bad ambient trajectory: {exc}") from exc

    events = []
    for raw in doc.get("occupancy", []) or []:
        if "zone" not in raw or "time_s" not in raw:
            raise ScenarioError(f"occupancy event needs time_s and zone: {raw}")
        events.append(OccupancyEvent(
            time_s=float(raw["time_s"]),
            zone_id=str(raw["zone"]),
            delta=int(raw.get("delta", 0)),
            motion_pulse=bool(raw.get("motion", False)),
        ))

    stochastic = doc.get("stochastic_occupancy", {}) or {}
    initial = doc.get("initial", {}) or {}
    dt = float(doc.get("dt_s", 5.0))
    duration = float(doc.get("duration_s", 3600.0))
    if dt <= 0:
        raise ScenarioError("dt_s must be positive")
    if duration < 0:
        raise ScenarioError("duration_s must be non-negative")

    return Scenario(
        name=str(doc.get("name", "unnamed")),
        seed=int(doc.get("seed", 0)),
        dt_s=dt,
        duration_s=duration,
        initial_temperature=float(initial.get("temperature_c", 20.0)),
        initial_humidity=float(initial.get("humidity_pct", 55.0)),
        ambient=ambient,
        occupancy_events=tuple(events),
        stochastic_occupants=int(stochastic.get("occupants", 0)),
        stochastic_home_zone=str(stochastic.get("home_zone", "")),
        start_time_of_day_s=float(doc.get("start_time_of_day_s", 8 * 3600.0)),
        initial_occupancy={str(k): int(v)
                           for k, v in (doc.get("initial_occupancy") or {}).items()},
    )
