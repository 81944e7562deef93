"""Setpoint schedules, lighting behavior and door/window command handling."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..topology import DevicePlacement
from .commands import ActuatorCommand

COMFORT_TEMP_RANGE = (16.0, 28.0)      # degC
COMFORT_HUMIDITY_RANGE = (30.0, 70.0)  # %RH

DEFAULT_OVERRIDE_TTL_S = 2 * 3600.0
DEFAULT_LIGHT_HOLD_S = 120.0
DEFAULT_LIGHT_ON_LEVEL = 1.0

# Daily user events closer together than this merge into one learned event.
LEARN_CLUSTER_WINDOW_S = 1800.0


class PolicyError(Exception):
    """Invalid schedule, policy, or device for the requested command."""


@dataclass(frozen=True)
class SetpointOverride:
    temperature: float
    humidity: float
    expires_at: float       # simulation seconds


@dataclass(frozen=True)
class SetpointSchedule:
    """Time-of-day step function of desired temperature and humidity,
    wrapping across midnight, with an optional expiring manual override."""

    entries: tuple[tuple[float, float, float], ...]   # (tod_s, T_ref, H_ref)
    override: SetpointOverride | None = None

    def __post_init__(self):
        if not self.entries:
            raise PolicyError("schedule needs at least one entry")
        times = [e[0] for e in self.entries]
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise PolicyError("schedule times must be strictly increasing")
        if any(not 0 <= t < 86400 for t in times):
            raise PolicyError("schedule times must lie within one day")
        for _, t_ref, h_ref in self.entries:
            if not COMFORT_TEMP_RANGE[0] <= t_ref <= COMFORT_TEMP_RANGE[1]:
                raise PolicyError(
                    f"temperature setpoint {t_ref} outside comfort bounds "
                    f"{COMFORT_TEMP_RANGE}")
            if not COMFORT_HUMIDITY_RANGE[0] <= h_ref <= COMFORT_HUMIDITY_RANGE[1]:
                raise PolicyError(
                    f"humidity setpoint {h_ref} outside comfort bounds "
                    f"{COMFORT_HUMIDITY_RANGE}")

    @classmethod
    def constant(cls, temperature: float, humidity: float) -> "SetpointSchedule":
        return cls(entries=((0.0, temperature, humidity),))

    def with_override(self, temperature: float, humidity: float,
                      expires_at: float) -> "SetpointSchedule":
        if not COMFORT_TEMP_RANGE[0] <= temperature <= COMFORT_TEMP_RANGE[1]:
            raise PolicyError(
                f"override temperature {temperature} outside comfort bounds "
                f"{COMFORT_TEMP_RANGE}")
        if not COMFORT_HUMIDITY_RANGE[0] <= humidity <= COMFORT_HUMIDITY_RANGE[1]:
            raise PolicyError(
                f"override humidity {humidity} outside comfort bounds "
                f"{COMFORT_HUMIDITY_RANGE}")
        return replace(self, override=SetpointOverride(
            temperature=temperature, humidity=humidity, expires_at=expires_at))

    def without_override(self) -> "SetpointSchedule":
        return replace(self, override=None)


def resolve_setpoint(schedule: SetpointSchedule, time_of_day: float,
                     sim_time: float = 0.0) -> tuple[float, float]:
    """Active setpoints: an unexpired override wins; otherwise the last
    schedule entry at or before time-of-day, wrapping to the previous day's
    final entry before the first one."""
    if schedule.override is not None and sim_time < schedule.override.expires_at:
        return schedule.override.temperature, schedule.override.humidity
    tod = time_of_day % 86400.0
    active = schedule.entries[-1]        # wrap: yesterday's last entry
    for entry in schedule.entries:
        if entry[0] <= tod:
            active = entry
        else:
            break
    return active[1], active[2]


@dataclass(frozen=True)
class LightingPolicy:
    mode: str = "presence"               # presence | manual | away_mimic
    learned_events: tuple[tuple[float, float], ...] = ()   # (tod_s, level)
    mimic_jitter_s: float = 0.0
    on_level: float = DEFAULT_LIGHT_ON_LEVEL
    hold_s: float = DEFAULT_LIGHT_HOLD_S

    def __post_init__(self):
        if self.mode not in ("presence", "manual", "away_mimic"):
            raise PolicyError(f"unknown lighting mode {self.mode!r}")
        if self.mimic_jitter_s < 0:
            raise PolicyError("mimic_jitter_s must be non-negative")
        if not 0.0 <= self.on_level <= 1.0:
            raise PolicyError("on_level must lie in [0, 1]")
        times = [t for t, _ in self.learned_events]
        if times != sorted(times):
            raise PolicyError("learned_events must be time-sorted")
        if any(not 0.0 <= lvl <= 1.0 for _, lvl in self.learned_events):
            raise PolicyError("learned event levels must lie in [0, 1]")


class ZoneLighting:
    """Per-zone lighting state machine driving one LED strip.

    Presence mode turns the strip on while the zone is occupied or motion is
    seen, and off after the hold time. Away mode replays learned events with
    seeded jitter. Manual mode never emits automatic commands.
    """

    def __init__(self, policy: LightingPolicy, seed: int = 0):
        self.policy = policy
        self.level = 0.0
        self.last_active: float | None = None
        self._rng = np.random.default_rng(abs(seed))
        self._jitter: dict[tuple[int, int], float] = {}
        self._replayed: set[tuple[int, int]] = set()

    def _jitter_for(self, day: int, idx: int) -> float:
        key = (day, idx)
        if key not in self._jitter:
            j = self.policy.mimic_jitter_s
            self._jitter[key] = float(self._rng.uniform(-j, j)) if j > 0 else 0.0
        return self._jitter[key]

    def decide(self, occupied: bool, motion: bool, time_of_day: float,
               sim_time: float, away: bool, dt: float) -> float | None:
        """New light level to command this tick, or None for no change."""
        mode = "away_mimic" if away and self.policy.mode != "manual" else self.policy.mode
        if mode == "manual":
            return None
        if mode == "presence":
            if occupied or motion:
                self.last_active = sim_time
                if self.level != self.policy.on_level:
                    self.level = self.policy.on_level
                    return self.level
                return None
            if (self.level > 0.0 and self.last_active is not None
                    and sim_time - self.last_active > self.policy.hold_s):
                self.level = 0.0
                return 0.0
            return None

        # away_mimic: fire each learned event once per day when its jittered
        # time-of-day falls inside this tick.
        day = int((sim_time + time_of_day) // 86400)
        for idx, (tod, level) in enumerate(self.policy.learned_events):
            when = tod + self._jitter_for(day, idx)
            key = (day, idx)
            if key in self._replayed:
                continue
            if when <= time_of_day < when + dt or time_of_day >= when:
                self._replayed.add(key)
                if level != self.level:
                    self.level = level
                    return level
        return None

    def set_manual(self, level: float) -> None:
        self.level = level


def lighting_decision(policy: LightingPolicy, occupied: bool, motion: bool,
                      time_of_day: float, away: bool,
                      state: ZoneLighting | None = None,
                      sim_time: float = 0.0, dt: float = 5.0) -> float | None:
    """One-shot form of ZoneLighting.decide for callers without persistent
    per-zone state."""
    zl = state if state is not None else ZoneLighting(policy)
    return zl.decide(occupied, motion, time_of_day, sim_time, away, dt)


def learn_lighting_routine(event_log: list[dict]) -> dict[str, tuple[tuple[float, float], ...]]:
    """Cluster user-issued light commands by time-of-day, per zone.

    Events within LEARN_CLUSTER_WINDOW_S of a cluster's running mean merge
    into it; each cluster becomes one (mean time-of-day, level) entry. An
    empty log learns an empty routine.
    """
    by_zone: dict[str, list[tuple[float, float]]] = {}
    for ev in event_log:
        if ev.get("source") != "user":
            continue
        zone = ev["zone_id"]
        tod = float(ev["time_of_day"]) % 86400.0
        by_zone.setdefault(zone, []).append((tod, float(ev["level"])))

    learned: dict[str, tuple[tuple[float, float], ...]] = {}
    for zone, events in by_zone.items():
        events.sort()
        clusters: list[list[tuple[float, float]]] = []
        for tod, level in events:
            placed = False
            for cluster in clusters:
                mean = sum(t for t, _ in cluster) / len(cluster)
                same_action = (cluster[0][1] > 0) == (level > 0)
                if same_action and abs(tod - mean) <= LEARN_CLUSTER_WINDOW_S:
                    cluster.append((tod, level))
                    placed = True
                    break
            if not placed:
                clusters.append([(tod, level)])
        entries = []
        for cluster in clusters:
            mean_t = sum(t for t, _ in cluster) / len(cluster)
            mean_l = sum(l for _, l in cluster) / len(cluster)
            entries.append((mean_t, mean_l))
        learned[zone] = tuple(sorted(entries))
    return learned


def door_window_command(device: DevicePlacement, position: str,
                        issued_at: float, source: str = "user"
                        ) -> tuple[ActuatorCommand, dict]:
    """Build the servo command plus the status-change notification event
    published for residents."""
    if device.device_type not in ("servo_door", "servo_window"):
        raise PolicyError(
            f"device {device.device_id!r} ({device.device_type}) is not a "
            f"door or window servo")
    if position not in ("open", "closed"):
        raise PolicyError(f"position must be 'open' or 'closed', got {position!r}")
    command = ActuatorCommand(device_id=device.device_id, action="position",
                              value=position, issued_at=issued_at, source=source)
    notification = {
        "kind": "door_window",
        "device_id": device.device_id,
        "zone_id": device.zone_id,
        "position": position,
        "timestamp": issued_at,
        "source": source,
    }
    return command, notification
