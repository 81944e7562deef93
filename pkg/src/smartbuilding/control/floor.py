"""One independent controller per floor.

Each controller sees only its own floor's readings and user requests, runs
setpoint resolution + MPC (or the bang-bang baseline) per climate zone plus
the lighting policy every tick, and emits pre-saturated actuator commands.
Controllers share nothing; cross-floor isolation is a hard contract.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..plant import AmbientConditions
from ..topology import Zone
from .commands import ActuatorCommand
from .models import ZoneModel
from .mpc import MpcConfig, mpc_solve
from .policies import (
    DEFAULT_OVERRIDE_TTL_S,
    LightingPolicy,
    PolicyError,
    SetpointSchedule,
    ZoneLighting,
    door_window_command,
    resolve_setpoint,
)

STALE_AFTER_TICKS = 3
DEFAULT_HYSTERESIS_C = 0.2

# EMA weight on new readings in the model-based path. The baseline
# thermostat acts on raw readings by design (static BMS behavior).
DEFAULT_FILTER_ALPHA = 0.45


class ControlError(Exception):
    """Invalid controller configuration or request."""


def baseline_thermostat(temperature: float, t_ref: float,
                        hysteresis: float) -> tuple[float, float]:
    """Static-BMS comparison baseline: heater full on below the band, fan
    full on above it, both off inside."""
    if hysteresis <= 0:
        raise ControlError("hysteresis must be positive")
    if temperature < t_ref - hysteresis:
        return 1.0, 0.0
    if temperature > t_ref + hysteresis:
        return 0.0, 1.0
    return 0.0, 0.0


@dataclass
class _ZoneRuntime:
    zone: Zone
    model: ZoneModel | None
    temperature: float | None = None
    humidity: float | None = None
    occupied: bool = False
    motion: bool = False
    last_update_tick: int | None = None
    last_heat: float = 0.0
    last_fan: float = 0.0
    warm_start: np.ndarray | None = None
    lighting: ZoneLighting | None = None
    led_ids: tuple[str, ...] = ()
    heater_ids: tuple[str, ...] = ()
    fan_ids: tuple[str, ...] = ()


@dataclass
class TickDiagnostics:
    tick: int
    floor: int
    sim_time: float
    setpoints: dict[str, tuple[float, float]] = field(default_factory=dict)
    errors: dict[str, tuple[float, float]] = field(default_factory=dict)
    cost: dict[str, float] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    n_readings: int = 0
    n_commands: int = 0


class FloorController:
    """Tick-driven controller for the zones of a single floor."""

    def __init__(self, floor_index: int, zones: list[Zone],
                 models: dict[str, ZoneModel], schedule: SetpointSchedule,
                 mpc_cfg: MpcConfig | None = None,
                 lighting_policy: LightingPolicy | None = None,
                 seed: int = 0, controller: str = "mpc",
                 hysteresis: float = DEFAULT_HYSTERESIS_C,
                 lock_doors_at_tod: float | None = None,
                 filter_alpha: float = DEFAULT_FILTER_ALPHA):
        if controller not in ("mpc", "baseline"):
            raise ControlError(f"unknown controller kind {controller!r}")
        if not 0.0 < filter_alpha <= 1.0:
            raise ControlError("filter_alpha must lie in (0, 1]")
        self.floor_index = floor_index
        self.schedule = schedule
        self.mpc_cfg = mpc_cfg or MpcConfig()
        self.controller = controller
        self.hysteresis = hysteresis
        self.filter_alpha = filter_alpha if controller == "mpc" else 1.0
        self.lock_doors_at_tod = lock_doors_at_tod
        self._lock_fired_day: int | None = None
        self.away = False
        self.tick_count = 0
        lighting_policy = lighting_policy or LightingPolicy()

        self.zones: dict[str, _ZoneRuntime] = {}
        for i, zone in enumerate(zones):
            model = models.get(zone.id)
            if zone.climate_controlled and model is None and controller == "mpc":
                raise ControlError(
                    f"zone {zone.id!r} is climate controlled but has no model")
            rt = _ZoneRuntime(
                zone=zone,
                model=model,
                led_ids=tuple(d.device_id for d in zone.devices_of_type("led_strip")),
                heater_ids=tuple(d.device_id for d in zone.devices_of_type("heater")),
                fan_ids=tuple(d.device_id for d in zone.devices_of_type("fan")),
            )
            if rt.led_ids:
                rt.lighting = ZoneLighting(
                    lighting_policy, seed=hash((seed, floor_index, i)) & 0x7FFFFFFF)
            self.zones[zone.id] = rt
        self._devices = {d.device_id: d for z in zones for d in z.devices}

    # ------------------------------------------------------------------
    # user requests (arriving through the broker, never direct calls)

    def _handle_request(self, req: dict, sim_time: float,
                        out_commands: list[ActuatorCommand],
                        out_events: list[dict],
                        diag: TickDiagnostics) -> None:
        kind = req.get("type")
        if kind == "setpoint":
            expires = req.get("expires_at", sim_time + DEFAULT_OVERRIDE_TTL_S)
            self.schedule = self.schedule.with_override(
                float(req["t_ref"]), float(req["h_ref"]), float(expires))
            diag.notes.append(
                f"setpoint override {req['t_ref']}/{req['h_ref']} until {expires:.0f}")
        elif kind == "away":
            self.away = bool(req["on"])
            diag.notes.append(f"away mode {'on' if self.away else 'off'}")
        elif kind == "light":
            device_id = req["device_id"]
            if device_id not in self._devices:
                raise ControlError(f"unknown device {device_id!r} on floor "
                                   f"{self.floor_index}")
            level = float(req["level"])
            out_commands.append(ActuatorCommand(
                device_id=device_id, action="level", value=level,
                issued_at=sim_time, source="user"))
            for rt in self.zones.values():
                if device_id in rt.led_ids and rt.lighting is not None:
                    rt.lighting.set_manual(level)
        elif kind == "door":
            device_id = req["device_id"]
            if device_id not in self._devices:
                raise ControlError(f"unknown device {device_id!r} on floor "
                                   f"{self.floor_index}")
            command, event = door_window_command(
                self._devices[device_id], req["position"], sim_time)
            out_commands.append(command)
            out_events.append(event)
        else:
            raise ControlError(f"unknown request type {kind!r}")

    # ------------------------------------------------------------------

    def _ingest_readings(self, readings: list[dict],
                         tick: int) -> int:
        count = 0
        for r in readings:
            zone_id = r.get("zone_id")
            if zone_id not in self.zones:
                continue
            rt = self.zones[zone_id]
            kind = r.get("kind")
            alpha = self.filter_alpha
            if kind == "temperature":
                meas = float(r["value"])
                rt.temperature = (meas if rt.temperature is None
                                  else alpha * meas + (1 - alpha) * rt.temperature)
                rt.last_update_tick = tick
            elif kind == "humidity":
                meas = float(r["value"])
                rt.humidity = (meas if rt.humidity is None
                               else alpha * meas + (1 - alpha) * rt.humidity)
                rt.last_update_tick = tick
            elif kind == "motion":
                rt.motion = bool(r["value"])
            elif kind == "occupancy":
                rt.occupied = bool(r["value"])
            count += 1
        return count

    def _climate_commands(self, rt: _ZoneRuntime, ambient: AmbientConditions,
                          sim_time: float, tick: int,
                          diag: TickDiagnostics) -> list[ActuatorCommand]:
        zone_id = rt.zone.id
        if rt.last_update_tick is None:
            diag.notes.append(f"{zone_id}: no readings yet; safe action")
            u_heat, u_fan = 0.0, 0.0
        elif tick - rt.last_update_tick > STALE_AFTER_TICKS:
            diag.notes.append(
                f"{zone_id}: readings stale for {tick - rt.last_update_tick} "
                f"ticks; holding last command")
            u_heat, u_fan = rt.last_heat, rt.last_fan
        else:
            t_ref, h_ref = resolve_setpoint(self.schedule,
                                            ambient.time_of_day, sim_time)
            diag.setpoints[zone_id] = (t_ref, h_ref)
            diag.errors[zone_id] = (t_ref - rt.temperature,
                                    h_ref - (rt.humidity or 0.0))
            if self.controller == "baseline":
                u_heat, u_fan = baseline_thermostat(rt.temperature, t_ref,
                                                    self.hysteresis)
            else:
                solution = mpc_solve(
                    rt.model, (rt.temperature, rt.humidity or 0.0),
                    ambient, self.schedule, self.mpc_cfg, sim_time,
                    warm_start=rt.warm_start)
                u_heat, u_fan = solution.first_input
                diag.cost[zone_id] = solution.cost
                diag.notes.extend(f"{zone_id}: {note}"
                                  for note in solution.diagnostics)
                # Shift the solution one step for the next tick's warm start.
                seq = np.concatenate([solution.u_heat, solution.u_fan])
                n = self.mpc_cfg.horizon
                rt.warm_start = np.concatenate([
                    seq[1:n], seq[n - 1:n], seq[n + 1:], seq[-1:]])
        rt.last_heat, rt.last_fan = u_heat, u_fan
        commands = []
        for dev_id in rt.heater_ids:
            commands.append(ActuatorCommand(dev_id, "duty", u_heat,
                                            sim_time, "mpc"))
        for dev_id in rt.fan_ids:
            commands.append(ActuatorCommand(dev_id, "duty", u_fan,
                                            sim_time, "mpc"))
        return commands

    def on_tick(self, tick: int, sim_time: float, ambient: AmbientConditions,
                readings: list[dict], requests: list[dict] | None = None
                ) -> tuple[list[ActuatorCommand], list[dict], TickDiagnostics]:
        """Run one 5 s control period: consume the latest readings and user
        requests, emit one command batch."""
        self.tick_count += 1
        diag = TickDiagnostics(tick=tick, floor=self.floor_index,
                               sim_time=sim_time)
        commands: list[ActuatorCommand] = []
        events: list[dict] = []

        for req in requests or []:
            try:
                self._handle_request(req, sim_time, commands, events, diag)
            except (ControlError, PolicyError, KeyError, TypeError, ValueError) as exc:
                diag.notes.append(f"rejected request {req.get('type')!r}: {exc}")
        diag.n_readings = self._ingest_readings(readings, tick)

        for rt in self.zones.values():
            rt.occupied = False
        for r in readings:
            zone_id = r.get("zone_id")
            if zone_id in self.zones and r.get("kind") == "occupancy":
                self.zones[zone_id].occupied = bool(r["value"])

        for rt in self.zones.values():
            if rt.zone.climate_controlled:
                commands.extend(self._climate_commands(rt, ambient, sim_time,
                                                       tick, diag))
            if rt.lighting is not None:
                level = rt.lighting.decide(rt.occupied, rt.motion,
                                           ambient.time_of_day, sim_time,
                                           self.away, self.mpc_cfg.sample_period_s)
                if level is not None:
                    for dev_id in rt.led_ids:
                        commands.append(ActuatorCommand(
                            dev_id, "level", level, sim_time, "lighting"))
            rt.motion = False

        if self.lock_doors_at_tod is not None:
            day = int(sim_time // 86400)
            tod = ambient.time_of_day
            if (self._lock_fired_day != day
                    and tod >= self.lock_doors_at_tod):
                self._lock_fired_day = day
                for dev in self._devices.values():
                    if dev.device_type == "servo_door":
                        cmd, event = door_window_command(dev, "closed",
                                                         sim_time, source="safety")
                        commands.append(cmd)
                        events.append(event)

        diag.n_commands = len(commands)
        return commands, events, diag
