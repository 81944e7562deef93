"""Discrete-time physics of the building: zone temperature/humidity dynamics,
occupancy, noisy sensor readings and actuator effects.

Zone temperature follows a lumped RC model stepped with forward Euler:

    T[k+1] = T + dt/C * ( (T_amb-T)/R_env + sum_j (T_j-T)/R_adj
                          + P_h*u_h - k_fan*u_f*(T-T_amb) + q_occ*n )

Relative humidity relaxes toward ambient, pushed up by occupants and pulled
back faster by the fan, clamped to [0, 100]:

    H[k+1] = clamp( H + dt * ( k_h*(H_amb-H) + g_occ*n
                               - k_h_fan*u_f*(H-H_amb) ), 0, 100 )

The heater is a heat source only; cooling comes from the fan exchanging air
with ambient. All default parameters are synthetic, sized so an open-loop
step settles in minutes at testbed scale, and can be overridden per zone in
the building config.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING

import numpy as np

from .topology import BuildingTopology, Zone

if TYPE_CHECKING:
    from .control.commands import ActuatorCommand

# Zone-level defaults, overridable via the zone's `thermal` mapping.
DEFAULT_HEAT_CAPACITY_J_PER_K = 2500.0
DEFAULT_R_ENV_K_PER_W = 0.2
DEFAULT_R_ADJ_SAME_FLOOR = 0.2
DEFAULT_R_ADJ_VERTICAL = 0.5
DEFAULT_HUMIDITY_EXCHANGE_PER_S = 1.0 / 600.0
DEFAULT_FAN_HUMIDITY_EXCHANGE_PER_S = 1.0 / 120.0
DEFAULT_OCCUPANT_MOISTURE_PCT_PER_S = 0.01
DEFAULT_OCCUPANT_HEAT_W = 70.0

# DHT22-class accuracy; the part datasheet gives accuracy, not noise, so
# zero-mean uniform at that amplitude is a documented default.
DEFAULT_TEMP_NOISE_C = 0.5
DEFAULT_HUMIDITY_NOISE_PCT = 2.0

CAMERA_RECORD_HOLD_S = 10.0


class PlantError(Exception):
    """Invalid plant configuration or command."""


class SimulationFault(PlantError):
    """Non-finite state detected while stepping the plant."""


class ActuationError(PlantError):
    """Rejected actuator command (unknown device or out-of-range value)."""


@dataclass(frozen=True)
class ZoneThermalParams:
    heat_capacity: float                 # J/K
    r_env: float                         # K/W
    r_adj: dict[str, float]              # K/W per neighbor id
    heater_max_power: float              # W, summed over heaters
    fan_exchange_gain: float             # W/K at full duty, summed over fans
    humidity_exchange_rate: float        # 1/s
    fan_humidity_exchange_rate: float    # 1/s at full duty
    occupant_moisture_gain: float        # %RH/s per person
    occupant_heat_gain: float            # W per person

    def __post_init__(self):
        for name in ("heat_capacity", "r_env", "humidity_exchange_rate",
                     "fan_humidity_exchange_rate"):
            if getattr(self, name) <= 0:
                raise PlantError(f"thermal parameter {name} must be positive")
        for nb, r in self.r_adj.items():
            if r <= 0:
                raise PlantError(f"r_adj toward {nb!r} must be positive")


@dataclass(frozen=True)
class AmbientConditions:
    outdoor_temperature: float   # degC
    outdoor_humidity: float      # %RH
    time_of_day: float = 0.0     # seconds past midnight

    def __post_init__(self):
        if not 0.0 <= self.outdoor_humidity <= 100.0:
            raise PlantError("outdoor humidity must be within [0, 100]")


@dataclass(frozen=True)
class SensorReading:
    device_id: str
    kind: str        # temperature | humidity | motion | door_state | window_state
    value: float | bool
    timestamp: float
    zone_id: str


@dataclass(frozen=True)
class CameraEvent:
    device_id: str
    zone_id: str
    timestamp: float
    trigger: str = "motion"


@dataclass
class ZoneState:
    temperature: float
    humidity: float
    occupant_count: int = 0
    pir_active: bool = False


@dataclass
class ServoState:
    target: str = "closed"        # open | closed
    fraction: float = 0.0         # 0 = closed, 1 = open

    @property
    def position(self) -> str:
        if self.fraction >= 1.0:
            return "open"
        if self.fraction <= 0.0:
            return "closed"
        return "opening" if self.target == "open" else "closing"


@dataclass
class PlantState:
    time: float
    zones: dict[str, ZoneState]
    heater_duty: dict[str, float] = field(default_factory=dict)
    fan_duty: dict[str, float] = field(default_factory=dict)
    led_level: dict[str, float] = field(default_factory=dict)
    servos: dict[str, ServoState] = field(default_factory=dict)
    camera_recording_until: dict[str, float] = field(default_factory=dict)

    def clone(self) -> "PlantState":
        return PlantState(
            time=self.time,
            zones={zid: replace(z) for zid, z in self.zones.items()},
            heater_duty=dict(self.heater_duty),
            fan_duty=dict(self.fan_duty),
            led_level=dict(self.led_level),
            servos={did: replace(s) for did, s in self.servos.items()},
            camera_recording_until=dict(self.camera_recording_until),
        )


def _zone_params(zone: Zone, topology: BuildingTopology) -> ZoneThermalParams:
    th = zone.thermal
    r_adj = {}
    my_floor = topology.floor_of(zone.id)
    overrides = th.get("r_adj_k_per_w", {})
    for nb in zone.neighbors:
        nb_zone = topology.zone(nb)
        nb_override = nb_zone.thermal.get("r_adj_k_per_w", {}).get(zone.id)
        mine = overrides.get(nb)
        if mine is not None and nb_override is not None and mine != nb_override:
            raise PlantError(
                f"zones {zone.id!r} and {nb!r} disagree on their r_adj override")
        if mine is not None or nb_override is not None:
            r_adj[nb] = mine if mine is not None else nb_override
        elif topology.floor_of(nb) == my_floor:
            r_adj[nb] = DEFAULT_R_ADJ_SAME_FLOOR
        else:
            r_adj[nb] = DEFAULT_R_ADJ_VERTICAL

    heater_power = sum(d.params.get("max_power_w", 0.0)
                       for d in zone.devices_of_type("heater"))
    fan_gain = sum(d.params.get("exchange_w_per_k", 0.0)
                   for d in zone.devices_of_type("fan"))
    return ZoneThermalParams(
        heat_capacity=th.get("heat_capacity_j_per_k", DEFAULT_HEAT_CAPACITY_J_PER_K),
        r_env=th.get("r_env_k_per_w", DEFAULT_R_ENV_K_PER_W),
        r_adj=r_adj,
        heater_max_power=heater_power,
        fan_exchange_gain=fan_gain,
        humidity_exchange_rate=th.get("humidity_exchange_per_s",
                                      DEFAULT_HUMIDITY_EXCHANGE_PER_S),
        fan_humidity_exchange_rate=th.get("fan_humidity_exchange_per_s",
                                          DEFAULT_FAN_HUMIDITY_EXCHANGE_PER_S),
        occupant_moisture_gain=th.get("occupant_moisture_pct_per_s",
                                      DEFAULT_OCCUPANT_MOISTURE_PCT_PER_S),
        occupant_heat_gain=th.get("occupant_heat_w", DEFAULT_OCCUPANT_HEAT_W),
    )


class Plant:
    """Owns the zone equations and actuator semantics for one building.

    The plant itself is stateless between calls: all mutable simulation
    state lives in PlantState, advanced by exactly one owner (the scenario
    orchestrator). Methods never touch wall-clock time or global RNG.
    """

    def __init__(self, topology: BuildingTopology, dt: float,
                 temp_noise: float = DEFAULT_TEMP_NOISE_C,
                 humidity_noise: float = DEFAULT_HUMIDITY_NOISE_PCT):
        if dt <= 0:
            raise PlantError("dt must be positive")
        self.topology = topology
        self.dt = dt
        self.temp_noise = temp_noise
        self.humidity_noise = humidity_noise
        self.params = {z.id: _zone_params(z, topology) for z in topology.all_zones()}
        self._check_stability(dt)

    def _check_stability(self, dt: float) -> None:
        # Forward Euler needs dt well under the fastest zone time constant,
        # including the worst case of every fan at full duty.
        for zid, p in self.params.items():
            g_max = 1.0 / p.r_env + sum(1.0 / r for r in p.r_adj.values())
            g_max += p.fan_exchange_gain
            tau = p.heat_capacity / g_max
            if dt >= 0.5 * tau:
                raise PlantError(
                    f"dt={dt} too large for zone {zid!r} "
                    f"(min time constant {tau:.1f} s); reduce dt or slow the zone")

    def initial_state(self, temperature: float, humidity: float,
                      time: float = 0.0) -> PlantState:
        zones = {z.id: ZoneState(temperature=temperature, humidity=humidity)
                 for z in self.topology.all_zones()}
        state = PlantState(time=time, zones=zones)
        for dev in self.topology.all_devices():
            if dev.device_type == "heater":
                state.heater_duty[dev.device_id] = 0.0
            elif dev.device_type == "fan":
                state.fan_duty[dev.device_id] = 0.0
            elif dev.device_type == "led_strip":
                state.led_level[dev.device_id] = 0.0
            elif dev.device_type in ("servo_door", "servo_window"):
                state.servos[dev.device_id] = ServoState()
            elif dev.device_type == "camera":
                state.camera_recording_until[dev.device_id] = -math.inf
        return state

    # ------------------------------------------------------------------
    # dynamics

    def step(self, state: PlantState, ambient: AmbientConditions,
             dt: float | None = None) -> PlantState:
        """Advance one forward-Euler step; returns a new state."""
        dt = self.dt if dt is None else dt
        if dt <= 0:
            raise PlantError("dt must be positive")
        nxt = state.clone()
        nxt.time = state.time + dt

        for zone in self.topology.all_zones():
            p = self.params[zone.id]
            zs = state.zones[zone.id]
            heat_w = (ambient.outdoor_temperature - zs.temperature) / p.r_env
            for nb, r in p.r_adj.items():
                heat_w += (state.zones[nb].temperature - zs.temperature) / r
            for dev in zone.devices_of_type("heater"):
                heat_w += state.heater_duty[dev.device_id] * dev.params["max_power_w"]
            fan_gain = sum(state.fan_duty[d.device_id] * d.params["exchange_w_per_k"]
                           for d in zone.devices_of_type("fan"))
            heat_w -= fan_gain * (zs.temperature - ambient.outdoor_temperature)
            heat_w += p.occupant_heat_gain * zs.occupant_count

            fan_duty = sum(state.fan_duty[d.device_id]
                           for d in zone.devices_of_type("fan"))
            dh = p.humidity_exchange_rate * (ambient.outdoor_humidity - zs.humidity)
            dh += p.occupant_moisture_gain * zs.occupant_count
            dh -= (p.fan_humidity_exchange_rate * fan_duty
                   * (zs.humidity - ambient.outdoor_humidity))

            nz = nxt.zones[zone.id]
            nz.temperature = zs.temperature + dt * heat_w / p.heat_capacity
            nz.humidity = min(100.0, max(0.0, zs.humidity + dt * dh))
            nz.pir_active = False
            if not (math.isfinite(nz.temperature) and math.isfinite(nz.humidity)):
                raise SimulationFault(f"non-finite state in zone {zone.id!r}")

        for dev_id, servo in nxt.servos.items():
            dev = self.topology.device(dev_id)
            rate = dt / dev.params["transit_time_s"]
            if servo.target == "open":
                servo.fraction = min(1.0, servo.fraction + rate)
            else:
                servo.fraction = max(0.0, servo.fraction - rate)
        return nxt

    # ------------------------------------------------------------------
    # sensing

    def read_sensors(self, state: PlantState, rng_seed: int) -> list[SensorReading]:
        """One reading per sensor device, with seeded additive noise.

        The same (state, seed) pair always yields identical readings.
        """
        rng = np.random.default_rng(abs(int(rng_seed)))
        readings: list[SensorReading] = []
        for zone in self.topology.all_zones():
            zs = state.zones[zone.id]
            for dev in zone.devices:
                if dev.device_type == "temp_humidity_sensor":
                    t_noise = rng.uniform(-self.temp_noise, self.temp_noise)
                    h_noise = rng.uniform(-self.humidity_noise, self.humidity_noise)
                    readings.append(SensorReading(
                        dev.device_id, "temperature",
                        zs.temperature + t_noise, state.time, zone.id))
                    readings.append(SensorReading(
                        dev.device_id, "humidity",
                        min(100.0, max(0.0, zs.humidity + h_noise)),
                        state.time, zone.id))
                elif dev.device_type == "pir_sensor":
                    readings.append(SensorReading(
                        dev.device_id, "motion", zs.pir_active, state.time, zone.id))
                elif dev.device_type in ("servo_door", "servo_window"):
                    kind = ("door_state" if dev.device_type == "servo_door"
                            else "window_state")
                    readings.append(SensorReading(
                        dev.device_id, kind,
                        state.servos[dev.device_id].fraction, state.time, zone.id))
        return readings

    # ------------------------------------------------------------------
    # actuation

    def apply_actuation(self, state: PlantState,
                        command: "ActuatorCommand") -> PlantState:
        """Apply one pre-saturated command; out-of-range values are rejected,
        never clamped, because commands are controller output."""
        nxt = state.clone()
        self._apply_in_place(nxt, command)
        return nxt

    def apply_batch(self, state: PlantState, commands) -> tuple[PlantState, list]:
        """Apply a tick's worth of commands in order on one state copy;
        returns the new state and any per-command rejections."""
        nxt = state.clone()
        errors = []
        for command in commands:
            try:
                self._apply_in_place(nxt, command)
            except ActuationError as exc:
                errors.append((command, exc))
        return nxt, errors

    def _apply_in_place(self, nxt: PlantState, command: "ActuatorCommand") -> None:
        try:
            dev = self.topology.device(command.device_id)
        except Exception:
            raise ActuationError(f"unknown device {command.device_id!r}") from None

        if dev.device_type in ("heater", "fan"):
            if command.action != "duty":
                raise ActuationError(
                    f"device {dev.device_id!r} accepts duty commands only")
            duty = float(command.value)
            if not 0.0 <= duty <= 1.0:
                raise ActuationError(
                    f"duty {duty} for {dev.device_id!r} outside [0, 1]")
            if dev.device_type == "heater":
                nxt.heater_duty[dev.device_id] = duty
            else:
                nxt.fan_duty[dev.device_id] = duty
        elif dev.device_type == "led_strip":
            if command.action != "level":
                raise ActuationError(
                    f"device {dev.device_id!r} accepts level commands only")
            level = float(command.value)
            if not 0.0 <= level <= 1.0:
                raise ActuationError(
                    f"level {level} for {dev.device_id!r} outside [0, 1]")
            nxt.led_level[dev.device_id] = level
        elif dev.device_type in ("servo_door", "servo_window"):
            if command.action != "position" or command.value not in ("open", "closed"):
                raise ActuationError(
                    f"device {dev.device_id!r} accepts position open|closed only")
            nxt.servos[dev.device_id].target = str(command.value)
        else:
            raise ActuationError(
                f"device {dev.device_id!r} ({dev.device_type}) is not an actuator")

    # ------------------------------------------------------------------
    # occupancy and events

    def advance_occupancy(self, state: PlantState, driver,
                          dt: float | None = None) -> PlantState:
        """Let an occupancy driver (script runner or stochastic model) update
        occupant counts; marks PIR activity where counts changed or a motion
        pulse fired."""
        dt = self.dt if dt is None else dt
        nxt = state.clone()
        for zs in nxt.zones.values():
            zs.pir_active = False
        for zone_id, delta, is_pulse in driver.events_at(nxt.time, dt, self.topology):
            if zone_id not in nxt.zones:
                raise PlantError(f"occupancy event references unknown zone {zone_id!r}")
            zs = nxt.zones[zone_id]
            if is_pulse:
                zs.pir_active = True
            elif delta != 0:
                zs.occupant_count = max(0, zs.occupant_count + delta)
                zs.pir_active = True
        return nxt

    def camera_events(self, state: PlantState) -> list[CameraEvent]:
        """One event per camera whose co-located PIR fired this tick; the
        camera then records for a short hold window. No video payload."""
        events = []
        for zone in self.topology.all_zones():
            if not state.zones[zone.id].pir_active:
                continue
            for dev in zone.devices_of_type("camera"):
                events.append(CameraEvent(dev.device_id, zone.id, state.time))
                state.camera_recording_until[dev.device_id] = (
                    state.time + CAMERA_RECORD_HOLD_S)
        return events

    # ------------------------------------------------------------------
    # energy

    def electrical_power(self, state: PlantState) -> tuple[dict[str, float], float]:
        """Per-device electrical draw in watts and the building total.

        LED strips use a linear dimming model (level * V_max * I_max);
        heaters and fans scale their rated power by duty.
        """
        breakdown: dict[str, float] = {}
        for dev in self.topology.all_devices():
            if dev.device_type == "heater":
                breakdown[dev.device_id] = (
                    state.heater_duty[dev.device_id] * dev.params["max_power_w"])
            elif dev.device_type == "fan":
                breakdown[dev.device_id] = (
                    state.fan_duty[dev.device_id] * dev.params["rated_power_w"])
            elif dev.device_type == "led_strip":
                breakdown[dev.device_id] = (
                    state.led_level[dev.device_id]
                    * dev.params["voltage_max_v"] * dev.params["max_current_a"])
        return breakdown, sum(breakdown.values())
