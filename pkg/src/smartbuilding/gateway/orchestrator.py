"""Scenario runner: boots broker, plant, per-floor controllers and the
telemetry ingester, advances the simulation on the 5 s tick, and writes the
run report.

Everything runs in one process on the in-process broker transport by
default; fast mode and realtime mode produce identical trajectories, the
only difference is wall-clock pacing.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time as wall_time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ..broker import LocalClient, MessageBroker, decode_json
from ..control import (
    ActuatorCommand,
    FloorController,
    LightingPolicy,
    MpcConfig,
    SetpointSchedule,
    ZoneModel,
    identify_model,
)
from ..plant import AmbientConditions, Plant
from ..scenario import Scenario, load_scenario
from ..topology import BuildingTopology, load_topology

DEFAULT_SPEEDUP = 1.0


class OrchestratorError(Exception):
    """Configuration or boot failure."""


# ----------------------------------------------------------------------
# controller configuration file

def _parse_tod(value) -> float:
    if isinstance(value, (int, float)):
        return float(value)
    parts = str(value).split(":")
    if len(parts) not in (2, 3):
        raise OrchestratorError(f"bad time-of-day {value!r}; use HH:MM[:SS]")
    h, m = int(parts[0]), int(parts[1])
    s = int(parts[2]) if len(parts) == 3 else 0
    return float(h * 3600 + m * 60 + s)


@dataclass(frozen=True)
class IdentSettings:
    bootstrap_ticks: int = 360
    prbs_hold_ticks: int = 4
    heat_level: float = 0.9
    fan_level: float = 0.7
    residual_threshold_c: float = 0.6


@dataclass
class ControllerSettings:
    mpc: MpcConfig = field(default_factory=MpcConfig)
    ident: IdentSettings = field(default_factory=IdentSettings)
    schedule: SetpointSchedule = field(
        default_factory=lambda: SetpointSchedule.constant(22.0, 55.0))
    floor_schedules: dict[int, SetpointSchedule] = field(default_factory=dict)
    lighting: LightingPolicy = field(default_factory=LightingPolicy)
    hysteresis_c: float = 0.2
    lock_doors_at: float | None = None
    filter_alpha: float = 0.45

    def schedule_for(self, floor_index: int) -> SetpointSchedule:
        return self.floor_schedules.get(floor_index, self.schedule)


def _parse_schedule(raw: list) -> SetpointSchedule:
    entries = tuple(
        (_parse_tod(e["time_of_day"]), float(e["temperature_c"]),
         float(e["humidity_pct"]))
        for e in raw)
    return SetpointSchedule(entries=entries)


def load_controller_settings(source: str | None) -> ControllerSettings:
    settings = ControllerSettings()
    if not source:
        return settings
    doc = yaml.safe_load(source) or {}
    if "mpc" in doc:
        settings.mpc = MpcConfig(**doc["mpc"])
    if "identification" in doc:
        settings.ident = IdentSettings(**doc["identification"])
    if "schedule" in doc:
        settings.schedule = _parse_schedule(doc["schedule"])
    if "lighting" in doc:
        raw = dict(doc["lighting"])
        settings.lighting = LightingPolicy(
            mode=raw.get("mode", "presence"),
            mimic_jitter_s=float(raw.get("mimic_jitter_s", 0.0)),
            on_level=float(raw.get("on_level", 1.0)),
            hold_s=float(raw.get("hold_s", 120.0)),
        )
    for key, floor_doc in (doc.get("floors") or {}).items():
        if "schedule" in floor_doc:
            settings.floor_schedules[int(key)] = _parse_schedule(floor_doc["schedule"])
    if "hysteresis_c" in doc:
        settings.hysteresis_c = float(doc["hysteresis_c"])
    if "measurement_filter_alpha" in doc:
        settings.filter_alpha = float(doc["measurement_filter_alpha"])
    if doc.get("lock_doors_at") is not None:
        settings.lock_doors_at = _parse_tod(doc["lock_doors_at"])
    return settings


# ----------------------------------------------------------------------
# offline identification bootstrap

def bootstrap_models(plant: Plant, scenario: Scenario,
                     ident: IdentSettings) -> dict[str, ZoneModel]:
    """Open-loop PRBS excitation run, then a least-squares fit per
    climate-controlled zone. Runs on commissioning-grade (noise-free)
    state data before the closed loop starts."""
    topology = plant.topology
    # start the commissioning run from a humidified state so the fan's
    # drying authority is observable even under flat ambient humidity
    boot_humidity = (scenario.initial_humidity + 10.0
                     if scenario.initial_humidity <= 85.0
                     else scenario.initial_humidity - 10.0)
    state = plant.initial_state(scenario.initial_temperature, boot_humidity)
    zones = topology.climate_zones()
    rngs = {z.id: np.random.default_rng([abs(scenario.seed), 77, i])
            for i, z in enumerate(zones)}
    duties = {z.id: (0.0, 0.0) for z in zones}
    history: dict[str, list] = {z.id: [] for z in zones}

    for k in range(ident.bootstrap_ticks):
        t = k * plant.dt
        ambient = scenario.ambient.at(t, scenario.time_of_day(t))
        if k % ident.prbs_hold_ticks == 0:
            for z in zones:
                rng = rngs[z.id]
                duties[z.id] = (
                    ident.heat_level if rng.random() < 0.5 else 0.0,
                    ident.fan_level if rng.random() < 0.5 else 0.0,
                )
        for z in zones:
            u_h, u_f = duties[z.id]
            for dev in z.devices_of_type("heater"):
                state.heater_duty[dev.device_id] = u_h
            for dev in z.devices_of_type("fan"):
                state.fan_duty[dev.device_id] = u_f
            zs = state.zones[z.id]
            history[z.id].append((zs.temperature, zs.humidity, u_h, u_f,
                                  ambient.outdoor_temperature,
                                  ambient.outdoor_humidity))
        state = plant.step(state, ambient)

    models = {}
    for z in zones:
        models[z.id] = identify_model(history[z.id])
    return models


# ----------------------------------------------------------------------
# per-floor controller agent (broker-facing shell around FloorController)

class _FloorAgent:
    def __init__(self, host: "SimulationHost", floor_index: int,
                 controller: FloorController):
        self.host = host
        self.floor_index = floor_index
        self.controller = controller
        self._lock = threading.Lock()
        self._readings: list[dict] = []
        self._requests: list[dict] = []
        self._ambient_t: float | None = None
        self._ambient_h: float | None = None
        self._tod = 0.0
        client_id = f"controller_f{floor_index}"
        self.client = LocalClient(host.broker, client_id)
        self.client.subscribe(f"sb/f{floor_index}/+/+/reading", self._on_reading)
        self.client.subscribe("sb/env/ambient", self._on_ambient)
        self.client.subscribe(f"sb/user/f{floor_index}", self._on_request)

    def _on_reading(self, message) -> None:
        with self._lock:
            self._readings.append(decode_json(message))

    def _on_ambient(self, message) -> None:
        doc = decode_json(message)
        with self._lock:
            if doc.get("metric") == "outdoor_temperature":
                self._ambient_t = float(doc["value"])
                self._tod = float(doc.get("time_of_day", 0.0))
            elif doc.get("metric") == "outdoor_humidity":
                self._ambient_h = float(doc["value"])

    def _on_request(self, message) -> None:
        with self._lock:
            self._requests.append(decode_json(message))

    def tick(self, tick: int, sim_time: float) -> None:
        with self._lock:
            readings, self._readings = self._readings, []
            requests, self._requests = self._requests, []
            ambient = AmbientConditions(
                outdoor_temperature=self._ambient_t if self._ambient_t is not None else 0.0,
                outdoor_humidity=self._ambient_h if self._ambient_h is not None else 50.0,
                time_of_day=self._tod,
            )
        commands, events, diag = self.controller.on_tick(
            tick, sim_time, ambient, readings, requests)

        for cmd in commands:
            zone_id = self.host.topology.device(cmd.device_id).zone_id
            self.client.publish(
                f"sb/f{self.floor_index}/{zone_id}/{cmd.device_id}/cmd",
                cmd.payload(), timestamp=sim_time)
        for event in events:
            payload = dict(event)
            payload.setdefault("metric", payload.pop("kind", "event"))
            payload.setdefault("value", payload.get("position", True))
            self.client.publish("sb/events/door", payload, timestamp=sim_time)
        for zone_id, (t_ref, h_ref) in list(diag.setpoints.items())[:1]:
            base = {"device_id": f"controller_f{self.floor_index}",
                    "zone_id": "", "timestamp": sim_time}
            self.client.publish("sb/events/setpoint",
                                {**base, "metric": "setpoint_temperature",
                                 "value": t_ref}, timestamp=sim_time)
            self.client.publish("sb/events/setpoint",
                                {**base, "metric": "setpoint_humidity",
                                 "value": h_ref}, timestamp=sim_time)
        for j, note in enumerate(diag.notes):
            self.client.publish("sb/events/note", {
                "device_id": f"controller_f{self.floor_index}", "zone_id": "",
                "timestamp": sim_time, "metric": f"note_{j}", "value": note,
            }, timestamp=sim_time)
        self.client.publish("sb/events/tick", {
            "device_id": f"controller_f{self.floor_index}", "zone_id": "",
            "timestamp": sim_time, "metric": "tick",
            "value": float(diag.n_commands),
        }, timestamp=sim_time)
        self.host.diagnostics.append(diag)


# ----------------------------------------------------------------------

@dataclass
class FaultInjection:
    floor: int
    at_tick: int


class SimulationHost:
    """Owns the tick loop and all component wiring for one scenario run."""

    def __init__(self, topology: BuildingTopology, scenario: Scenario,
                 settings: ControllerSettings | None = None,
                 controller_kind: str = "mpc",
                 wal_path: str | None = None,
                 fault: FaultInjection | None = None,
                 models: dict[str, ZoneModel] | None = None):
        from ..telemetry import TelemetryStore

        self.topology = topology
        self.scenario = scenario
        self.settings = settings or ControllerSettings()
        self.controller_kind = controller_kind
        self.fault = fault
        self.broker = MessageBroker()
        self.store = TelemetryStore(wal_path)
        self.plant = Plant(topology, dt=scenario.dt_s)
        self.diagnostics: list = []
        self.truth_rows: list[dict] = []
        self.energy_wh = 0.0
        self.tick_index = 0
        self.paused = False
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

        if controller_kind == "mpc" and models is None:
            models = bootstrap_models(self.plant, scenario, self.settings.ident)
        self.models = models or {}

        self.state = self.plant.initial_state(scenario.initial_temperature,
                                              scenario.initial_humidity)
        for zone_id, count in scenario.initial_occupancy.items():
            self.state.zones[zone_id].occupant_count = count
        self.occupancy = scenario.make_occupancy_driver(topology)

        # telemetry ingester: subscribes to everything on the bus
        self._ingest_client = LocalClient(self.broker, "telemetry")
        self._ingest_client.subscribe("sb/#", lambda m: self.store.ingest(m))

        # plant-side device agent: collects commands, applied each tick
        self._pending_commands: list[ActuatorCommand] = []
        self._cmd_lock = threading.Lock()
        self._plant_client = LocalClient(self.broker, "plant")
        self._plant_client.subscribe("sb/+/+/+/cmd", self._on_command)

        self.agents: dict[int, _FloorAgent] = {}
        for floor in topology.floors:
            controller = FloorController(
                floor_index=floor.index,
                zones=list(floor.zones),
                models=self.models,
                schedule=self.settings.schedule_for(floor.index),
                mpc_cfg=self.settings.mpc,
                lighting_policy=self.settings.lighting,
                seed=scenario.seed,
                controller=controller_kind,
                hysteresis=self.settings.hysteresis_c,
                lock_doors_at_tod=self.settings.lock_doors_at,
                filter_alpha=self.settings.filter_alpha,
            )
            self.agents[floor.index] = _FloorAgent(self, floor.index, controller)

        self._gateway_client = LocalClient(self.broker, "gateway")

    # ------------------------------------------------------------------

    def _on_command(self, message) -> None:
        with self._cmd_lock:
            self._pending_commands.append(
                ActuatorCommand.from_payload(decode_json(message)))

    @property
    def sim_time(self) -> float:
        return self.tick_index * self.scenario.dt_s

    def _noise_seed(self, tick: int) -> int:
        return (abs(self.scenario.seed) * 1_000_003 + tick) & 0x7FFFFFFF

    def tick(self) -> None:
        """Advance the whole system by one 5 s period."""
        k = self.tick_index
        t = self.state.time
        tod = self.scenario.time_of_day(t)
        ambient = self.scenario.ambient.at(t, tod)

        self.state = self.plant.advance_occupancy(self.state, self.occupancy)

        for metric, value in (("outdoor_temperature", ambient.outdoor_temperature),
                              ("outdoor_humidity", ambient.outdoor_humidity)):
            self._plant_client.publish("sb/env/ambient", {
                "device_id": "ambient", "metric": metric, "value": value,
                "timestamp": t, "zone_id": "outdoor", "time_of_day": tod,
            }, timestamp=t)

        for reading in self.plant.read_sensors(self.state, self._noise_seed(k)):
            floor = self.topology.floor_of(reading.zone_id)
            self._plant_client.publish(
                f"sb/f{floor}/{reading.zone_id}/{reading.device_id}/reading",
                {"device_id": reading.device_id, "kind": reading.kind,
                 "value": reading.value, "timestamp": reading.timestamp,
                 "zone_id": reading.zone_id},
                timestamp=t)

        for dev in self.topology.all_devices():
            if dev.device_type == "heater":
                metric, value = "duty", self.state.heater_duty[dev.device_id]
            elif dev.device_type == "fan":
                metric, value = "duty", self.state.fan_duty[dev.device_id]
            elif dev.device_type == "led_strip":
                metric, value = "level", self.state.led_level[dev.device_id]
            else:
                continue
            floor = self.topology.floor_of(dev.zone_id)
            self._plant_client.publish(
                f"sb/f{floor}/{dev.zone_id}/{dev.device_id}/status",
                {"device_id": dev.device_id, "metric": metric, "value": value,
                 "timestamp": t, "zone_id": dev.zone_id},
                timestamp=t)

        for floor_index in sorted(self.agents):
            if (self.fault is not None and self.fault.floor == floor_index
                    and k >= self.fault.at_tick):
                continue
            self.agents[floor_index].tick(k, t)

        with self._cmd_lock:
            pending, self._pending_commands = self._pending_commands, []
        self.state, rejected = self.plant.apply_batch(self.state, pending)
        for cmd, exc in rejected:
            self._plant_client.publish("sb/events/note", {
                "device_id": "plant", "zone_id": "", "timestamp": t,
                "metric": f"actuation_error_{cmd.device_id}",
                "value": str(exc)}, timestamp=t)

        for event in self.plant.camera_events(self.state):
            self._plant_client.publish("sb/events/camera", {
                "device_id": event.device_id, "zone_id": event.zone_id,
                "timestamp": event.timestamp, "metric": "camera",
                "value": True}, timestamp=t)

        breakdown, total_w = self.plant.electrical_power(self.state)
        self._plant_client.publish("sb/energy",
                                   {"timestamp": t, "total_w": total_w},
                                   timestamp=t)
        self.energy_wh += total_w * self.scenario.dt_s / 3600.0

        for zone in self.topology.all_zones():
            zs = self.state.zones[zone.id]
            heat = sum(self.state.heater_duty[d.device_id]
                       for d in zone.devices_of_type("heater"))
            fan = sum(self.state.fan_duty[d.device_id]
                      for d in zone.devices_of_type("fan"))
            led = sum(self.state.led_level[d.device_id]
                      for d in zone.devices_of_type("led_strip"))
            self.truth_rows.append({
                "time_s": t, "zone": zone.id,
                "floor": self.topology.floor_of(zone.id),
                "temperature_c": zs.temperature, "humidity_pct": zs.humidity,
                "occupants": zs.occupant_count, "heater_duty": heat,
                "fan_duty": fan, "led_level": led,
            })

        self.state = self.plant.step(self.state, ambient)
        self.store.flush()
        self.tick_index += 1

    def run(self) -> None:
        """Fast mode: advance all ticks back to back."""
        while self.tick_index < self.scenario.ticks:
            self.tick()
        self.store.flush()

    def run_realtime(self, speedup: float = DEFAULT_SPEEDUP) -> None:
        """Realtime mode: same trajectory, paced to dt/speedup per tick."""
        period = self.scenario.dt_s / speedup
        while self.tick_index < self.scenario.ticks and not self._stop.is_set():
            started = wall_time.monotonic()
            if not self.paused:
                self.tick()
            elapsed = wall_time.monotonic() - started
            self._stop.wait(max(0.0, period - elapsed))
        self.store.flush()

    def start_realtime(self, speedup: float = DEFAULT_SPEEDUP) -> threading.Thread:
        self._thread = threading.Thread(
            target=self.run_realtime, args=(speedup,), daemon=True,
            name="sim-tick-loop")
        self._thread.start()
        return self._thread

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5.0)
        self.store.close()

    # ------------------------------------------------------------------
    # user requests, entering through the broker only

    def request_setpoint(self, floor: int, t_ref: float, h_ref: float,
                         expires_at: float | None = None) -> None:
        if floor not in self.agents:
            raise KeyError(f"no floor {floor}")
        payload = {"type": "setpoint", "t_ref": t_ref, "h_ref": h_ref}
        if expires_at is not None:
            payload["expires_at"] = expires_at
        self._gateway_client.publish(f"sb/user/f{floor}", payload,
                                     timestamp=self.sim_time)

    def request_light(self, device_id: str, level: float) -> None:
        floor = self.topology.floor_of(self.topology.device(device_id).zone_id)
        self._gateway_client.publish(f"sb/user/f{floor}", {
            "type": "light", "device_id": device_id, "level": level,
        }, timestamp=self.sim_time)

    def request_door(self, device_id: str, position: str) -> None:
        floor = self.topology.floor_of(self.topology.device(device_id).zone_id)
        self._gateway_client.publish(f"sb/user/f{floor}", {
            "type": "door", "device_id": device_id, "position": position,
        }, timestamp=self.sim_time)

    def request_away(self, on: bool) -> None:
        for floor in self.agents:
            self._gateway_client.publish(f"sb/user/f{floor}",
                                         {"type": "away", "on": on},
                                         timestamp=self.sim_time)


# ----------------------------------------------------------------------
# whole-run entry points

def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    digest.update(path.read_bytes())
    return digest.hexdigest()


def run_scenario(topology_src: str, scenario_src: str,
                 settings_src: str | None = None, out_dir: str | Path | None = None,
                 mode: str = "fast", controller_kind: str = "mpc",
                 fault: FaultInjection | None = None,
                 seed_override: int | None = None,
                 speedup: float = DEFAULT_SPEEDUP,
                 write_figures: bool = True) -> dict:
    """Run one scenario end to end and write the run report.

    Returns the report dict; when out_dir is given, also writes the truth
    CSV, the telemetry archive, diagnostics, report.json and the figures.
    """
    from . import report as report_mod

    if mode not in ("fast", "realtime"):
        raise OrchestratorError(f"unknown mode {mode!r}")
    topology = load_topology(topology_src)
    scenario = load_scenario(scenario_src)
    if seed_override is not None:
        from dataclasses import replace
        scenario = replace(scenario, seed=seed_override)
    settings = load_controller_settings(settings_src)

    out_path: Path | None = None
    wal_path = None
    if out_dir is not None:
        out_path = Path(out_dir)
        out_path.mkdir(parents=True, exist_ok=True)
        wal_path = str(out_path / "telemetry.wal.jsonl")
        if Path(wal_path).exists():
            Path(wal_path).unlink()

    host = SimulationHost(topology, scenario, settings,
                          controller_kind=controller_kind,
                          wal_path=wal_path, fault=fault)
    started = wall_time.monotonic()
    if mode == "realtime":
        host.run_realtime(speedup)
    else:
        host.run()
    elapsed = wall_time.monotonic() - started

    report = report_mod.build_report(host, controller_kind=controller_kind,
                                     runtime_s=elapsed)
    if out_path is not None:
        report_mod.write_outputs(host, report, out_path,
                                 write_figures=write_figures)
        archive = out_path / "telemetry_archive.tsv"
        report["archive_path"] = str(archive)
        report["archive_sha256"] = _sha256(archive)
        (out_path / "report.json").write_text(
            json.dumps(report, indent=2, sort_keys=True))
    host.store.close()
    return report


def compare_controllers(topology_src: str, scenario_src: str,
                        settings_src: str | None = None,
                        out_dir: str | Path | None = None,
                        write_figures: bool = True) -> dict:
    """Run the scenario twice under the same seed (MPC vs bang-bang
    baseline) and report comfort error and energy for both."""
    rows = {}
    for kind in ("mpc", "baseline"):
        sub_dir = Path(out_dir) / kind if out_dir is not None else None
        rows[kind] = run_scenario(topology_src, scenario_src, settings_src,
                                  out_dir=sub_dir, controller_kind=kind,
                                  write_figures=write_figures)
    comparison = {
        "rows": {
            kind: {
                "controller": kind,
                "energy_wh": rows[kind]["energy_wh"],
                "mean_temperature_error_pct": rows[kind]["mean_temperature_error_pct"],
                "mean_humidity_error_pct": rows[kind]["mean_humidity_error_pct"],
            } for kind in rows
        },
        "reports": rows,
    }
    if out_dir is not None:
        out_path = Path(out_dir)
        out_path.mkdir(parents=True, exist_ok=True)
        lines = ["controller,energy_wh,mean_temperature_error_pct,"
                 "mean_humidity_error_pct"]
        for kind, row in comparison["rows"].items():
            lines.append(f"{kind},{row['energy_wh']:.6f},"
                         f"{row['mean_temperature_error_pct']:.6f},"
                         f"{row['mean_humidity_error_pct']:.6f}")
        (out_path / "comparison.csv").write_text("\n".join(lines) + "\n")
        (out_path / "comparison.json").write_text(
            json.dumps(comparison["rows"], indent=2, sort_keys=True))
    return comparison
