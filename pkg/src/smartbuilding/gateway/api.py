"""Web face of the building: JSON API over the telemetry store and control
inputs, plus a WebSocket stream that pushes records to dashboard clients.

Mutating endpoints never touch plant state directly; they publish user
requests onto the broker for the floor controllers to consume.
"""

from __future__ import annotations

import asyncio
import itertools
import threading
import time as wall_time
from collections import deque

from fastapi import FastAPI, HTTPException, Query, WebSocket
from pydantic import BaseModel

from ..control.policies import SetpointSchedule, PolicyError
from ..telemetry import QueryRange, TelemetryError, TelemetryRecord

DEFAULT_HEARTBEAT_S = 10.0
STREAM_BUFFER_DEPTH = 4096
_POLL_S = 0.02


def record_json(r: TelemetryRecord) -> dict:
    return {
        "id": r.id, "timestamp": r.timestamp, "class": r.record_class,
        "device_id": r.device_id, "zone_id": r.zone_id, "floor": r.floor,
        "metric": r.metric, "value": r.value,
    }


class SetpointBody(BaseModel):
    zone: str | None = None
    floor: int | None = None
    t_ref: float
    h_ref: float
    expires_in_s: float | None = None


class LightBody(BaseModel):
    device: str
    level: float


class DoorBody(BaseModel):
    device: str
    position: str


class AwayBody(BaseModel):
    on: bool


class _StreamSession:
    _ids = itertools.count(1)

    def __init__(self, filters: dict):
        self.id = next(self._ids)
        self.filters = filters
        self.buffer: deque[dict] = deque()
        self.overflowed = False
        self.lock = threading.Lock()

    def matches(self, r: TelemetryRecord) -> bool:
        f = self.filters
        if f.get("floor") is not None and r.floor != f["floor"]:
            return False
        if f.get("zone") is not None and r.zone_id != f["zone"]:
            return False
        if f.get("device") is not None and r.device_id != f["device"]:
            return False
        if f.get("metric") is not None and r.metric != f["metric"]:
            return False
        if f.get("record_class") is not None and r.record_class != f["record_class"]:
            return False
        return True

    def push(self, r: TelemetryRecord) -> None:
        with self.lock:
            if len(self.buffer) >= STREAM_BUFFER_DEPTH:
                self.overflowed = True
                return
            self.buffer.append(record_json(r))

    def drain(self) -> tuple[list[dict], bool]:
        with self.lock:
            items = list(self.buffer)
            self.buffer.clear()
            return items, self.overflowed


def create_app(host, heartbeat_s: float = DEFAULT_HEARTBEAT_S,
               ui_dir: str | None = None) -> FastAPI:
    """Build the /api/v1 application over a live or completed run host;
    ui_dir optionally mounts a built dashboard at the root."""
    app = FastAPI(title="smartbuilding gateway", version="1")
    from fastapi.middleware.cors import CORSMiddleware
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    topology = host.topology
    store = host.store
    sessions: list[_StreamSession] = []
    sessions_lock = threading.Lock()

    def fanout(record: TelemetryRecord) -> None:
        with sessions_lock:
            live = list(sessions)
        for session in live:
            if session.matches(record):
                session.push(record)

    store.add_listener(fanout)

    def _zone_or_404(zone_id: str):
        for z in topology.all_zones():
            if z.id == zone_id:
                return z
        raise HTTPException(404, f"unknown zone {zone_id!r}")

    def _device_or_404(device_id: str):
        try:
            return topology.device(device_id)
        except Exception:
            raise HTTPException(404, f"unknown device {device_id!r}") from None

    # ------------------------------------------------------------------

    @app.get("/api/v1/building")
    def building_summary():
        return {
            "name": topology.name,
            "floors": [
                {
                    "index": f.index,
                    "zones": [
                        {
                            "id": z.id, "kind": z.kind,
                            "climate_controlled": z.climate_controlled,
                            "neighbors": list(z.neighbors),
                            "devices": [
                                {"id": d.device_id, "type": d.device_type}
                                for d in z.devices
                            ],
                        } for z in f.zones
                    ],
                } for f in topology.floors
            ],
        }

    @app.get("/api/v1/state/latest")
    def latest_state():
        zones = {}
        for z in topology.all_zones():
            latest = store.latest(zone=z.id)
            zones[z.id] = {
                f"{device}:{metric}" if metric in ("duty", "level") else metric:
                    record_json(r)
                for (device, metric), r in sorted(latest.items())
            }
        setpoints = {
            r.device_id: record_json(r)
            for (_, _), r in sorted(store.latest(metric="setpoint_temperature").items())
        }
        return {"time": host.sim_time, "zones": zones, "setpoints": setpoints}

    @app.get("/api/v1/state/latest/{zone_id}/{metric}")
    def latest_metric(zone_id: str, metric: str):
        _zone_or_404(zone_id)
        latest = store.latest(zone=zone_id, metric=metric)
        if not latest:
            raise HTTPException(404,
                                f"no {metric!r} series for zone {zone_id!r}")
        newest = max(latest.values(), key=lambda r: (r.timestamp, r.id))
        return record_json(newest)

    @app.get("/api/v1/telemetry")
    def telemetry(start: float, end: float,
                  floor: int | None = None, zone: str | None = None,
                  device: str | None = None, metric: str | None = None,
                  record_class: str | None = Query(default=None, alias="class"),
                  max_points: int | None = None):
        try:
            rng = QueryRange(start=start, end=end, floor=floor, zone=zone,
                             device=device, metric=metric,
                             record_class=record_class, max_points=max_points)
        except TelemetryError as exc:
            raise HTTPException(400, str(exc)) from None
        return {"records": [record_json(r) for r in store.query(rng)]}

    @app.get("/api/v1/energy")
    def energy(start: float = 0.0, end: float = float("inf")):
        rng = QueryRange(start=start, end=end, record_class="energy")
        records = store.query(rng)
        dt = host.scenario.dt_s
        total_wh = sum(float(r.value) for r in records) * dt / 3600.0
        return {
            "start": start, "end": min(end, host.sim_time),
            "samples": len(records),
            "total_wh": total_wh,
            "series": [{"timestamp": r.timestamp, "total_w": r.value}
                       for r in records],
        }

    # ------------------------------------------------------------------
    # mutations: translated to broker-published control inputs

    @app.post("/api/v1/setpoint")
    def set_setpoint(body: SetpointBody):
        if body.zone is not None:
            zone = _zone_or_404(body.zone)
            if not zone.climate_controlled:
                raise HTTPException(
                    409, f"zone {zone.id!r} has no climate control")
            floor = topology.floor_of(zone.id)
        elif body.floor is not None:
            if body.floor not in {f.index for f in topology.floors}:
                raise HTTPException(404, f"unknown floor {body.floor}")
            floor = body.floor
        else:
            raise HTTPException(400, "setpoint needs a zone or a floor")
        ttl = body.expires_in_s if body.expires_in_s is not None else 7200.0
        expires_at = host.sim_time + ttl
        try:
            # same validation the controller applies; fail fast with a reason
            SetpointSchedule.constant(22.0, 55.0).with_override(
                body.t_ref, body.h_ref, expires_at)
        except PolicyError as exc:
            raise HTTPException(409, str(exc)) from None
        try:
            host.request_setpoint(floor, body.t_ref, body.h_ref, expires_at)
        except NotImplementedError as exc:
            raise HTTPException(409, str(exc)) from None
        return {"status": "accepted", "floor": floor, "expires_at": expires_at}

    @app.post("/api/v1/light")
    def set_light(body: LightBody):
        device = _device_or_404(body.device)
        if device.device_type != "led_strip":
            raise HTTPException(409,
                                f"device {body.device!r} is not an LED strip")
        if not 0.0 <= body.level <= 1.0:
            raise HTTPException(409, "light level must lie in [0, 1]")
        try:
            host.request_light(body.device, body.level)
        except NotImplementedError as exc:
            raise HTTPException(409, str(exc)) from None
        return {"status": "accepted"}

    @app.post("/api/v1/door")
    def set_door(body: DoorBody):
        device = _device_or_404(body.device)
        if device.device_type not in ("servo_door", "servo_window"):
            raise HTTPException(409,
                                f"device {body.device!r} is not a door or window")
        if body.position not in ("open", "closed"):
            raise HTTPException(409, "position must be 'open' or 'closed'")
        try:
            host.request_door(body.device, body.position)
        except NotImplementedError as exc:
            raise HTTPException(409, str(exc)) from None
        return {"status": "accepted"}

    @app.post("/api/v1/away")
    def set_away(body: AwayBody):
        try:
            host.request_away(body.on)
        except NotImplementedError as exc:
            raise HTTPException(409, str(exc)) from None
        return {"status": "accepted", "away": body.on}

    # ------------------------------------------------------------------
    # stream

    @app.websocket("/api/v1/stream")
    async def stream(ws: WebSocket):
        await ws.accept()
        params = ws.query_params
        filters = {
            "floor": int(params["floor"]) if "floor" in params else None,
            "zone": params.get("zone"),
            "device": params.get("device"),
            "metric": params.get("metric"),
            "record_class": params.get("class"),
        }
        if filters["zone"] is not None and not any(
                z.id == filters["zone"] for z in topology.all_zones()):
            await ws.close(code=1008, reason=f"unknown zone {filters['zone']!r}")
            return
        session = _StreamSession(filters)
        with sessions_lock:
            sessions.append(session)
        await ws.send_json({"kind": "hello", "session": session.id})
        last_sent = wall_time.monotonic()
        try:
            while True:
                items, overflowed = session.drain()
                if overflowed:
                    await ws.close(code=1013, reason="slow consumer")
                    return
                for item in items:
                    await ws.send_json(item)
                    last_sent = wall_time.monotonic()
                now = wall_time.monotonic()
                if now - last_sent >= heartbeat_s:
                    await ws.send_json({"kind": "heartbeat", "time": host.sim_time})
                    last_sent = now
                await asyncio.sleep(_POLL_S)
        except Exception:
            pass
        finally:
            with sessions_lock:
                if session in sessions:
                    sessions.remove(session)

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


class OfflineRunHost:
    """Read-only host over a completed run directory: GET endpoints work,
    mutations are rejected because no controller is listening."""

    def __init__(self, store, topology, scenario):
        self.store = store
        self.topology = topology
        self.scenario = scenario

    @property
    def sim_time(self) -> float:
        records = self.store.all_records()
        return records[-1].timestamp if records else 0.0

    def _reject(self, *_args, **_kwargs):
        raise NotImplementedError("run is not live; commands need a running scenario")

    request_setpoint = _reject
    request_light = _reject
    request_door = _reject
    request_away = _reject
