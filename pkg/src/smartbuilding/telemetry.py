"""Telemetry persistence: validates bus messages, appends them to a
file-backed store, and answers time-range queries for the gateway.

Topic scheme (fixed across the whole system):

    sb/f<floor>/<zone>/<device>/reading   sensor measurements
    sb/f<floor>/<zone>/<device>/status    actuator status
    sb/f<floor>/<zone>/<device>/cmd       control commands
    sb/events/<kind>                      camera, door, controller ticks
    sb/env/ambient                        outdoor conditions
    sb/energy                             electrical power totals

The store is append-only with a single writer. Every accepted record lands
in a JSON-lines write-ahead log before it is acknowledged, so records that
were flushed survive abrupt termination. Snapshot archives are versioned
per-class TSV tables that re-import losslessly.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field, replace

from .broker.core import Message

RECORD_CLASSES = ("sensor", "command", "event", "energy")

ARCHIVE_MAGIC = "smartbuilding-telemetry"
ARCHIVE_VERSION = 1
_ARCHIVE_COLUMNS = ("id", "timestamp", "class", "device_id", "zone_id",
                    "floor", "metric", "vtype", "value")


class TelemetryError(Exception):
    """Invalid query or archive."""


@dataclass(frozen=True)
class TelemetryRecord:
    id: int
    timestamp: float
    record_class: str
    device_id: str
    zone_id: str
    floor: int
    metric: str
    value: float | str | bool


@dataclass(frozen=True)
class Rejection:
    topic: str
    reason: str


@dataclass(frozen=True)
class QueryRange:
    start: float
    end: float
    floor: int | None = None
    zone: str | None = None
    device: str | None = None
    metric: str | None = None
    record_class: str | None = None
    max_points: int | None = None

    def __post_init__(self):
        if self.start > self.end:
            raise TelemetryError(f"query start {self.start} > end {self.end}")
        if self.max_points is not None and self.max_points < 1:
            raise TelemetryError("max_points must be >= 1")

    def matches(self, r: TelemetryRecord) -> bool:
        if not self.start <= r.timestamp <= self.end:
            return False
        if self.floor is not None and r.floor != self.floor:
            return False
        if self.zone is not None and r.zone_id != self.zone:
            return False
        if self.device is not None and r.device_id != self.device:
            return False
        if self.metric is not None and r.metric != self.metric:
            return False
        if self.record_class is not None and r.record_class != self.record_class:
            return False
        return True


def _parse_topic(topic: str) -> tuple[str, int, str, str] | None:
    """Returns (class, floor, zone, device) or None for foreign topics."""
    parts = topic.split("/")
    if parts[0] != "sb":
        return None
    if parts == ["sb", "energy"]:
        return "energy", 0, "", "building"
    if parts == ["sb", "env", "ambient"]:
        return "sensor", 0, "outdoor", "ambient"
    if len(parts) == 3 and parts[1] == "events":
        return "event", 0, "", parts[2]
    if len(parts) == 5 and parts[1].startswith("f") and parts[1][1:].isdigit():
        kind = {"reading": "sensor", "status": "sensor", "cmd": "command"}.get(parts[4])
        if kind is None:
            return None
        return kind, int(parts[1][1:]), parts[2], parts[3]
    return None


def _validate_value(value) -> float | str | bool:
    if isinstance(value, bool) or isinstance(value, str):
        return value
    if isinstance(value, (int, float)):
        return float(value)
    raise ValueError(f"value must be number, string or boolean, got {type(value).__name__}")


class TelemetryStore:
    """Append-only record store with an optional JSONL write-ahead log.

    Concurrency: one ingesting writer, any number of readers; all access
    goes through one lock, so readers observe complete ingest batches.
    """

    def __init__(self, wal_path: str | os.PathLike | None = None):
        self._lock = threading.RLock()
        self._records: list[TelemetryRecord] = []
        self._seen: set[tuple[str, str, float, str]] = set()
        self._latest_ts: dict[tuple[str, str], float] = {}
        self._next_id = 1
        self._rejections: list[Rejection] = []
        self._listeners: list = []
        self._wal = None
        if wal_path is not None:
            self._open_wal(str(wal_path))

    # ------------------------------------------------------------------
    # write-ahead log

    def _open_wal(self, path: str) -> None:
        if os.path.exists(path):
            with open(path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        doc = json.loads(line)
                    except json.JSONDecodeError:
                        # torn tail write from an abrupt termination
                        continue
                    self._append(self._record_from_doc(doc), to_wal=False)
        self._wal = open(path, "a", encoding="utf-8")

    @staticmethod
    def _record_from_doc(doc: dict) -> TelemetryRecord:
        return TelemetryRecord(
            id=int(doc["id"]), timestamp=float(doc["timestamp"]),
            record_class=str(doc["class"]), device_id=str(doc["device_id"]),
            zone_id=str(doc["zone_id"]), floor=int(doc["floor"]),
            metric=str(doc["metric"]), value=doc["value"])

    def flush(self) -> None:
        """Make everything ingested so far durable; callers treat a record
        as acknowledged only after the flush covering it."""
        with self._lock:
            if self._wal is not None:
                self._wal.flush()

    def close(self) -> None:
        with self._lock:
            if self._wal is not None:
                self._wal.flush()
                self._wal.close()
                self._wal = None

    # ------------------------------------------------------------------
    # ingest

    def add_listener(self, listener) -> None:
        """Listener is called once per accepted record, in ingest order."""
        self._listeners.append(listener)

    def ingest(self, msg: Message) -> TelemetryRecord | Rejection:
        """Validate one bus message against its topic-class schema and
        append it; duplicates are dropped idempotently (returns the
        existing record)."""
        parsed = _parse_topic(msg.topic)
        if parsed is None:
            return self._reject(msg.topic, "topic outside the telemetry scheme")
        record_class, floor, zone, device = parsed
        try:
            payload = json.loads(msg.payload.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            return self._reject(msg.topic, f"payload is not valid JSON: {exc}")
        if not isinstance(payload, dict):
            return self._reject(msg.topic, "payload must be a JSON object")

        try:
            if record_class == "command":
                timestamp = float(payload["issued_at"])
                metric = str(payload["action"])
                device = str(payload.get("device_id", device))
                value = _validate_value(payload["value"])
            elif record_class == "event":
                timestamp = float(payload["timestamp"])
                metric = str(payload.get("metric", device))
                device = str(payload.get("device_id", device))
                zone = str(payload.get("zone_id", zone))
                value = _validate_value(payload.get("value", True))
            elif record_class == "energy":
                timestamp = float(payload["timestamp"])
                metric = "total_power_w"
                value = _validate_value(payload["total_w"])
            else:
                timestamp = float(payload["timestamp"])
                metric = str(payload.get("metric") or payload["kind"])
                device = str(payload.get("device_id", device))
                zone = str(payload.get("zone_id", zone))
                value = _validate_value(payload["value"])
        except (KeyError, TypeError, ValueError) as exc:
            return self._reject(msg.topic, f"schema violation: {exc}")

        with self._lock:
            key = (device, record_class, timestamp, metric)
            if key in self._seen:
                for r in reversed(self._records):
                    if (r.device_id, r.record_class, r.timestamp, r.metric) == key:
                        return r
            series = (device, record_class)
            if timestamp < self._latest_ts.get(series, float("-inf")):
                return self._reject(
                    msg.topic,
                    f"timestamp {timestamp} older than newest for {series}")
            record = TelemetryRecord(
                id=self._next_id, timestamp=timestamp, record_class=record_class,
                device_id=device, zone_id=zone, floor=floor, metric=metric,
                value=value)
            self._append(record, to_wal=True)
        for listener in self._listeners:
            listener(record)
        return record

    def _append(self, record: TelemetryRecord, to_wal: bool) -> None:
        self._records.append(record)
        self._seen.add((record.device_id, record.record_class,
                        record.timestamp, record.metric))
        series = (record.device_id, record.record_class)
        self._latest_ts[series] = max(self._latest_ts.get(series, float("-inf")),
                                      record.timestamp)
        self._next_id = max(self._next_id, record.id + 1)
        if to_wal and self._wal is not None:
            self._wal.write(json.dumps({
                "id": record.id, "timestamp": record.timestamp,
                "class": record.record_class, "device_id": record.device_id,
                "zone_id": record.zone_id, "floor": record.floor,
                "metric": record.metric, "value": record.value,
            }, separators=(",", ":"), sort_keys=True) + "\n")

    def _reject(self, topic: str, reason: str) -> Rejection:
        rejection = Rejection(topic=topic, reason=reason)
        with self._lock:
            self._rejections.append(rejection)
        return rejection

    @property
    def rejections(self) -> list[Rejection]:
        with self._lock:
            return list(self._rejections)

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    # ------------------------------------------------------------------
    # queries

    def query(self, rng: QueryRange) -> list[TelemetryRecord]:
        """Matching records in time order; above max_points, uniform stride
        downsampling that always keeps the first and last record."""
        with self._lock:
            hits = [r for r in self._records if rng.matches(r)]
        hits.sort(key=lambda r: (r.timestamp, r.id))
        if rng.max_points is None or len(hits) <= rng.max_points:
            return hits
        if rng.max_points == 1:
            return [hits[0]]
        m, k = len(hits), rng.max_points
        return [hits[round(i * (m - 1) / (k - 1))] for i in range(k)]

    def latest(self, floor: int | None = None, zone: str | None = None,
               metric: str | None = None, record_class: str | None = None
               ) -> dict[tuple[str, str], TelemetryRecord]:
        """Most recent record per (device, metric) series."""
        result: dict[tuple[str, str], TelemetryRecord] = {}
        with self._lock:
            for r in self._records:
                if floor is not None and r.floor != floor:
                    continue
                if zone is not None and r.zone_id != zone:
                    continue
                if metric is not None and r.metric != metric:
                    continue
                if record_class is not None and r.record_class != record_class:
                    continue
                key = (r.device_id, r.metric)
                if key not in result or r.timestamp >= result[key].timestamp:
                    result[key] = r
        return result

    def all_records(self) -> list[TelemetryRecord]:
        with self._lock:
            return list(self._records)

    def prune(self, older_than: float) -> int:
        """Retention: drop records with timestamp below the horizon.
        The only mutation the store ever performs on accepted records."""
        with self._lock:
            before = len(self._records)
            kept = [r for r in self._records if r.timestamp >= older_than]
            self._records = kept
            self._seen = {(r.device_id, r.record_class, r.timestamp, r.metric)
                          for r in kept}
            return before - len(kept)

    # ------------------------------------------------------------------
    # snapshot archive ("off-line server" transfer)

    def export_snapshot(self, path: str | os.PathLike,
                        start: float = float("-inf"),
                        end: float = float("inf")) -> int:
        """Write the versioned per-class archive; returns the record count."""
        with self._lock:
            in_range = [r for r in self._records if start <= r.timestamp <= end]
        by_class: dict[str, list[TelemetryRecord]] = {c: [] for c in RECORD_CLASSES}
        for r in in_range:
            by_class.setdefault(r.record_class, []).append(r)
        lines = [f"{ARCHIVE_MAGIC} v{ARCHIVE_VERSION}",
                 f"total {len(in_range)}",
                 "columns " + " ".join(_ARCHIVE_COLUMNS)]
        for cls in by_class:
            rows = by_class[cls]
            lines.append(f"[{cls} n={len(rows)}]")
            for r in rows:
                lines.append("\t".join(_encode_field(r, col)
                                       for col in _ARCHIVE_COLUMNS))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        return len(in_range)

    def import_snapshot(self, path: str | os.PathLike) -> int:
        """Load an archive, preserving record ids; duplicates are skipped."""
        added = 0
        for record in read_archive(path):
            with self._lock:
                key = (record.device_id, record.record_class,
                       record.timestamp, record.metric)
                if key in self._seen:
                    continue
                self._append(record, to_wal=True)
                added += 1
        return added


def _encode_field(r: TelemetryRecord, col: str) -> str:
    if col == "vtype":
        if isinstance(r.value, bool):
            return "b"
        return "s" if isinstance(r.value, str) else "f"
    if col == "value":
        if isinstance(r.value, bool):
            return "true" if r.value else "false"
        if isinstance(r.value, str):
            return json.dumps(r.value)
        return repr(r.value)
    if col == "class":
        return r.record_class
    return str(getattr(r, col))


def read_archive(path: str | os.PathLike) -> list[TelemetryRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith(ARCHIVE_MAGIC):
        raise TelemetryError(f"{path} is not a telemetry archive")
    version = lines[0].split(" v")[-1]
    if version != str(ARCHIVE_VERSION):
        raise TelemetryError(f"unsupported archive version {version!r}")
    if not lines[1].startswith("total "):
        raise TelemetryError("archive missing total line")
    total = int(lines[1].split()[1])

    records: list[TelemetryRecord] = []
    for line in lines[3:]:
        if not line or line.startswith("["):
            continue
        cols = line.split("\t")
        if len(cols) != len(_ARCHIVE_COLUMNS):
            raise TelemetryError(f"archive row has {len(cols)} columns")
        rid, ts, cls, device_id, zone_id, floor, metric, vtype, raw = cols
        if vtype == "b":
            value: float | str | bool = raw == "true"
        elif vtype == "s":
            value = json.loads(raw)
        else:
            value = float(raw)
        records.append(TelemetryRecord(
            id=int(rid), timestamp=float(ts), record_class=cls,
            device_id=device_id, zone_id=zone_id, floor=int(floor),
            metric=metric, value=value))
    if len(records) != total:
        raise TelemetryError(
            f"archive declares {total} records but carries {len(records)}")
    return sorted(records, key=lambda r: r.id)
