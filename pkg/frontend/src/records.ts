// Telemetry record shape shared with the gateway (stream frames and
// /telemetry rows are identical).

export interface TelemetryRecord {
  id: number;
  timestamp: number;
  class: string;
  device_id: string;
  zone_id: string;
  floor: number;
  metric: string;
  value: number | string | boolean;
}

export interface RecordFilter {
  floor?: number;
  zone?: string;
  device?: string;
  metric?: string;
  recordClass?: string;
}

export function matchesFilter(r: TelemetryRecord, f: RecordFilter): boolean {
  if (f.floor !== undefined && r.floor !== f.floor) return false;
  if (f.zone !== undefined && r.zone_id !== f.zone) return false;
  if (f.device !== undefined && r.device_id !== f.device) return false;
  if (f.metric !== undefined && r.metric !== f.metric) return false;
  if (f.recordClass !== undefined && r.class !== f.recordClass) return false;
  return true;
}

/**
 * Bounded in-memory record window. Keeps at most `horizonS` seconds of
 * records, deduplicates by record id (stream reconnects and history
 * backfill may both deliver the same record), and keeps timestamps sorted.
 */
export class SlidingWindow {
  private records: TelemetryRecord[] = [];
  private ids = new Set<number>();

  constructor(readonly horizonS: number = 3600) {}

  /** Insert one record; returns false when it was a duplicate. */
  push(record: TelemetryRecord): boolean {
    if (this.ids.has(record.id)) return false;
    this.ids.add(record.id);
    // fast path: records usually arrive in order
    const last = this.records[this.records.length - 1];
    if (!last || last.timestamp <= record.timestamp) {
      this.records.push(record);
    } else {
      let i = this.records.length - 1;
      while (i > 0 && this.records[i - 1].timestamp > record.timestamp) i--;
      this.records.splice(i, 0, record);
    }
    this.trim(record.timestamp);
    return true;
  }

  /** Merge a history backfill batch (e.g. GET /telemetry results). */
  backfill(batch: TelemetryRecord[]): number {
    let added = 0;
    for (const r of batch) if (this.push(r)) added++;
    return added;
  }

  private trim(newest: number): void {
    const floor = newest - this.horizonS;
    let drop = 0;
    while (drop < this.records.length && this.records[drop].timestamp < floor) drop++;
    if (drop > 0) {
      for (const r of this.records.slice(0, drop)) this.ids.delete(r.id);
      this.records = this.records.slice(drop);
    }
  }

  select(filter: RecordFilter): TelemetryRecord[] {
    return this.records.filter((r) => matchesFilter(r, filter));
  }

  latest(filter: RecordFilter): TelemetryRecord | undefined {
    for (let i = this.records.length - 1; i >= 0; i--) {
      if (matchesFilter(this.records[i], filter)) return this.records[i];
    }
    return undefined;
  }

  size(): number {
    return this.records.length;
  }

  all(): TelemetryRecord[] {
    return this.records.slice();
  }
}
