"""Run reports: tracking-error metrics, delimited outputs, and the figures
(first-floor temperature/humidity trajectories and actuator signals)
rendered alongside them."""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from ..telemetry import TelemetryRecord, read_archive  # noqa: E402

FIGURE_DPI = 120


def _setpoint_series(records: list[TelemetryRecord]
                     ) -> dict[int, dict[float, list[float | None]]]:
    """floor -> timestamp -> [T_ref, H_ref] from controller setpoint events."""
    series: dict[int, dict[float, list[float | None]]] = defaultdict(dict)
    for r in records:
        if r.record_class != "event" or not r.device_id.startswith("controller_f"):
            continue
        if r.metric not in ("setpoint_temperature", "setpoint_humidity"):
            continue
        floor = int(r.device_id.removeprefix("controller_f"))
        slot = series[floor].setdefault(r.timestamp, [None, None])
        slot[0 if r.metric == "setpoint_temperature" else 1] = float(r.value)
    return series


def _reading_series(records: list[TelemetryRecord], metric: str
                    ) -> dict[str, list[tuple[float, float, int]]]:
    """zone -> [(timestamp, value, floor)] for one sensor metric."""
    series: dict[str, list[tuple[float, float, int]]] = defaultdict(list)
    for r in records:
        if r.record_class == "sensor" and r.metric == metric and r.floor > 0:
            series[r.zone_id].append((r.timestamp, float(r.value), r.floor))
    return series


def tracking_errors(records: list[TelemetryRecord]) -> dict:
    """Mean absolute error as a percentage of the active setpoint, per zone
    and per floor, for temperature and humidity, from measured telemetry."""
    setpoints = _setpoint_series(records)
    out = {"zones": {}, "floors": {}}
    floor_acc: dict[int, dict[str, list[float]]] = defaultdict(
        lambda: {"temperature": [], "humidity": []})

    for which, idx in (("temperature", 0), ("humidity", 1)):
        for zone, samples in _reading_series(records, which).items():
            errors = []
            for ts, value, floor in samples:
                ref_slot = setpoints.get(floor, {}).get(ts)
                if ref_slot is None or ref_slot[idx] is None or ref_slot[idx] == 0:
                    continue
                errors.append(abs(value - ref_slot[idx]) / ref_slot[idx] * 100.0)
            if not errors:
                continue
            zone_entry = out["zones"].setdefault(zone, {})
            zone_entry[f"mean_{which}_error_pct"] = sum(errors) / len(errors)
            zone_entry["floor"] = samples[0][2]
            floor_acc[samples[0][2]][which].extend(errors)

    for floor, acc in floor_acc.items():
        out["floors"][floor] = {
            f"mean_{which}_error_pct":
                (sum(vals) / len(vals)) if vals else None
            for which, vals in acc.items()
        }
    return out


def build_report(host, controller_kind: str, runtime_s: float) -> dict:
    records = host.store.all_records()
    errors = tracking_errors(records)
    tick_counts = defaultdict(int)
    for r in records:
        if r.record_class == "event" and r.metric == "tick":
            tick_counts[r.device_id] += 1

    floor1 = errors["floors"].get(1, {})
    return {
        "scenario": host.scenario.name,
        "seed": host.scenario.seed,
        "controller": controller_kind,
        "dt_s": host.scenario.dt_s,
        "ticks": host.scenario.ticks,
        "runtime_s": runtime_s,
        "energy_wh": host.energy_wh,
        "record_count": len(records),
        "rejection_count": len(host.store.rejections),
        "tick_batches_per_floor": dict(sorted(tick_counts.items())),
        "mean_temperature_error_pct": floor1.get("mean_temperature_error_pct"),
        "mean_humidity_error_pct": floor1.get("mean_humidity_error_pct"),
        "errors": errors,
    }


# ----------------------------------------------------------------------
# delimited outputs

TRUTH_COLUMNS = ("time_s", "zone", "floor", "temperature_c", "humidity_pct",
                 "occupants", "heater_duty", "fan_duty", "led_level")


def write_truth_csv(rows: list[dict], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=TRUTH_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)


def write_diagnostics_csv(diagnostics, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tick", "floor", "time_s", "n_readings", "n_commands",
                         "setpoints", "cost", "notes"])
        for d in diagnostics:
            writer.writerow([
                d.tick, d.floor, d.sim_time, d.n_readings, d.n_commands,
                json.dumps(d.setpoints, sort_keys=True),
                json.dumps(d.cost, sort_keys=True),
                " | ".join(d.notes),
            ])


def write_outputs(host, report: dict, out_dir: Path,
                  write_figures: bool = True) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    write_truth_csv(host.truth_rows, out_dir / "timeseries.csv")
    write_diagnostics_csv(host.diagnostics, out_dir / "diagnostics.csv")
    host.store.export_snapshot(out_dir / "telemetry_archive.tsv")
    if write_figures:
        render_figures(host.store.all_records(), out_dir / "figures", floor=1)


# ----------------------------------------------------------------------
# figures

def _floor_zone_series(records, metric: str, floor: int):
    series = defaultdict(list)
    for r in records:
        if (r.record_class == "sensor" and r.metric == metric
                and r.floor == floor):
            series[r.zone_id].append((r.timestamp, float(r.value)))
    return {zone: sorted(pts) for zone, pts in series.items()}


def _setpoint_steps(records, floor: int, metric: str):
    pts = [(r.timestamp, float(r.value)) for r in records
           if r.record_class == "event" and r.metric == metric
           and r.device_id == f"controller_f{floor}"]
    return sorted(pts)


def render_figures(records: list[TelemetryRecord], fig_dir: Path,
                   floor: int = 1) -> list[Path]:
    """Render the trajectory and actuator figures for one floor to PNG
    files; returns the written paths."""
    fig_dir.mkdir(parents=True, exist_ok=True)
    written = []

    for which, metric, refmetric, unit in (
            ("temperature", "temperature", "setpoint_temperature", "degC"),
            ("humidity", "humidity", "setpoint_humidity", "%RH")):
        fig, ax = plt.subplots(figsize=(8, 4.5))
        for zone, pts in sorted(_floor_zone_series(records, metric, floor).items()):
            ax.plot([p[0] / 60 for p in pts], [p[1] for p in pts],
                    label=f"{zone} (measured)", linewidth=1.0)
        refs = _setpoint_steps(records, floor, refmetric)
        if refs:
            ax.step([p[0] / 60 for p in refs], [p[1] for p in refs],
                    where="post", label="desired", color="black",
                    linestyle="--", linewidth=1.2)
        ax.set_xlabel("time [min]")
        ax.set_ylabel(f"{which} [{unit}]")
        ax.set_title(f"Floor {floor} {which} trajectory")
        ax.legend(loc="best", fontsize=8)
        ax.grid(True, alpha=0.3)
        path = fig_dir / f"floor{floor}_{which}.png"
        fig.savefig(path, dpi=FIGURE_DPI, bbox_inches="tight")
        plt.close(fig)
        written.append(path)

    # actuator signals: heater and fan duty per zone on the floor
    duty = defaultdict(list)
    for r in records:
        if (r.record_class == "sensor" and r.metric == "duty"
                and r.floor == floor):
            duty[r.device_id].append((r.timestamp, float(r.value)))
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for device, pts in sorted(duty.items()):
        pts.sort()
        ax.step([p[0] / 60 for p in pts], [p[1] for p in pts],
                where="post", label=device, linewidth=1.0)
    ax.set_xlabel("time [min]")
    ax.set_ylabel("duty [0..1]")
    ax.set_ylim(-0.05, 1.05)
    ax.set_title(f"Floor {floor} actuator input signals")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    path = fig_dir / f"floor{floor}_actuators.png"
    fig.savefig(path, dpi=FIGURE_DPI, bbox_inches="tight")
    plt.close(fig)
    written.append(path)
    return written


def export_plots(run_dir: str | Path, out_dir: str | Path | None = None,
                 floor: int = 1) -> list[Path]:
    """Re-render the figures for a completed run directory from its
    telemetry archive."""
    run_path = Path(run_dir)
    archive = run_path / "telemetry_archive.tsv"
    records = read_archive(archive)
    target = Path(out_dir) if out_dir is not None else run_path / "figures"
    return render_figures(records, target, floor=floor)
