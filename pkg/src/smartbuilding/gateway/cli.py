"""Command line entry points: run scenarios, compare controllers, serve the
gateway, re-render plots, and host the TCP broker."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .. import bundled_config


def _read(path_or_none: str | None, bundled: str) -> str:
    if path_or_none is None:
        return bundled_config(bundled)
    return Path(path_or_none).read_text()


def _add_common_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--topology", help="building config YAML (default: bundled)")
    p.add_argument("--scenario", help="scenario YAML (default: bundled reference)")
    p.add_argument("--controller-config", dest="controller_config",
                   help="controller config YAML (default: bundled)")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--no-figures", action="store_true",
                   help="skip PNG rendering")


def cmd_run(args) -> int:
    from .orchestrator import run_scenario

    report = run_scenario(
        topology_src=_read(args.topology, "default_building"),
        scenario_src=_read(args.scenario, "reference_scenario"),
        settings_src=_read(args.controller_config, "default_controller"),
        out_dir=args.out,
        mode=args.mode,
        controller_kind=args.controller,
        seed_override=args.seed,
        speedup=args.speedup,
        write_figures=not args.no_figures,
    )
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def cmd_compare(args) -> int:
    from .orchestrator import compare_controllers

    comparison = compare_controllers(
        topology_src=_read(args.topology, "default_building"),
        scenario_src=_read(args.scenario, "reference_scenario"),
        settings_src=_read(args.controller_config, "default_controller"),
        out_dir=args.out,
        write_figures=not args.no_figures,
    )
    print(json.dumps(comparison["rows"], indent=2, sort_keys=True))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .api import OfflineRunHost, create_app

    if args.run_dir:
        from ..scenario import load_scenario
        from ..telemetry import TelemetryStore, read_archive
        from ..topology import load_topology

        run_path = Path(args.run_dir)
        store = TelemetryStore()
        for record in read_archive(run_path / "telemetry_archive.tsv"):
            store._append(record, to_wal=False)
        topology = load_topology(_read(args.topology, "default_building"))
        scenario = load_scenario(_read(args.scenario, "reference_scenario"))
        host = OfflineRunHost(store, topology, scenario)
    else:
        from ..scenario import load_scenario
        from ..topology import load_topology
        from .orchestrator import SimulationHost, load_controller_settings

        topology = load_topology(_read(args.topology, "default_building"))
        scenario = load_scenario(_read(args.scenario, "reference_scenario"))
        settings = load_controller_settings(
            _read(args.controller_config, "default_controller"))
        host = SimulationHost(topology, scenario, settings)
        host.start_realtime(speedup=args.speedup)

    app = create_app(host, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_export_plots(args) -> int:
    from .report import export_plots

    written = export_plots(args.run_dir, args.out, floor=args.floor)
    for path in written:
        print(path)
    return 0


def cmd_telemetry(args) -> int:
    from ..telemetry import TelemetryStore

    store = TelemetryStore(args.store)
    if args.prune_older_than is not None:
        removed = store.prune(args.prune_older_than)
        print(f"pruned {removed} records older than t={args.prune_older_than}")
    count = store.export_snapshot(args.out,
                                  start=args.start, end=args.end)
    store.close()
    print(f"exported {count} records to {args.out}")
    return 0


def cmd_broker(args) -> int:
    from ..broker import BrokerServer

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    server = BrokerServer(host=args.host, port=args.port,
                          keep_alive_s=args.keep_alive,
                          max_payload=args.max_payload)
    server.serve_forever()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smartbuilding",
        description="Smart-building digital twin: run simulations, serve the "
                    "dashboard gateway, host the message broker.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario and write the report")
    _add_common_run_args(p_run)
    p_run.add_argument("--mode", choices=("fast", "realtime"), default="fast")
    p_run.add_argument("--controller", choices=("mpc", "baseline"),
                       default="mpc")
    p_run.add_argument("--speedup", type=float, default=1.0,
                       help="realtime pacing factor")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare",
                           help="run MPC vs. baseline thermostat on one scenario")
    _add_common_run_args(p_cmp)
    p_cmp.set_defaults(func=cmd_compare)

    p_srv = sub.add_parser("serve", help="serve the gateway API and stream")
    p_srv.add_argument("--run-dir", help="completed run directory to serve")
    p_srv.add_argument("--topology")
    p_srv.add_argument("--scenario")
    p_srv.add_argument("--controller-config", dest="controller_config")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8000)
    p_srv.add_argument("--speedup", type=float, default=1.0)
    p_srv.add_argument("--ui", help="directory with the built dashboard "
                                    "(e.g. frontend/dist) to serve at /")
    p_srv.set_defaults(func=cmd_serve)

    p_plot = sub.add_parser("export-plots",
                            help="re-render figures for a completed run")
    p_plot.add_argument("--run-dir", required=True)
    p_plot.add_argument("--out")
    p_plot.add_argument("--floor", type=int, default=1)
    p_plot.set_defaults(func=cmd_export_plots)

    p_tel = sub.add_parser("telemetry",
                           help="export or prune a telemetry store")
    p_tel.add_argument("--store", required=True,
                       help="write-ahead log path (telemetry.wal.jsonl)")
    p_tel.add_argument("--out", required=True, help="archive file to write")
    p_tel.add_argument("--start", type=float, default=float("-inf"))
    p_tel.add_argument("--end", type=float, default=float("inf"))
    p_tel.add_argument("--prune-older-than", dest="prune_older_than",
                       type=float, help="retention horizon in simulation seconds")
    p_tel.set_defaults(func=cmd_telemetry)

    p_brk = sub.add_parser("broker", help="host the MQTT-subset TCP broker")
    p_brk.add_argument("--host", default="127.0.0.1")
    p_brk.add_argument("--port", type=int, default=1883)
    p_brk.add_argument("--keep-alive", type=int, default=30)
    p_brk.add_argument("--max-payload", type=int, default=256 * 1024)
    p_brk.add_argument("--verbose", action="store_true")
    p_brk.set_defaults(func=cmd_broker)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
