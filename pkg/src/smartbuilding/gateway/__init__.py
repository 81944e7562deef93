from .api import OfflineRunHost, create_app
from .orchestrator import (
    ControllerSettings,
    FaultInjection,
    SimulationHost,
    bootstrap_models,
    compare_controllers,
    load_controller_settings,
    run_scenario,
)
from .report import build_report, export_plots, render_figures, tracking_errors

__all__ = [
    "ControllerSettings",
    "FaultInjection",
    "OfflineRunHost",
    "SimulationHost",
    "bootstrap_models",
    "build_report",
    "compare_controllers",
    "create_app",
    "export_plots",
    "load_controller_settings",
    "render_figures",
    "run_scenario",
    "tracking_errors",
]
