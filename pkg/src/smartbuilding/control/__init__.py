from .commands import ActuatorCommand
from .models import IdentificationError, ZoneModel, identify_model
from .mpc import MpcConfig, MpcSolution, mpc_solve, mpc_step, n1_closed_form
from .policies import (
    LightingPolicy,
    SetpointSchedule,
    ZoneLighting,
    door_window_command,
    learn_lighting_routine,
    lighting_decision,
    resolve_setpoint,
)
from .floor import ControlError, FloorController, baseline_thermostat

__all__ = [
    "ActuatorCommand",
    "ControlError",
    "FloorController",
    "IdentificationError",
    "LightingPolicy",
    "MpcConfig",
    "MpcSolution",
    "SetpointSchedule",
    "ZoneLighting",
    "ZoneModel",
    "baseline_thermostat",
    "door_window_command",
    "identify_model",
    "learn_lighting_routine",
    "lighting_decision",
    "mpc_solve",
    "mpc_step",
    "n1_closed_form",
    "resolve_setpoint",
]
