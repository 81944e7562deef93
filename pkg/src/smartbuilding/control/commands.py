"""Actuator command records emitted by controllers and users."""

from __future__ import annotations

from dataclasses import dataclass

COMMAND_SOURCES = ("mpc", "schedule", "lighting", "user", "safety")
COMMAND_ACTIONS = ("duty", "position", "level")


@dataclass(frozen=True)
class ActuatorCommand:
    device_id: str
    action: str            # duty | position | level
    value: float | str     # duty/level in [0,1], or "open"/"closed"
    issued_at: float
    source: str

    def __post_init__(self):
        if self.action not in COMMAND_ACTIONS:
            raise ValueError(f"unknown command action {self.action!r}")
        if self.source not in COMMAND_SOURCES:
            raise ValueError(f"unknown command source {self.source!r}")
        if self.action in ("duty", "level"):
            v = float(self.value)
            if not 0.0 <= v <= 1.0:
                raise ValueError(
                    f"{self.action} command for {self.device_id!r} must be "
                    f"pre-saturated to [0, 1], got {v}")
        elif self.value not in ("open", "closed"):
            raise ValueError(f"position must be 'open' or 'closed', got {self.value!r}")

    def payload(self) -> dict:
        return {
            "device_id": self.device_id,
            "action": self.action,
            "value": self.value,
            "issued_at": self.issued_at,
            "source": self.source,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "ActuatorCommand":
        return cls(
            device_id=payload["device_id"],
            action=payload["action"],
            value=payload["value"],
            issued_at=payload["issued_at"],
            source=payload["source"],
        )
