import pytest

from smartbuilding.control.floor import baseline_thermostat
from smartbuilding.control.policies import (
    LightingPolicy,
    PolicyError,
    SetpointSchedule,
    ZoneLighting,
    door_window_command,
    learn_lighting_routine,
    resolve_setpoint,
)
from smartbuilding.topology import DevicePlacement


def hhmm(h, m=0):
    return h * 3600.0 + m * 60.0


# ----------------------------------------------------------------------
# setpoint schedules

def test_step_function_semantics():
    schedule = SetpointSchedule(entries=((hhmm(6), 22.0, 55.0),
                                         (hhmm(22), 18.0, 50.0)))
    assert resolve_setpoint(schedule, hhmm(23)) == (18.0, 50.0)
    assert resolve_setpoint(schedule, hhmm(12)) == (22.0, 55.0)


def test_wrap_before_first_entry():
    schedule = SetpointSchedule(entries=((hhmm(6), 22.0, 55.0),
                                         (hhmm(22), 18.0, 50.0)))
    # 05:00 falls back to yesterday's 22:00 entry
    assert resolve_setpoint(schedule, hhmm(5)) == (18.0, 50.0)


def test_override_precedence_and_expiry():
    schedule = SetpointSchedule.constant(20.0, 50.0).with_override(
        25.0, 60.0, expires_at=1000.0)
    assert resolve_setpoint(schedule, hhmm(12), sim_time=500.0) == (25.0, 60.0)
    assert resolve_setpoint(schedule, hhmm(12), sim_time=1500.0) == (20.0, 50.0)


def test_schedule_times_must_increase():
    with pytest.raises(PolicyError, match="increasing"):
        SetpointSchedule(entries=((hhmm(8), 20.0, 50.0), (hhmm(8), 21.0, 50.0)))


def test_setpoints_within_comfort_bounds():
    with pytest.raises(PolicyError, match="comfort"):
        SetpointSchedule.constant(35.0, 50.0)
    with pytest.raises(PolicyError, match="comfort"):
        SetpointSchedule.constant(22.0, 50.0).with_override(22.0, 95.0, 100.0)


# ----------------------------------------------------------------------
# lighting

def test_presence_turns_on_that_tick():
    zl = ZoneLighting(LightingPolicy(mode="presence"))
    level = zl.decide(occupied=False, motion=True, time_of_day=hhmm(20),
                      sim_time=100.0, away=False, dt=5.0)
    assert level == 1.0


def test_presence_holds_then_turns_off():
    zl = ZoneLighting(LightingPolicy(mode="presence", hold_s=120.0))
    assert zl.decide(False, True, hhmm(20), 100.0, False, 5.0) == 1.0
    # still held shortly after the last motion
    assert zl.decide(False, False, hhmm(20), 150.0, False, 5.0) is None
    assert zl.decide(False, False, hhmm(20), 219.0, False, 5.0) is None
    assert zl.decide(False, False, hhmm(20), 225.0, False, 5.0) == 0.0


def test_manual_mode_never_commands():
    zl = ZoneLighting(LightingPolicy(mode="manual"))
    assert zl.decide(True, True, hhmm(20), 0.0, False, 5.0) is None
    assert zl.decide(True, True, hhmm(20), 0.0, True, 5.0) is None


def test_away_mimic_empty_routine_silent():
    zl = ZoneLighting(LightingPolicy(mode="away_mimic", learned_events=()))
    for k in range(100):
        assert zl.decide(False, False, hhmm(19) + 5 * k, 5.0 * k, True, 5.0) is None


def test_away_mimic_zero_jitter_replays_exactly():
    policy = LightingPolicy(mode="away_mimic",
                            learned_events=((hhmm(20), 1.0),),
                            mimic_jitter_s=0.0)
    zl = ZoneLighting(policy)
    fired = []
    sim = 0.0
    for k in range(2000):
        tod = hhmm(19) + 5.0 * k
        level = zl.decide(False, False, tod, sim, True, 5.0)
        if level is not None:
            fired.append((tod, level))
        sim += 5.0
    assert fired == [(hhmm(20), 1.0)]


def test_away_mimic_jitter_deterministic_and_bounded():
    policy = LightingPolicy(mode="away_mimic",
                            learned_events=((hhmm(20), 1.0),),
                            mimic_jitter_s=300.0)

    def run(seed):
        zl = ZoneLighting(policy, seed=seed)
        for k in range(2000):
            tod = hhmm(19) + 5.0 * k
            if zl.decide(False, False, tod, 5.0 * k, True, 5.0) is not None:
                return tod
        return None

    a, b, c = run(3), run(3), run(4)
    assert a == b
    assert abs(a - hhmm(20)) <= 300.0 + 5.0
    assert abs(c - hhmm(20)) <= 300.0 + 5.0


def test_presence_suspended_while_away():
    zl = ZoneLighting(LightingPolicy(mode="presence"))
    assert zl.decide(True, True, hhmm(20), 0.0, away=True, dt=5.0) is None


# ----------------------------------------------------------------------
# routine learning

def test_week_of_events_clusters_to_mean():
    log = []
    minutes = [58, 59, 60, 60, 61, 62, 62]   # around 20:00
    for day, m in enumerate(minutes):
        log.append({"source": "user", "zone_id": "living",
                    "time_of_day": hhmm(19, m), "level": 1.0})
    learned = learn_lighting_routine(log)
    assert list(learned) == ["living"]
    assert len(learned["living"]) == 1
    tod, level = learned["living"][0]
    assert tod == pytest.approx(sum(hhmm(19, m) for m in minutes) / len(minutes))
    assert level == 1.0


def test_single_event_verbatim():
    log = [{"source": "user", "zone_id": "kitchen",
            "time_of_day": hhmm(7, 30), "level": 0.8}]
    assert learn_lighting_routine(log) == {"kitchen": ((hhmm(7, 30), 0.8),)}


def test_non_user_events_ignored():
    log = [{"source": "lighting", "zone_id": "kitchen",
            "time_of_day": hhmm(7), "level": 1.0}]
    assert learn_lighting_routine(log) == {}


def test_on_and_off_cluster_separately():
    log = [{"source": "user", "zone_id": "den",
            "time_of_day": hhmm(20), "level": 1.0},
           {"source": "user", "zone_id": "den",
            "time_of_day": hhmm(20, 10), "level": 0.0}]
    learned = learn_lighting_routine(log)
    assert len(learned["den"]) == 2


# ----------------------------------------------------------------------
# doors and windows

def test_door_command_and_notification():
    device = DevicePlacement("front_door", "servo_door", "dining",
                             {"transit_time_s": 15.0})
    command, event = door_window_command(device, "open", issued_at=42.0)
    assert command.device_id == "front_door"
    assert command.action == "position" and command.value == "open"
    assert command.source == "user"
    assert event["kind"] == "door_window"
    assert event["zone_id"] == "dining"
    assert event["position"] == "open"


def test_non_servo_device_rejected():
    device = DevicePlacement("lamp", "led_strip", "dining", {})
    with pytest.raises(PolicyError, match="servo"):
        door_window_command(device, "open", 0.0)


def test_safety_source_allowed():
    device = DevicePlacement("door", "servo_door", "hall", {})
    command, event = door_window_command(device, "closed", 10.0, source="safety")
    assert command.source == "safety"
    assert event["source"] == "safety"


# ----------------------------------------------------------------------
# baseline thermostat

def test_baseline_band():
    assert baseline_thermostat(22.0, 22.0, 0.5) == (0.0, 0.0)
    assert baseline_thermostat(21.0, 22.0, 0.5) == (1.0, 0.0)
    assert baseline_thermostat(23.0, 22.0, 0.5) == (0.0, 1.0)


def test_baseline_hysteresis_positive():
    from smartbuilding.control.floor import ControlError
    with pytest.raises(ControlError):
        baseline_thermostat(22.0, 22.0, 0.0)
