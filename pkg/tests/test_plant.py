import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smartbuilding.control.commands import ActuatorCommand
from smartbuilding.plant import (
    ActuationError,
    AmbientConditions,
    Plant,
    PlantError,
)
from smartbuilding.scenario import OccupancyEvent, ScriptedOccupancy, StochasticOccupancy
from smartbuilding.topology import load_topology

SINGLE_ZONE = """
name: one
floors:
  - index: 1
    zones:
      - id: room
        kind: living
        thermal: {heat_capacity_j_per_k: 200.0, r_env_k_per_w: 5.0}
        devices:
          - {id: th, type: temp_humidity_sensor}
          - {id: pir, type: pir_sensor}
          - {id: heat, type: heater, params: {max_power_w: 50.0}}
          - {id: fan, type: fan}
          - {id: led, type: led_strip}
          - {id: door, type: servo_door, params: {transit_time_s: 20.0}}
"""

TWO_ZONE = """
name: two
floors:
  - index: 1
    zones:
      - id: a
        kind: living
        neighbors: [b]
        devices:
          - {id: a_th, type: temp_humidity_sensor}
          - {id: a_pir, type: pir_sensor}
          - {id: a_heat, type: heater}
          - {id: a_fan, type: fan}
          - {id: a_led, type: led_strip}
      - id: b
        kind: kitchen
        neighbors: [a]
        devices:
          - {id: b_th, type: temp_humidity_sensor}
          - {id: b_pir, type: pir_sensor}
          - {id: b_heat, type: heater}
          - {id: b_fan, type: fan}
          - {id: b_led, type: led_strip}
"""


@pytest.fixture
def single_plant():
    return Plant(load_topology(SINGLE_ZONE), dt=5.0)


def _ambient(t=10.0, h=50.0):
    return AmbientConditions(outdoor_temperature=t, outdoor_humidity=h)


def test_equilibrium_fixed_point(single_plant):
    state = single_plant.initial_state(10.0, 50.0)
    nxt = single_plant.step(state, _ambient(10.0, 50.0))
    assert nxt.zones["room"].temperature == pytest.approx(10.0)
    assert nxt.zones["room"].humidity == pytest.approx(50.0)
    assert nxt.time == pytest.approx(5.0)


def test_euler_step_hand_computed(single_plant):
    # R_env * C = 5.0 * 200 = 1000 s; T' = 20 + 5 * (10 - 20) / 1000 = 19.95
    state = single_plant.initial_state(20.0, 50.0)
    nxt = single_plant.step(state, _ambient(10.0, 50.0))
    assert nxt.zones["room"].temperature == pytest.approx(19.95, abs=1e-12)


def test_equal_temperature_neighbors_unchanged():
    plant = Plant(load_topology(TWO_ZONE), dt=5.0)
    state = plant.initial_state(15.0, 50.0)
    nxt = plant.step(state, _ambient(15.0, 50.0))
    assert nxt.zones["a"].temperature == pytest.approx(15.0)
    assert nxt.zones["b"].temperature == pytest.approx(15.0)


def test_passive_convergence_monotone(single_plant):
    state = single_plant.initial_state(25.0, 50.0)
    gap = 15.0
    for _ in range(1000):   # 5 envelope time constants
        state = single_plant.step(state, _ambient(10.0, 50.0))
        new_gap = abs(state.zones["room"].temperature - 10.0)
        assert new_gap <= gap + 1e-12
        gap = new_gap
    assert gap < 0.2


def test_analytic_steady_state_matches_long_run():
    plant = Plant(load_topology(TWO_ZONE), dt=5.0)
    state = plant.initial_state(20.0, 50.0)
    state.heater_duty["a_heat"] = 0.25
    state.fan_duty["b_fan"] = 0.4
    ambient = _ambient(12.0, 50.0)

    # solve the linear heat balance of both zones directly
    pa, pb = plant.params["a"], plant.params["b"]
    g_env_a, g_env_b = 1 / pa.r_env, 1 / pb.r_env
    g_ab = 1 / pa.r_adj["b"]
    heat_a = 0.25 * plant.topology.device("a_heat").params["max_power_w"]
    g_fan_b = 0.4 * plant.topology.device("b_fan").params["exchange_w_per_k"]
    a_mat = np.array([[g_env_a + g_ab, -g_ab],
                      [-g_ab, g_env_b + g_ab + g_fan_b]])
    rhs = np.array([g_env_a * 12.0 + heat_a,
                    (g_env_b + g_fan_b) * 12.0])
    expected = np.linalg.solve(a_mat, rhs)

    for _ in range(20000):
        state = plant.step(state, ambient)
    assert state.zones["a"].temperature == pytest.approx(expected[0], abs=1e-6)
    assert state.zones["b"].temperature == pytest.approx(expected[1], abs=1e-6)


def test_non_finite_state_fault(single_plant):
    state = single_plant.initial_state(20.0, 50.0)
    state.zones["room"].temperature = float("nan")
    with pytest.raises(PlantError, match="room"):
        single_plant.step(state, _ambient())


def test_dt_stability_guard():
    with pytest.raises(PlantError, match="dt"):
        Plant(load_topology(SINGLE_ZONE), dt=500.0)


# ----------------------------------------------------------------------
# sensing

def test_zero_noise_reads_true_state():
    plant = Plant(load_topology(SINGLE_ZONE), dt=5.0, temp_noise=0.0,
                  humidity_noise=0.0)
    state = plant.initial_state(21.5, 48.0)
    readings = {(r.device_id, r.kind): r.value
                for r in plant.read_sensors(state, rng_seed=1)}
    assert readings[("th", "temperature")] == pytest.approx(21.5)
    assert readings[("th", "humidity")] == pytest.approx(48.0)
    assert readings[("pir", "motion")] is False
    assert readings[("door", "door_state")] == pytest.approx(0.0)


def test_same_seed_same_readings(single_plant):
    state = single_plant.initial_state(21.0, 50.0)
    first = single_plant.read_sensors(state, rng_seed=1234)
    second = single_plant.read_sensors(state, rng_seed=1234)
    assert first == second
    third = single_plant.read_sensors(state, rng_seed=1235)
    assert third != first


def test_noise_bounded(single_plant):
    state = single_plant.initial_state(21.0, 50.0)
    for seed in range(50):
        for r in single_plant.read_sensors(state, rng_seed=seed):
            if r.kind == "temperature":
                assert abs(r.value - 21.0) <= 0.5
            elif r.kind == "humidity":
                assert abs(r.value - 50.0) <= 2.0


# ----------------------------------------------------------------------
# occupancy and PIR

def test_scripted_entry_fires_pir(single_plant):
    script = ScriptedOccupancy([OccupancyEvent(time_s=60.0, zone_id="room", delta=1)])
    state = single_plant.initial_state(20.0, 50.0)
    fired_at = None
    for _ in range(30):
        state = single_plant.advance_occupancy(state, script)
        if state.zones["room"].pir_active:
            fired_at = state.time
            break
        state = single_plant.step(state, _ambient())
    assert fired_at == pytest.approx(60.0)
    assert state.zones["room"].occupant_count == 1


def test_empty_script_constant_counts(single_plant):
    script = ScriptedOccupancy([])
    state = single_plant.initial_state(20.0, 50.0)
    for _ in range(10):
        state = single_plant.advance_occupancy(state, script)
        state = single_plant.step(state, _ambient())
        assert state.zones["room"].occupant_count == 0
        assert not state.zones["room"].pir_active


def test_unknown_zone_event_rejected(single_plant):
    script = ScriptedOccupancy([OccupancyEvent(time_s=0.0, zone_id="nowhere", delta=1)])
    state = single_plant.initial_state(20.0, 50.0)
    with pytest.raises(PlantError, match="nowhere"):
        single_plant.advance_occupancy(state, script)


def test_stochastic_occupancy_deterministic():
    topo = load_topology(TWO_ZONE)
    plant = Plant(topo, dt=5.0)

    def trace(seed):
        driver = StochasticOccupancy(occupants=3, seed=seed, home_zone="a")
        state = plant.initial_state(20.0, 50.0)
        counts = []
        for _ in range(500):
            state = plant.advance_occupancy(state, driver)
            state = plant.step(state, _ambient())
            counts.append((state.zones["a"].occupant_count,
                           state.zones["b"].occupant_count))
        return counts

    assert trace(7) == trace(7)
    assert trace(7) != trace(8)


def test_camera_event_on_colocated_pir():
    topo_src = SINGLE_ZONE.replace(
        "          - {id: door, type: servo_door, params: {transit_time_s: 20.0}}",
        "          - {id: door, type: servo_door, params: {transit_time_s: 20.0}}\n"
        "          - {id: cam, type: camera}")
    plant = Plant(load_topology(topo_src), dt=5.0)
    script = ScriptedOccupancy([OccupancyEvent(time_s=0.0, zone_id="room", delta=1)])
    state = plant.initial_state(20.0, 50.0)
    state = plant.advance_occupancy(state, script)
    events = plant.camera_events(state)
    assert len(events) == 1
    assert events[0].device_id == "cam"
    assert events[0].trigger == "motion"
    # no motion, no event
    state = plant.step(state, _ambient())
    assert plant.camera_events(state) == []


def test_no_camera_in_zone_no_event(single_plant):
    script = ScriptedOccupancy([OccupancyEvent(time_s=0.0, zone_id="room", delta=1)])
    state = single_plant.initial_state(20.0, 50.0)
    state = single_plant.advance_occupancy(state, script)
    assert single_plant.camera_events(state) == []


# ----------------------------------------------------------------------
# actuation

def test_heater_duty_assignment(single_plant):
    state = single_plant.initial_state(20.0, 50.0)
    cmd = ActuatorCommand("heat", "duty", 0.5, 0.0, "mpc")
    nxt = single_plant.apply_actuation(state, cmd)
    assert nxt.heater_duty["heat"] == pytest.approx(0.5)
    assert state.heater_duty["heat"] == pytest.approx(0.0)


def test_out_of_range_duty_rejected(single_plant):
    state = single_plant.initial_state(20.0, 50.0)
    cmd = ActuatorCommand("fan", "duty", 0.9, 0.0, "mpc")
    object.__setattr__(cmd, "value", 1.7)   # bypass the command's own guard
    with pytest.raises(ActuationError, match="outside"):
        single_plant.apply_actuation(state, cmd)


def test_unknown_device_rejected(single_plant):
    state = single_plant.initial_state(20.0, 50.0)
    with pytest.raises(ActuationError, match="unknown"):
        single_plant.apply_actuation(
            state, ActuatorCommand("ghost", "duty", 0.1, 0.0, "mpc"))


def test_wrong_action_for_device(single_plant):
    state = single_plant.initial_state(20.0, 50.0)
    with pytest.raises(ActuationError, match="duty"):
        single_plant.apply_actuation(
            state, ActuatorCommand("heat", "level", 0.1, 0.0, "user"))


def test_door_transit_monotone(single_plant):
    state = single_plant.initial_state(20.0, 50.0)
    state = single_plant.apply_actuation(
        state, ActuatorCommand("door", "position", "open", 0.0, "user"))
    fractions = [state.servos["door"].fraction]
    for _ in range(6):
        state = single_plant.step(state, _ambient())
        fractions.append(state.servos["door"].fraction)
    assert fractions == sorted(fractions)
    # 20 s transit at 5 s ticks: fully open after 4 steps
    assert fractions[3] < 1.0
    assert state.servos["door"].fraction == pytest.approx(1.0)
    assert state.servos["door"].position == "open"


# ----------------------------------------------------------------------
# energy

def test_led_full_power(single_plant):
    state = single_plant.initial_state(20.0, 50.0)
    state.led_level["led"] = 1.0
    breakdown, total = single_plant.electrical_power(state)
    assert breakdown["led"] == pytest.approx(5.0 * 0.29)   # 1.45 W
    assert total == pytest.approx(1.45)


def test_all_off_zero_power(single_plant):
    state = single_plant.initial_state(20.0, 50.0)
    _, total = single_plant.electrical_power(state)
    assert total == pytest.approx(0.0)


def test_heater_half_duty_power(single_plant):
    state = single_plant.initial_state(20.0, 50.0)
    state.heater_duty["heat"] = 0.5
    breakdown, _ = single_plant.electrical_power(state)
    assert breakdown["heat"] == pytest.approx(25.0)   # 0.5 * 50 W


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1),
       st.sampled_from(["heat", "fan", "led"]), st.floats(0, 1))
def test_power_monotone_in_each_duty(heat, fan, led, bumped, fraction):
    plant = Plant(load_topology(SINGLE_ZONE), dt=5.0)
    state = plant.initial_state(20.0, 50.0)
    state.heater_duty["heat"] = heat
    state.fan_duty["fan"] = fan
    state.led_level["led"] = led
    _, before = plant.electrical_power(state)
    if bumped == "heat":
        state.heater_duty["heat"] = heat + fraction * (1.0 - heat)
    elif bumped == "fan":
        state.fan_duty["fan"] = fan + fraction * (1.0 - fan)
    else:
        state.led_level["led"] = led + fraction * (1.0 - led)
    _, after = plant.electrical_power(state)
    assert after >= before - 1e-12


# ----------------------------------------------------------------------
# humidity bounds under arbitrary admissible inputs

@settings(max_examples=25, deadline=None)
@given(
    st.floats(min_value=0.0, max_value=100.0),
    st.floats(min_value=0.0, max_value=100.0),
    st.lists(st.tuples(st.floats(0, 1), st.integers(0, 3)), min_size=1, max_size=50),
)
def test_humidity_stays_bounded(h0, h_amb, actions):
    plant = Plant(load_topology(SINGLE_ZONE), dt=5.0)
    state = plant.initial_state(20.0, h0)
    ambient = AmbientConditions(outdoor_temperature=15.0, outdoor_humidity=h_amb)
    for fan, occupants in actions:
        state.fan_duty["fan"] = fan
        state.zones["room"].occupant_count = occupants
        state = plant.step(state, ambient)
        assert 0.0 <= state.zones["room"].humidity <= 100.0
