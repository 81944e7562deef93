import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smartbuilding.control.models import ZoneModel
from smartbuilding.control.mpc import (
    MpcConfig,
    mpc_cost,
    mpc_solve,
    mpc_step,
    n1_closed_form,
)
from smartbuilding.control.policies import SetpointSchedule
from smartbuilding.plant import AmbientConditions

from .oracles import enumerate_mpc, sequence_cost


def make_model(rng) -> ZoneModel:
    return ZoneModel(
        a_t=rng.uniform(0.80, 0.98),
        b_h=rng.uniform(0.1, 0.5),
        b_f=rng.uniform(-0.5, -0.1),
        c_t=rng.uniform(0.005, 0.05),
        a_h=rng.uniform(0.85, 0.99),
        d_f=rng.uniform(-0.3, -0.01),
        c_h=rng.uniform(0.005, 0.05),
    )


def make_instance(rng, horizon):
    model = make_model(rng)
    cfg = MpcConfig(horizon=horizon,
                    weight_tracking=1.0,
                    weight_effort=rng.uniform(0.01, 0.1),
                    humidity_weight=rng.uniform(0.0, 0.2))
    current = (rng.uniform(15.0, 28.0), rng.uniform(35.0, 75.0))
    ambient = AmbientConditions(rng.uniform(5.0, 25.0), rng.uniform(30.0, 80.0))
    refs = (rng.uniform(18.0, 26.0), rng.uniform(40.0, 65.0))
    schedule = SetpointSchedule.constant(*refs)
    return model, cfg, current, ambient, refs, schedule


def test_equilibrium_at_setpoint_yields_zero_inputs():
    # c-terms balance the decay exactly, so the setpoint is an equilibrium
    # of the free response; any actuation only adds effort.
    t_ref, h_ref, t_amb, h_amb = 22.0, 55.0, 10.0, 50.0
    model = ZoneModel(a_t=0.95, b_h=0.3, b_f=-0.2,
                      c_t=t_ref * 0.05 / t_amb,
                      a_h=0.95, d_f=-0.05, c_h=h_ref * 0.05 / h_amb)
    cfg = MpcConfig(horizon=4)
    ambient = AmbientConditions(t_amb, h_amb)
    schedule = SetpointSchedule.constant(t_ref, h_ref)
    solution = mpc_solve(model, (t_ref, h_ref), ambient, schedule, cfg)
    u_h, u_f = solution.first_input
    assert u_h == pytest.approx(0.0, abs=1e-9)
    assert u_f == pytest.approx(0.0, abs=1e-9)
    # the optimum's cost does not exceed any probed alternative's
    rng = np.random.default_rng(0)
    for _ in range(25):
        alt = rng.uniform(0, 1, (2, 4))
        alt_cost = mpc_cost(model, (t_ref, h_ref), ambient, (t_ref, h_ref),
                            cfg, alt[0], alt[1])
        assert solution.cost <= alt_cost + 1e-12


def test_n1_matches_scalar_closed_form():
    # temperature-only scalar case: no fan authority, no humidity weight
    rng = np.random.default_rng(5)
    checked = 0
    while checked < 50:
        base = make_model(rng)
        model = ZoneModel(a_t=base.a_t, b_h=base.b_h, b_f=0.0, c_t=base.c_t,
                          a_h=base.a_h, d_f=0.0, c_h=base.c_h)
        cfg = MpcConfig(horizon=1, weight_effort=rng.uniform(0.01, 0.2),
                        humidity_weight=0.0)
        t = rng.uniform(15.0, 28.0)
        t_amb = rng.uniform(5.0, 25.0)
        t_ref = rng.uniform(18.0, 26.0)
        q, r = cfg.weight_tracking, cfg.weight_effort
        u_star = q * model.b_h * (t_ref - model.a_t * t - model.c_t * t_amb) \
            / (q * model.b_h ** 2 + r)
        if not 0.02 <= u_star <= 0.98:
            continue
        checked += 1
        ambient = AmbientConditions(t_amb, 50.0)
        schedule = SetpointSchedule.constant(t_ref, 55.0)
        u_h, u_f = mpc_step(model, (t, 50.0), ambient, schedule, cfg)
        assert u_h == pytest.approx(u_star, rel=1e-9)
        assert u_f == pytest.approx(0.0, abs=1e-9)


def test_n1_matches_two_input_normal_equations():
    rng = np.random.default_rng(9)
    checked = 0
    while checked < 50:
        model, cfg, current, ambient, refs, schedule = make_instance(rng, 1)
        expected = n1_closed_form(model, current, ambient, refs, cfg)
        if not all(0.02 <= u <= 0.98 for u in expected):
            continue
        checked += 1
        got = mpc_step(model, current, ambient, schedule, cfg)
        assert got[0] == pytest.approx(expected[0], rel=1e-9)
        assert got[1] == pytest.approx(expected[1], rel=1e-9)


@pytest.mark.parametrize("horizon,levels", [(1, 21), (2, 21), (3, 11)])
def test_beats_exhaustive_enumeration(horizon, levels):
    rng = np.random.default_rng(100 + horizon)
    for _ in range(8):
        model, cfg, current, ambient, refs, schedule = make_instance(rng, horizon)
        solution = mpc_solve(model, current, ambient, schedule, cfg)
        solver_cost = sequence_cost(model, current, ambient, refs, cfg,
                                    solution.u_heat, solution.u_fan)
        best_cost, _ = enumerate_mpc(model, current, ambient, refs, cfg,
                                     levels=levels)
        assert solver_cost <= best_cost + 1e-6


def test_cost_scaling_leaves_argmin_unchanged():
    rng = np.random.default_rng(42)
    for _ in range(10):
        model, cfg, current, ambient, refs, schedule = make_instance(rng, 3)
        baseline = mpc_step(model, current, ambient, schedule, cfg)
        for lam in (0.1, 3.0, 250.0):
            scaled = MpcConfig(
                horizon=cfg.horizon,
                weight_tracking=cfg.weight_tracking * lam,
                weight_effort=cfg.weight_effort * lam,
                humidity_weight=cfg.humidity_weight,
            )
            got = mpc_step(model, current, ambient, schedule, scaled)
            assert got[0] == pytest.approx(baseline[0], abs=1e-8)
            assert got[1] == pytest.approx(baseline[1], abs=1e-8)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_inputs_always_saturated(seed):
    rng = np.random.default_rng(seed)
    horizon = int(rng.integers(1, 8))
    model, cfg, current, ambient, refs, schedule = make_instance(rng, horizon)
    solution = mpc_solve(model, current, ambient, schedule, cfg)
    assert np.all(solution.u_heat >= 0.0) and np.all(solution.u_heat <= 1.0)
    assert np.all(solution.u_fan >= 0.0) and np.all(solution.u_fan <= 1.0)


def test_warm_start_agrees_with_cold_start():
    rng = np.random.default_rng(77)
    model, cfg, current, ambient, refs, schedule = make_instance(rng, 5)
    cold = mpc_solve(model, current, ambient, schedule, cfg)
    warm = mpc_solve(model, current, ambient, schedule, cfg,
                     warm_start=np.full(10, 0.7))
    assert cold.first_input[0] == pytest.approx(warm.first_input[0], abs=1e-9)
    assert cold.first_input[1] == pytest.approx(warm.first_input[1], abs=1e-9)


def test_non_finite_model_falls_back_to_safe_action():
    model = ZoneModel(a_t=0.9, b_h=float("nan"), b_f=-0.1, c_t=0.0,
                      a_h=0.9, d_f=-0.1, c_h=0.0)
    cfg = MpcConfig(horizon=3, max_iterations=50)
    solution = mpc_solve(model, (20.0, 50.0), AmbientConditions(10.0, 50.0),
                         SetpointSchedule.constant(22.0, 55.0), cfg)
    assert solution.first_input == (0.0, 0.0)
    assert solution.diagnostics


def test_mpc_cost_matches_oracle_cost():
    rng = np.random.default_rng(8)
    model, cfg, current, ambient, refs, schedule = make_instance(rng, 4)
    u_heat = rng.uniform(0, 1, 4)
    u_fan = rng.uniform(0, 1, 4)
    ours = mpc_cost(model, current, ambient, refs, cfg, u_heat, u_fan)
    theirs = sequence_cost(model, current, ambient, refs, cfg, u_heat, u_fan)
    assert ours == pytest.approx(theirs, rel=1e-12)
