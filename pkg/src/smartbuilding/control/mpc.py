"""Receding-horizon controller for one zone.

Quadratic tracking + effort cost over the identified linear models, box
constraints [0, 1] on both inputs, solved by projected gradient descent
(step 1/L with L the largest Hessian eigenvalue, Nesterov momentum with
adaptive restart, hard iteration cap, stop on the projected-gradient
residual). Only the first input of the optimized sequence is applied each
tick.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..plant import AmbientConditions
from .models import ZoneModel
from .policies import SetpointSchedule, resolve_setpoint


@dataclass(frozen=True)
class MpcConfig:
    horizon: int = 6
    weight_tracking: float = 1.0       # q, on squared temperature error
    weight_effort: float = 0.03        # r, on squared duty
    humidity_weight: float = 0.01      # scales q for the humidity error term
    sample_period_s: float = 5.0
    max_iterations: int = 20000        # projected-gradient cap
    tolerance: float = 1e-13           # stop when max |u step| falls below

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.weight_tracking < 0:
            raise ValueError("weight_tracking must be >= 0")
        if self.weight_effort <= 0:
            raise ValueError("weight_effort must be > 0")


@dataclass
class MpcSolution:
    u_heat: np.ndarray         # horizon-length duty sequence
    u_fan: np.ndarray
    cost: float
    iterations: int
    diagnostics: list[str] = field(default_factory=list)

    @property
    def first_input(self) -> tuple[float, float]:
        return float(self.u_heat[0]), float(self.u_fan[0])


@lru_cache(maxsize=512)
def _solver_data(model: ZoneModel, cfg: MpcConfig):
    """Quadratic-form pieces that depend only on (model, config); the free
    response and linear term vary per tick and are built in mpc_solve.
    Raises ValueError on a non-finite model."""
    n = cfg.horizon
    fields = (model.a_t, model.b_h, model.b_f, model.c_t,
              model.a_h, model.d_f, model.c_h)
    if not all(math.isfinite(v) for v in fields):
        raise ValueError("model coefficients are not finite")
    powers_t = model.a_t ** np.arange(n + 1)
    powers_h = model.a_h ** np.arange(n + 1)
    phi_h = np.zeros((n, n))
    phi_f = np.zeros((n, n))
    psi_f = np.zeros((n, n))
    for k in range(n):
        for j in range(k + 1):
            phi_h[k, j] = powers_t[k - j] * model.b_h
            phi_f[k, j] = powers_t[k - j] * model.b_f
            psi_f[k, j] = powers_h[k - j] * model.d_f
    g_t = np.hstack([phi_h, phi_f])         # temperature response to [uh; uf]
    g_h = np.hstack([np.zeros((n, n)), psi_f])
    q = cfg.weight_tracking
    qh = cfg.weight_tracking * cfg.humidity_weight
    r = cfg.weight_effort
    hess = 2.0 * (q * g_t.T @ g_t + qh * g_h.T @ g_h + r * np.eye(2 * n))
    step = 1.0 / float(np.linalg.eigvalsh(hess)[-1])
    cum_t = np.cumsum(powers_t[:-1])        # sum_{j<k} a^j for k = 1..n
    cum_h = np.cumsum(powers_h[:-1])
    return powers_t, powers_h, cum_t, cum_h, g_t, g_h, hess, step


def _pg_residual(hess: np.ndarray, lin: np.ndarray, step: float,
                 u: np.ndarray) -> float:
    """Sup-norm of the projected-gradient map; zero exactly at the optimum."""
    resid = hess @ u
    resid -= lin
    resid *= -step
    resid += u
    np.clip(resid, 0.0, 1.0, out=resid)
    resid -= u
    return float(np.max(np.abs(resid)))


def _active_set_solve(hess: np.ndarray, lin: np.ndarray, step: float,
                      seed: np.ndarray, tolerance: float) -> np.ndarray | None:
    """Primal-dual active-set finisher for the box-constrained quadratic.

    Repeatedly classifies inputs as saturated-low/high/free from the
    projected-gradient map of the current point, solves the free
    coordinates exactly, and stops when the classification is stable.
    Returns None if it fails to verify optimality (the gradient iteration
    then continues as the safeguarded path)."""
    x = seed
    prev_sets = None
    for _ in range(2 * x.size + 4):
        grad = hess @ x - lin
        z = x - step * grad
        at_lower = z < 0.0
        at_upper = z > 1.0
        sets = (at_lower.tobytes(), at_upper.tobytes())
        if sets == prev_sets:
            break
        prev_sets = sets
        x = np.where(at_upper, 1.0, 0.0)
        free = ~(at_lower | at_upper)
        if free.any():
            idx = np.flatnonzero(free)
            up_idx = np.flatnonzero(at_upper)
            rhs = lin[idx].copy()
            if up_idx.size:
                rhs -= hess[np.ix_(idx, up_idx)].sum(axis=1)
            x[idx] = np.linalg.solve(hess[np.ix_(idx, idx)], rhs)
    candidate = np.clip(x, 0.0, 1.0)
    if _pg_residual(hess, lin, step, candidate) < tolerance:
        return candidate
    return None


def _project_gradient(hess: np.ndarray, lin: np.ndarray, step: float,
                      u0: np.ndarray, max_iterations: int, tolerance: float
                      ) -> tuple[np.ndarray, int]:
    """Projected gradient descent with Nesterov momentum and adaptive
    restart, finished by the exact active-set solve; stops when the
    projected-gradient residual falls below the tolerance or the iteration
    cap is hit."""
    solved = _active_set_solve(hess, lin, step, u0, tolerance)
    if solved is not None:
        return solved, 0

    u = u0
    y = u.copy()
    momentum = 1.0
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        grad = hess @ y
        grad -= lin
        u_next = y - step * grad
        np.clip(u_next, 0.0, 1.0, out=u_next)

        if _pg_residual(hess, lin, step, u_next) < tolerance:
            return u_next, iterations
        if iterations % 8 == 0:
            solved = _active_set_solve(hess, lin, step, u_next, tolerance)
            if solved is not None:
                return solved, iterations

        # adaptive restart: drop momentum when it points against progress
        if float(np.dot(y - u_next, u_next - u)) > 0.0:
            momentum = 1.0
            y = u_next.copy()
        else:
            momentum_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * momentum ** 2))
            y = u_next + ((momentum - 1.0) / momentum_next) * (u_next - u)
            momentum = momentum_next
        u = u_next
    return u, iterations


def mpc_solve(model: ZoneModel, current: tuple[float, float],
              ambient: AmbientConditions, schedule: SetpointSchedule,
              cfg: MpcConfig, sim_time: float = 0.0,
              warm_start: np.ndarray | None = None) -> MpcSolution:
    """Minimize the horizon cost and return the full solution.

    Ambient conditions are held constant over the prediction horizon.
    A non-finite cost falls back to all-zero duties with a diagnostic
    instead of emitting garbage.
    """
    n = cfg.horizon
    t0, h0 = current
    t_ref, h_ref = resolve_setpoint(schedule, ambient.time_of_day, sim_time)
    q = cfg.weight_tracking
    qh = cfg.weight_tracking * cfg.humidity_weight

    try:
        (powers_t, powers_h, cum_t, cum_h,
         g_t, g_h, hess, step) = _solver_data(model, cfg)
    except (ValueError, np.linalg.LinAlgError) as exc:
        return MpcSolution(
            u_heat=np.zeros(n), u_fan=np.zeros(n), cost=math.inf, iterations=0,
            diagnostics=[f"solver setup failed ({exc}); holding safe action"])
    free_t = powers_t[1:] * t0 + model.c_t * ambient.outdoor_temperature * cum_t
    free_h = powers_h[1:] * h0 + model.c_h * ambient.outdoor_humidity * cum_h
    err_t = t_ref - free_t                  # residual the inputs must close
    err_h = h_ref - free_h
    lin = 2.0 * (q * (g_t.T @ err_t) + qh * (g_h.T @ err_h))

    if warm_start is not None and warm_start.shape == (2 * n,):
        u0 = np.clip(warm_start, 0.0, 1.0)
    else:
        u0 = np.zeros(2 * n)
    u, iterations = _project_gradient(hess, lin, step, u0,
                                      cfg.max_iterations, cfg.tolerance)

    cost = mpc_cost(model, current, ambient, (t_ref, h_ref), cfg,
                    u[:n], u[n:])
    if not math.isfinite(cost):
        return MpcSolution(
            u_heat=np.zeros(n), u_fan=np.zeros(n), cost=math.inf,
            iterations=iterations,
            diagnostics=["solver produced non-finite cost; holding safe action"])
    return MpcSolution(u_heat=u[:n], u_fan=u[n:], cost=cost,
                       iterations=iterations)


def mpc_step(model: ZoneModel, current: tuple[float, float],
             ambient: AmbientConditions, schedule: SetpointSchedule,
             cfg: MpcConfig, sim_time: float = 0.0) -> tuple[float, float]:
    """First input of the optimized sequence (receding horizon)."""
    return mpc_solve(model, current, ambient, schedule, cfg, sim_time).first_input


def mpc_cost(model: ZoneModel, current: tuple[float, float],
             ambient: AmbientConditions, refs: tuple[float, float],
             cfg: MpcConfig, u_heat, u_fan) -> float:
    """Cost of a concrete input sequence, computed by direct simulation of
    the prediction model (shared by solver scoring and external checks)."""
    t, h = current
    t_ref, h_ref = refs
    q = cfg.weight_tracking
    qh = cfg.weight_tracking * cfg.humidity_weight
    r = cfg.weight_effort
    total = 0.0
    for k in range(cfg.horizon):
        t = model.predict_temperature(t, float(u_heat[k]), float(u_fan[k]),
                                      ambient.outdoor_temperature)
        h = model.predict_humidity(h, float(u_fan[k]), ambient.outdoor_humidity)
        total += q * (t_ref - t) ** 2 + qh * (h_ref - h) ** 2
        total += r * (float(u_heat[k]) ** 2 + float(u_fan[k]) ** 2)
    return float(total)


def n1_closed_form(model: ZoneModel, current: tuple[float, float],
                   ambient: AmbientConditions, refs: tuple[float, float],
                   cfg: MpcConfig) -> tuple[float, float]:
    """Unconstrained analytic minimizer for a one-step horizon, from the
    normal equations of the quadratic cost. Valid as the true optimum only
    when it lands inside [0, 1]^2."""
    t0, h0 = current
    t_ref, h_ref = refs
    q = cfg.weight_tracking
    qh = cfg.weight_tracking * cfg.humidity_weight
    r = cfg.weight_effort
    e_t = t_ref - model.a_t * t0 - model.c_t * ambient.outdoor_temperature
    e_h = h_ref - model.a_h * h0 - model.c_h * ambient.outdoor_humidity
    a = np.array([
        [q * model.b_h ** 2 + r, q * model.b_h * model.b_f],
        [q * model.b_h * model.b_f, q * model.b_f ** 2 + qh * model.d_f ** 2 + r],
    ])
    b = np.array([q * model.b_h * e_t,
                  q * model.b_f * e_t + qh * model.d_f * e_h])
    u = np.linalg.solve(a, b)
    return float(u[0]), float(u[1])
