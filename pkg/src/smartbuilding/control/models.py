"""Least-squares identification of the per-zone prediction models.

Each zone gets two scalar one-step models fitted from logged operation:

    T[k+1] = a_t*T[k] + b_h*u_h[k] + b_f*u_f[k] + c_t*T_amb[k]
    H[k+1] = a_h*H[k] + d_f*u_f[k] + c_h*H_amb[k]

The plant's fan term is bilinear in (duty, temperature), so these are local
linear approximations; the fit residual quantifies the mismatch over the
excitation range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_TEMP_COEFFS = 4
N_HUM_COEFFS = 3
MIN_SAMPLES = 10 * N_TEMP_COEFFS

# Regressor columns below this relative excitation are treated as unexcited.
_EXCITATION_EPS = 1e-12


class IdentificationError(Exception):
    """Insufficient, unexciting, or unstable identification data."""


@dataclass(frozen=True)
class ZoneModel:
    a_t: float
    b_h: float
    b_f: float
    c_t: float
    a_h: float
    d_f: float
    c_h: float
    fit_residual: float = 0.0            # RMS of temperature fit, degC
    fit_residual_humidity: float = 0.0   # RMS of humidity fit, %RH

    def __post_init__(self):
        if abs(self.a_t) >= 1.0 or abs(self.a_h) >= 1.0:
            raise IdentificationError(
                f"identified model unstable (a_t={self.a_t:.4f}, a_h={self.a_h:.4f})")

    def predict_temperature(self, t: float, u_h: float, u_f: float,
                            t_amb: float) -> float:
        return self.a_t * t + self.b_h * u_h + self.b_f * u_f + self.c_t * t_amb

    def predict_humidity(self, h: float, u_f: float, h_amb: float) -> float:
        return self.a_h * h + self.d_f * u_f + self.c_h * h_amb


def identify_model(history: list[tuple[float, float, float, float, float, float]]
                   ) -> ZoneModel:
    """Fit the one-step models from consecutive (T, H, u_h, u_f, T_amb, H_amb)
    samples at the controller tick rate.

    Raises IdentificationError on insufficient data, unexcited inputs,
    rank-deficient regressors, or an unstable fit.
    """
    if len(history) < MIN_SAMPLES:
        raise IdentificationError(
            f"need at least {MIN_SAMPLES} samples, got {len(history)}")

    data = np.asarray(history, dtype=float)
    t, h, u_h, u_f, t_amb, h_amb = data.T

    for name, u in (("u_h", u_h[:-1]), ("u_f", u_f[:-1])):
        if float(np.std(u)) <= _EXCITATION_EPS:
            raise IdentificationError(
                f"input {name} is constant over the record; excite it first")

    x_t = np.column_stack([t[:-1], u_h[:-1], u_f[:-1], t_amb[:-1]])
    y_t = t[1:]
    x_h = np.column_stack([h[:-1], u_f[:-1], h_amb[:-1]])
    y_h = h[1:]

    for name, x in (("temperature", x_t), ("humidity", x_h)):
        if np.linalg.matrix_rank(x) < x.shape[1]:
            raise IdentificationError(
                f"{name} regressor is rank deficient; inputs not independent")

    coef_t, _, _, _ = np.linalg.lstsq(x_t, y_t, rcond=None)
    coef_h, _, _, _ = np.linalg.lstsq(x_h, y_h, rcond=None)
    res_t = float(np.sqrt(np.mean((x_t @ coef_t - y_t) ** 2)))
    res_h = float(np.sqrt(np.mean((x_h @ coef_h - y_h) ** 2)))

    return ZoneModel(
        a_t=float(coef_t[0]), b_h=float(coef_t[1]),
        b_f=float(coef_t[2]), c_t=float(coef_t[3]),
        a_h=float(coef_h[0]), d_f=float(coef_h[1]), c_h=float(coef_h[2]),
        fit_residual=res_t, fit_residual_humidity=res_h,
    )
