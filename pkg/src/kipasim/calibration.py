"""Noise calibration of a measurement chain against a temperature-swept
matched load.

A 50-ohm load at temperature T emits thermal noise with quadrature
occupation ``(1/2) coth(hbar omega / 2 k_B T)``; sweeping T and fitting the
detected noise density pins down the chain's total gain and added noise
quanta. The forward model is

    N(T) = G * hbar * omega * R * B * ((1/2) coth(hbar omega / 2 k_B T) + n_add)

with G the linear power gain.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import constants, optimize

from .errors import FitError, UnderdeterminedError, ValidationError

DEFAULT_TEMPERATURES = tuple(np.linspace(0.05, 1.0, 20))
GRADIENT_REDUCTION = 1e-8
DEFAULT_MAX_ITERATIONS = 200


@dataclass(frozen=True)
class NoiseCurve:
    """Temperature-swept noise density data for one chain.

    ``temperatures`` in kelvin, strictly increasing; ``densities`` in
    V^2/Hz; ``omega`` is the detection frequency (rad/s).
    """

    temperatures: np.ndarray
    densities: np.ndarray
    omega: float
    impedance_r: float = 50.0
    bandwidth_b: float = 200e3

    def __post_init__(self):
        t = np.asarray(self.temperatures, dtype=float)
        d = np.asarray(self.densities, dtype=float)
        if t.ndim != 1 or d.shape != t.shape:
            raise ValidationError("temperatures and densities must be equal-length 1-D")
        if t.size < 1:
            raise ValidationError("curve needs at least one point")
        if np.any(t <= 0):
            raise ValidationError("temperatures must be positive")
        if np.any(np.diff(t) <= 0):
            raise ValidationError("temperatures must be strictly increasing")
        if np.any(d <= 0):
            raise ValidationError("densities must be positive")
        if self.omega <= 0 or self.impedance_r <= 0 or self.bandwidth_b <= 0:
            raise ValidationError("omega, impedance, and bandwidth must be positive")
        t.flags.writeable = False
        d.flags.writeable = False
        object.__setattr__(self, "temperatures", t)
        object.__setattr__(self, "densities", d)

    def to_csv(self) -> str:
        lines = ["temperature_K,noise_density_V2_per_Hz"]
        for t, d in zip(self.temperatures, self.densities):
            lines.append(f"{t:.17g},{d:.17g}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str, omega: float, impedance_r: float = 50.0,
                 bandwidth_b: float = 200e3) -> "NoiseCurve":
        rows = text.strip().splitlines()
        if not rows or not rows[0].startswith("temperature_K"):
            raise ValidationError("curve CSV must start with the standard header")
        data = np.array([row.split(",") for row in rows[1:]], dtype=float)
        return cls(
            temperatures=data[:, 0],
            densities=data[:, 1],
            omega=omega,
            impedance_r=impedance_r,
            bandwidth_b=bandwidth_b,
        )


def planck_noise(
    gain_linear: float,
    n_add: float,
    omega: float,
    impedance_r: float,
    bandwidth_b: float,
    temperature: float | np.ndarray,
) -> float | np.ndarray:
    """Detected noise density of a matched load at the given temperature."""
    t = np.asarray(temperature, dtype=float)
    if np.any(t <= 0):
        raise ValidationError("temperature must be positive")
    if gain_linear <= 0 or omega <= 0 or impedance_r <= 0 or bandwidth_b <= 0:
        raise ValidationError("gain, omega, impedance, and bandwidth must be positive")
    x = constants.hbar * omega / (2.0 * constants.k * t)
    value = gain_linear * constants.hbar * omega * impedance_r * bandwidth_b * (
        0.5 / np.tanh(x) + n_add
    )
    return float(value) if np.isscalar(temperature) else value


def planck_noise_jacobian(
    gain_linear: float,
    n_add: float,
    omega: float,
    impedance_r: float,
    bandwidth_b: float,
    temperatures: np.ndarray,
) -> np.ndarray:
    """Analytic Jacobian of the noise density w.r.t. (gain, n_add)."""
    x = constants.hbar * omega / (2.0 * constants.k * np.asarray(temperatures))
    prefactor = constants.hbar * omega * impedance_r * bandwidth_b
    d_gain = prefactor * (0.5 / np.tanh(x) + n_add)
    d_nadd = np.full_like(d_gain, gain_linear * prefactor)
    return np.column_stack([d_gain, d_nadd])


@dataclass(frozen=True)
class CalFitResult:
    """Fitted chain gain and added noise with standard errors."""

    gain_db: float
    gain_db_sigma: float
    n_add: float
    n_add_sigma: float
    residual_sum_squares: float
    iterations: int
    converged: bool
    residuals: np.ndarray

    @property
    def gain_linear(self) -> float:
        return 10.0 ** (self.gain_db / 10.0)

    def to_json(self) -> str:
        return json.dumps(
            {
                "gain_db": self.gain_db,
                "gain_db_sigma": self.gain_db_sigma,
                "n_add": self.n_add,
                "n_add_sigma": self.n_add_sigma,
                "residual_sum_squares": self.residual_sum_squares,
                "iterations": self.iterations,
                "converged": self.converged,
                "residuals": [float(r) for r in self.residuals],
            },
            indent=2,
            sort_keys=True,
        )


def _initial_guess(curve: NoiseCurve) -> tuple[float, float]:
    # Slope of the upper half of the range gives the gain (classical limit
    # dN/dT -> G R B k_B); the extrapolated intercept gives n_add.
    t, d = curve.temperatures, curve.densities
    upper = t >= np.median(t)
    if np.count_nonzero(upper) < 2:
        upper = np.ones_like(t, dtype=bool)
    slope, intercept = np.polyfit(t[upper], d[upper], 1)
    prefactor = constants.hbar * curve.omega * curve.impedance_r * curve.bandwidth_b
    if slope <= 0:
        gain = float(np.mean(d)) / prefactor
        return gain, 1.0
    gain = slope / (curve.impedance_r * curve.bandwidth_b * constants.k)
    n_add = max(intercept / (gain * prefactor), 0.0)
    return gain, n_add


def fit_noise_curve(
    curve: NoiseCurve,
    init: tuple[float, float] | None = None,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
) -> CalFitResult:
    """Least-squares fit of (gain, n_add) to a noise curve.

    Damped Gauss-Newton (scipy trust-region reflective with the analytic
    Jacobian); convergence requires the residual-gradient norm to fall
    below 1e-8 of its initial value. Standard errors come from the
    Gauss-Newton Hessian approximation.
    """
    if curve.temperatures.size < 3:
        raise UnderdeterminedError(
            "need at least 3 temperature points to fit (gain, n_add)"
        )
    if init is None:
        init = _initial_guess(curve)
    gain0 = max(float(init[0]), 1e-300)

    # Fit in units of the initial gain so both parameters are O(1).
    def residuals(theta: np.ndarray) -> np.ndarray:
        return (
            planck_noise(
                theta[0] * gain0, theta[1], curve.omega, curve.impedance_r,
                curve.bandwidth_b, curve.temperatures,
            )
            - curve.densities
        )

    def jacobian(theta: np.ndarray) -> np.ndarray:
        j = planck_noise_jacobian(
            theta[0] * gain0, theta[1], curve.omega, curve.impedance_r,
            curve.bandwidth_b, curve.temperatures,
        )
        j[:, 0] *= gain0
        return j

    x0 = np.array([1.0, float(init[1])])
    result = optimize.least_squares(
        residuals,
        x0,
        jac=jacobian,
        bounds=([1e-12, -np.inf], [np.inf, np.inf]),
        max_nfev=max_iterations,
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
    )
    grad0 = np.linalg.norm(jacobian(x0).T @ residuals(x0))
    grad = np.linalg.norm(result.jac.T @ result.fun)
    converged = bool(grad <= GRADIENT_REDUCTION * max(grad0, 1e-300))
    if result.status == 0 and not converged:
        raise FitError(
            f"calibration fit did not converge within {max_iterations} evaluations",
            last_params=(float(result.x[0] * gain0), float(result.x[1])),
        )

    gain = float(result.x[0] * gain0)
    n_add = float(result.x[1])
    rss = float(np.sum(result.fun**2))
    dof = max(curve.temperatures.size - 2, 1)
    jtj = result.jac.T @ result.jac
    try:
        cov = np.linalg.inv(jtj) * rss / dof
        sigma_scaled = np.sqrt(np.maximum(np.diag(cov), 0.0))
        sigma_gain = sigma_scaled[0] * gain0
        sigma_nadd = sigma_scaled[1]
    except np.linalg.LinAlgError:
        sigma_gain = sigma_nadd = math.nan
    if n_add < 0 and sigma_nadd > 0 and n_add < -3.0 * sigma_nadd:
        warnings.warn(
            f"fitted n_add = {n_add:.3g} is negative beyond 3 sigma; "
            "model mismatch likely",
            stacklevel=2,
        )
    gain_db = 10.0 * math.log10(gain)
    gain_db_sigma = 10.0 / math.log(10.0) * sigma_gain / gain
    return CalFitResult(
        gain_db=gain_db,
        gain_db_sigma=float(gain_db_sigma),
        n_add=n_add,
        n_add_sigma=float(sigma_nadd),
        residual_sum_squares=rss,
        iterations=int(result.nfev),
        converged=converged,
        residuals=result.fun.copy(),
    )


def generate_synthetic_curve(
    gain_linear: float,
    n_add: float,
    omega: float,
    impedance_r: float,
    bandwidth_b: float,
    temperatures: Sequence[float] = DEFAULT_TEMPERATURES,
    noise_fraction: float = 0.0,
    seed: int = 0,
) -> NoiseCurve:
    """Forward-model noise curve with multiplicative Gaussian noise."""
    if noise_fraction < 0:
        raise ValidationError("noise_fraction must be >= 0")
    temps = np.asarray(temperatures, dtype=float)
    clean = planck_noise(gain_linear, n_add, omega, impedance_r, bandwidth_b, temps)
    if noise_fraction > 0:
        rng = np.random.default_rng(seed)
        clean = clean * (1.0 + noise_fraction * rng.standard_normal(temps.size))
    return NoiseCurve(
        temperatures=temps,
        densities=clean,
        omega=omega,
        impedance_r=impedance_r,
        bandwidth_b=bandwidth_b,
    )
