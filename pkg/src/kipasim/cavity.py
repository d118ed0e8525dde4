"""Pumped two-sided resonator model with a current-dependent kinetic
inductance as the nonlinear element.

The resonator couples to two external ports (rates ``kappa_e1``,
``kappa_e2``) and an internal loss channel (``kappa_i``). Pumping at twice
the resonance frequency squeezes the intracavity field and distributes it
to both ports, which correlates the outputs. All expressions are the
frequency-domain solutions of the linearized Langevin equations; the pump
is parametrized by the cooperativity ``C = 4 g^2 / kappa^2`` with
parametric-oscillation threshold ``C = 1`` on resonance.

Frequencies and rates are angular (rad/s) throughout; the ``from_hz``
constructors convert ordinary frequencies at the boundary.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Mapping, NamedTuple, Sequence

import numpy as np
from scipy import optimize

from .errors import FitError, InstabilityError, ValidationError
from .gaussian import CovarianceMatrix2M

TWO_PI = 2.0 * math.pi

# |denominator| below this multiple of kappa^2 counts as sitting on the
# parametric threshold singularity.
SINGULARITY_TOL = 1e-12


@dataclass(frozen=True)
class ResonatorParams:
    """Physical device parameters of the two-sided resonator.

    Rates are angular (rad/s); ``n_e1``, ``n_e2``, ``n_i`` are the thermal
    occupancies of the two waveguide inputs and the internal bath. The
    waveguide inputs default to vacuum.
    """

    omega_a: float
    kappa_e1: float
    kappa_e2: float
    kappa_i: float
    n_e1: float = 0.0
    n_e2: float = 0.0
    n_i: float = 0.0

    def __post_init__(self):
        for name in ("omega_a", "kappa_e1", "kappa_e2", "kappa_i"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")
        if self.omega_a <= 0:
            raise ValidationError("omega_a must be positive")
        if min(self.kappa_e1, self.kappa_e2, self.kappa_i) < 0:
            raise ValidationError("damping rates must be non-negative")
        if self.kappa <= 0:
            raise ValidationError("total damping rate must be positive")
        if min(self.n_e1, self.n_e2, self.n_i) < 0:
            raise ValidationError("thermal occupancies must be non-negative")

    @classmethod
    def from_hz(
        cls,
        frequency_hz: float,
        kappa_e1_hz: float,
        kappa_e2_hz: float,
        kappa_i_hz: float,
        n_e1: float = 0.0,
        n_e2: float = 0.0,
        n_i: float = 0.0,
    ) -> "ResonatorParams":
        """Build from ordinary frequencies (Hz), converting by 2 pi."""
        return cls(
            omega_a=TWO_PI * frequency_hz,
            kappa_e1=TWO_PI * kappa_e1_hz,
            kappa_e2=TWO_PI * kappa_e2_hz,
            kappa_i=TWO_PI * kappa_i_hz,
            n_e1=n_e1,
            n_e2=n_e2,
            n_i=n_i,
        )

    @property
    def kappa(self) -> float:
        return self.kappa_e1 + self.kappa_e2 + self.kappa_i

    @property
    def eta_1(self) -> float:
        return self.kappa_e1 / self.kappa

    @property
    def eta_2(self) -> float:
        return self.kappa_e2 / self.kappa

    @property
    def eta_i(self) -> float:
        return self.kappa_i / self.kappa

    def with_occupancy(self, n_i: float) -> "ResonatorParams":
        """Copy with a different internal-bath occupancy."""
        return ResonatorParams(
            self.omega_a, self.kappa_e1, self.kappa_e2, self.kappa_i,
            self.n_e1, self.n_e2, n_i,
        )


@dataclass(frozen=True)
class PumpConfig:
    """Drive parameters: cooperativity, pump phase, and detuning (rad/s).

    The cooperativity is the primary strength parameter; the coupling rate
    ``g = sqrt(C) kappa / 2`` depends on the resonator and is available via
    :meth:`coupling`. ``phi_p`` defaults to -pi/2, which squeezes the X
    quadratures.
    """

    cooperativity: float
    phi_p: float = -math.pi / 2.0
    delta: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.cooperativity) or self.cooperativity < 0:
            raise ValidationError("cooperativity must be finite and >= 0")
        if not math.isfinite(self.phi_p) or not math.isfinite(self.delta):
            raise ValidationError("phi_p and delta must be finite")

    @classmethod
    def from_coupling(
        cls, g: float, kappa: float, phi_p: float = -math.pi / 2.0, delta: float = 0.0
    ) -> "PumpConfig":
        if kappa <= 0:
            raise ValidationError("kappa must be positive")
        return cls(cooperativity=4.0 * g * g / (kappa * kappa), phi_p=phi_p, delta=delta)

    def coupling(self, kappa: float) -> float:
        """Parametric coupling rate g (rad/s) for a given total kappa."""
        return 0.5 * kappa * math.sqrt(self.cooperativity)

    def with_cooperativity(self, c: float) -> "PumpConfig":
        return PumpConfig(cooperativity=c, phi_p=self.phi_p, delta=self.delta)


class GainPair(NamedTuple):
    """Signal and idler gain amplitudes at one sideband frequency."""

    g_signal: complex
    g_idler: complex


@dataclass(frozen=True)
class KineticInductanceParams:
    """Inductance of a superconducting film versus applied currents.

    ``i_star`` sets the current scale of the quadratic response; the
    quadratic expansion is valid for ``|i_dc| + |i_rf| < i_star`` (equality
    is allowed with a warning).
    """

    l0: float
    i_star: float
    i_dc: float = 0.0
    i_rf: float = 0.0

    def __post_init__(self):
        if self.l0 <= 0 or self.i_star <= 0:
            raise ValidationError("l0 and i_star must be positive")
        total = abs(self.i_dc) + abs(self.i_rf)
        if total > self.i_star:
            raise ValidationError(
                f"|i_dc| + |i_rf| = {total:.4g} exceeds i_star = {self.i_star:.4g}"
            )
        if total == self.i_star:
            warnings.warn(
                "currents reach i_star; quadratic inductance expansion is marginal",
                stacklevel=2,
            )


def kinetic_inductance(p: KineticInductanceParams) -> float:
    """Current-dependent inductance L(I) = L0 [1 + (I/I*)^2] expanded in
    dc and rf components."""
    x_dc = p.i_dc / p.i_star
    x_rf = p.i_rf / p.i_star
    return p.l0 * (1.0 + x_dc * x_dc + 2.0 * x_rf * x_dc + x_rf * x_rf)


def _require_stable(r: ResonatorParams, pump: PumpConfig) -> None:
    # Threshold: g^2 >= delta^2 + kappa^2/4, i.e. C >= 1 + (2 delta/kappa)^2.
    limit = 1.0 + (2.0 * pump.delta / r.kappa) ** 2
    if pump.cooperativity >= limit:
        raise InstabilityError(
            f"cooperativity {pump.cooperativity:.6g} at or beyond the "
            f"oscillation threshold {limit:.6g}"
        )


def _response_amplitudes(
    r: ResonatorParams, pump: PumpConfig, omega: float
) -> tuple[complex, complex]:
    """Shared port-independent response factors (h, m).

    Per port j: ``G_S,j = eta_j h - 1`` and ``G_I,j = eta_j m``.
    """
    kappa = r.kappa
    g = pump.coupling(kappa)
    delta = pump.delta
    denom = delta * delta - g * g + (1j * omega - 0.5 * kappa) ** 2
    if abs(denom) < SINGULARITY_TOL * kappa * kappa:
        raise InstabilityError(
            "response denominator vanishes: operating on the threshold singularity"
        )
    h = kappa * (0.5 * kappa - 1j * (omega + delta)) / denom
    m = -1j * kappa * g * cmath.exp(1j * pump.phi_p) / denom
    return h, m


def gain_parameters(
    r: ResonatorParams, pump: PumpConfig, omega: float = 0.0, port: int = 1
) -> GainPair:
    """Signal/idler gain amplitudes seen at one port, at sideband ``omega``.

    On resonance (``omega = delta = 0``) these reduce to
    ``G_S = 2 eta / (1 - C) - 1`` and ``|G_I| = 2 eta sqrt(C) / (1 - C)``.
    """
    eta = _port_eta(r, port)
    if eta <= 0:
        raise ValidationError(f"port {port} has zero external coupling")
    h, m = _response_amplitudes(r, pump, omega)
    return GainPair(g_signal=eta * h - 1.0, g_idler=eta * m)


def _port_eta(r: ResonatorParams, port: int) -> float:
    if port == 1:
        return r.eta_1
    if port == 2:
        return r.eta_2
    raise ValidationError(f"port must be 1 or 2, got {port!r}")


def commutation_identity_residual(pair: GainPair, eta: float) -> float:
    """Relative residual of the output-field commutator identity.

    For every port, ``|G_I|^2 / eta`` must equal
    ``|G_S|^2 + ((1 - eta)/eta) |G_S + 1|^2 - 1``.
    """
    if eta <= 0:
        raise ValidationError("eta must be positive")
    lhs = abs(pair.g_idler) ** 2 / eta
    rhs = abs(pair.g_signal) ** 2 + ((1.0 - eta) / eta) * abs(pair.g_signal + 1.0) ** 2 - 1.0
    scale = max(abs(lhs), abs(rhs), 1.0)
    return abs(lhs - rhs) / scale


def _port_coefficients(
    r: ResonatorParams, h: complex, m: complex, port: int
) -> list[tuple[complex, complex]]:
    """Coefficients (s, i) of each input bath in the port-output operator.

    Bath order: (port-1 waveguide, port-2 waveguide, internal loss). The
    cross-bath weights ``sqrt(kappa_x / kappa_e,j) (G_S,j + 1)`` are
    algebraically reduced to ``sqrt(eta_x eta_j) h`` so that ports with zero
    external coupling evaluate cleanly.
    """
    eta_self = _port_eta(r, port)
    eta_other = _port_eta(r, 3 - port)
    w_other = math.sqrt(eta_other * eta_self)
    w_loss = math.sqrt(r.eta_i * eta_self)
    coeffs = [
        (eta_self * h - 1.0, eta_self * m),
        (w_other * h, w_other * m),
        (w_loss * h, w_loss * m),
    ]
    if port == 2:  # bath order is fixed (e1, e2, loss)
        coeffs[0], coeffs[1] = coeffs[1], coeffs[0]
    return coeffs


def output_covariance(
    r: ResonatorParams, pump: PumpConfig, omega: float = 0.0
) -> CovarianceMatrix2M:
    """Covariance of the two port outputs (X1, P1, X2, P2).

    Assembles the real quadrature transformation from the per-bath operator
    coefficients and applies it to the thermal input covariance.
    """
    _require_stable(r, pump)
    h, m = _response_amplitudes(r, pump, omega)
    t = np.zeros((4, 6))
    for port in (1, 2):
        for k, (s, i) in enumerate(_port_coefficients(r, h, m, port)):
            a = s + i.conjugate()  # X_out row:  Re(a) X_b - Im(a) P_b
            b = s - i.conjugate()  # P_out row:  Im(b) X_b + Re(b) P_b
            row = 2 * (port - 1)
            col = 2 * k
            t[row, col] = a.real
            t[row, col + 1] = -a.imag
            t[row + 1, col] = b.imag
            t[row + 1, col + 1] = b.real
    occupancies = (r.n_e1, r.n_e2, r.n_i)
    v_in = np.diag([n + 0.5 for n in occupancies for _ in range(2)])
    v = t @ v_in @ t.T
    return CovarianceMatrix2M(0.5 * (v + v.T))


class QuadratureVariances(NamedTuple):
    x1: float
    p1: float
    x2: float
    p2: float


def quadrature_variances(
    r: ResonatorParams, pump: PumpConfig, omega: float = 0.0
) -> QuadratureVariances:
    """Output quadrature variances per port, from the scalar bath sums.

    Each bath with occupancy ``n`` and operator coefficients (s, i)
    contributes ``(n + 1/2) |s + conj(i)|^2`` to the X variance and
    ``(n + 1/2) |s - conj(i)|^2`` to the P variance. At
    ``delta = omega = n_i = 0`` and ``phi_p = -pi/2`` the port-j X variance
    reduces to ``(1 - 2 eta_j/(1 + sqrt(C)))^2 / 2 + 2 eta_j (1 - eta_j) /
    (1 + sqrt(C))^2``.
    """
    _require_stable(r, pump)
    h, m = _response_amplitudes(r, pump, omega)
    occupancies = (r.n_e1, r.n_e2, r.n_i)
    out = []
    for port in (1, 2):
        var_x = 0.0
        var_p = 0.0
        for n, (s, i) in zip(occupancies, _port_coefficients(r, h, m, port)):
            var_x += (n + 0.5) * abs(s + i.conjugate()) ** 2
            var_p += (n + 0.5) * abs(s - i.conjugate()) ** 2
        out.extend([var_x, var_p])
    return QuadratureVariances(*out)


def quadrature_cross_correlations(
    r: ResonatorParams, pump: PumpConfig, omega: float = 0.0
) -> tuple[float, float]:
    """Cross-port moments (<X1 X2>, <P1 P2>) from the scalar bath sums.

    At ``delta = omega = n_i = 0`` and ``phi_p = -pi/2`` these reduce to
    ``-2 sqrt(C eta_1 eta_2) / (1 + sqrt(C))^2`` and
    ``+2 sqrt(C eta_1 eta_2) / (1 - sqrt(C))^2``.
    """
    _require_stable(r, pump)
    h, m = _response_amplitudes(r, pump, omega)
    occupancies = (r.n_e1, r.n_e2, r.n_i)
    coeffs_1 = _port_coefficients(r, h, m, 1)
    coeffs_2 = _port_coefficients(r, h, m, 2)
    xx = 0.0
    pp = 0.0
    for n, (s1, i1), (s2, i2) in zip(occupancies, coeffs_1, coeffs_2):
        a1, a2 = s1 + i1.conjugate(), s2 + i2.conjugate()
        b1, b2 = s1 - i1.conjugate(), s2 - i2.conjugate()
        xx += (n + 0.5) * (a1 * a2.conjugate()).real
        pp += (n + 0.5) * (b1 * b2.conjugate()).real
    return xx, pp


def epr_parameter(r: ResonatorParams, pump: PumpConfig, omega: float = 0.0) -> float:
    """Joint-quadrature variance sum Var(X+) + Var(P-) of the two outputs.

    Values below 1 witness entanglement between the ports. Computed from
    the scalar variance and cross-correlation sums; agrees with
    ``duan_epr(output_covariance(...))`` to numerical precision.
    """
    v = quadrature_variances(r, pump, omega)
    xx, pp = quadrature_cross_correlations(r, pump, omega)
    return 0.5 * (v.x1 + v.p1 + v.x2 + v.p2) + xx - pp


def symmetric_lossless_variance(c: float) -> float:
    """Closed-form port variance (1 + C) / (2 (1 + sqrt(C))^2) for the
    symmetric lossless resonator; finite on C in [0, 1] including the
    threshold limit C = 1 (value 1/4)."""
    _check_unit_interval(c)
    return (1.0 + c) / (2.0 * (1.0 + math.sqrt(c)) ** 2)


def symmetric_lossless_epr(c: float) -> float:
    """Closed-form (1 + C) / (1 + sqrt(C))^2 for the symmetric lossless
    resonator; equals 1/2 in the threshold limit C = 1."""
    _check_unit_interval(c)
    return (1.0 + c) / (1.0 + math.sqrt(c)) ** 2


def single_port_lossless_variance(c: float) -> float:
    """Squeezed-quadrature variance ((1 - sqrt(C)) / (1 + sqrt(C)))^2 / 2
    of an ideal single-port resonator; vanishes in the C = 1 limit."""
    _check_unit_interval(c)
    s = math.sqrt(c)
    return 0.5 * ((1.0 - s) / (1.0 + s)) ** 2


def epr_closed_form(c: float, eta_1: float, eta_2: float) -> float:
    """General closed-form EPR sum for vacuum baths at phi_p = -pi/2.

    ``[C^2 + (1 - 4 sqrt(eta1 eta2 C)) - 2 C (1 + 2 sqrt(eta1 eta2 C)
    - 2 (eta1 + eta2))] / (1 - C)^2``; requires C < 1.
    """
    if not 0.0 <= c < 1.0:
        raise ValidationError("closed form requires 0 <= C < 1")
    root = math.sqrt(eta_1 * eta_2 * c)
    num = c * c + (1.0 - 4.0 * root) - 2.0 * c * (1.0 + 2.0 * root - 2.0 * (eta_1 + eta_2))
    return num / (1.0 - c) ** 2


def _check_unit_interval(c: float) -> None:
    if not 0.0 <= c <= 1.0:
        raise ValidationError("closed form requires C in [0, 1]")


def reflection_coefficient(r: ResonatorParams, omega: float, port: int = 1) -> complex:
    """Linear pump-off reflection S_jj(omega) = 1 - kappa_e,j /
    (kappa/2 - i (omega - omega_a)); passive, |S_jj| <= 1."""
    kappa_e = r.kappa_e1 if port == 1 else r.kappa_e2 if port == 2 else None
    if kappa_e is None:
        raise ValidationError(f"port must be 1 or 2, got {port!r}")
    return 1.0 - kappa_e / (0.5 * r.kappa - 1j * (omega - r.omega_a))


def pre_detection_loss(
    v: CovarianceMatrix2M, tau_1: float = 1.0, tau_2: float = 1.0, occupancy: float = 0.0
) -> CovarianceMatrix2M:
    """Beam-splitter loss between device and detector, per port.

    ``tau_j`` is the power transmission of port j's path; the replaced
    fraction couples in a bath of the given occupancy. Identity when both
    transmissions are 1 (the default: losses are excluded from reported
    values unless explicitly enabled).
    """
    for tau in (tau_1, tau_2):
        if not 0.0 < tau <= 1.0:
            raise ValidationError("transmission must be in (0, 1]")
    if occupancy < 0.0:
        raise ValidationError("bath occupancy must be non-negative")
    scale = np.diag([math.sqrt(tau_1)] * 2 + [math.sqrt(tau_2)] * 2)
    fill = np.diag(
        [(1.0 - tau_1) * (occupancy + 0.5)] * 2 + [(1.0 - tau_2) * (occupancy + 0.5)] * 2
    )
    out = scale @ v.matrix @ scale + fill
    return CovarianceMatrix2M(0.5 * (out + out.T))


@dataclass(frozen=True)
class HeatingModel:
    """Phenomenological map from pump power to drive strength and heating.

    ``C(P) = c_pump * P**pump_exponent`` and
    ``n_i(P) = c_heat * P**heat_exponent``; exponents 1 (default) or 2.
    """

    c_pump: float
    c_heat: float
    pump_exponent: int = 1
    heat_exponent: int = 1

    def __post_init__(self):
        if self.c_pump < 0 or self.c_heat < 0:
            raise ValidationError("heating coefficients must be non-negative")
        if self.pump_exponent not in (1, 2) or self.heat_exponent not in (1, 2):
            raise ValidationError("exponents must be 1 (linear) or 2 (quadratic)")

    def cooperativity(self, power: float) -> float:
        return self.c_pump * power**self.pump_exponent

    def occupancy(self, power: float) -> float:
        return self.c_heat * power**self.heat_exponent


_OBSERVABLES: dict[str, Callable[[ResonatorParams, PumpConfig], float]] = {
    "var_x1": lambda r, p: quadrature_variances(r, p).x1,
    "var_x2": lambda r, p: quadrature_variances(r, p).x2,
    "epr": epr_parameter,
}


@dataclass(frozen=True)
class PumpSweepFit:
    """Result of fitting the heating model to a pump-power sweep."""

    heating: HeatingModel
    stderr_c_pump: float
    stderr_c_heat: float
    residual_norm: float
    n_evaluations: int
    converged: bool


def sweep_observables(
    r: ResonatorParams,
    heating: HeatingModel,
    powers: Sequence[float],
    names: Sequence[str],
    phi_p: float = -math.pi / 2.0,
) -> dict[str, np.ndarray]:
    """Evaluate model observables over a pump-power sweep."""
    for name in names:
        if name not in _OBSERVABLES:
            raise ValidationError(f"unknown observable {name!r}")
    out: dict[str, list[float]] = {name: [] for name in names}
    for power in powers:
        r_p = r.with_occupancy(heating.occupancy(power))
        pump = PumpConfig(cooperativity=heating.cooperativity(power), phi_p=phi_p)
        for name in names:
            out[name].append(_OBSERVABLES[name](r_p, pump))
    return {name: np.asarray(vals) for name, vals in out.items()}


def fit_pump_sweep(
    powers: Sequence[float],
    observations: Mapping[str, Sequence[float]],
    r: ResonatorParams,
    phi_p: float = -math.pi / 2.0,
    pump_exponent: int = 1,
    heat_exponent: int = 1,
    init: tuple[float, float] | None = None,
    max_evaluations: int = 200,
) -> PumpSweepFit:
    """Least-squares fit of (c_pump, c_heat) to measured sweep data.

    ``observations`` maps observable names ("var_x1", "var_x2", "epr") to
    arrays aligned with ``powers``. Uncertainties come from the Jacobian at
    the solution; exceeding the evaluation cap raises a fit error carrying
    the last iterate.
    """
    powers = np.asarray(powers, dtype=float)
    if powers.size < 4:
        raise ValidationError("need at least 4 sweep points")
    if np.any(np.diff(powers) <= 0):
        raise ValidationError("pump powers must be strictly increasing")
    if not observations:
        raise ValidationError("need at least one observable series")
    names = sorted(observations)
    series = {}
    for name in names:
        y = np.asarray(observations[name], dtype=float)
        if y.shape != powers.shape:
            raise ValidationError(f"series {name!r} length does not match powers")
        series[name] = y

    p_max = float(np.max(powers))
    c_pump_cap = (1.0 - 1e-9) / p_max**pump_exponent

    def residuals(theta: np.ndarray) -> np.ndarray:
        heating = HeatingModel(
            c_pump=min(theta[0], c_pump_cap),
            c_heat=max(theta[1], 0.0),
            pump_exponent=pump_exponent,
            heat_exponent=heat_exponent,
        )
        model = sweep_observables(r, heating, powers, names, phi_p)
        return np.concatenate([model[name] - series[name] for name in names])

    if init is None:
        init = (0.5 * c_pump_cap, 0.1 / p_max**heat_exponent)
    x0 = np.asarray(init, dtype=float)
    result = optimize.least_squares(
        residuals,
        x0,
        bounds=([0.0, 0.0], [c_pump_cap, np.inf]),
        max_nfev=max_evaluations,
        xtol=1e-14,
        ftol=1e-14,
        gtol=1e-12,
    )
    if result.status == 0:
        raise FitError(
            f"pump-sweep fit did not converge within {max_evaluations} evaluations",
            last_params=tuple(result.x),
        )
    n_res = sum(len(series[name]) for name in names)
    dof = max(n_res - 2, 1)
    variance = 2.0 * result.cost / dof
    jtj = result.jac.T @ result.jac
    try:
        cov = np.linalg.inv(jtj) * variance
        sig = np.sqrt(np.maximum(np.diag(cov), 0.0))
    except np.linalg.LinAlgError:
        sig = np.array([math.nan, math.nan])
    heating = HeatingModel(
        c_pump=float(result.x[0]),
        c_heat=float(result.x[1]),
        pump_exponent=pump_exponent,
        heat_exponent=heat_exponent,
    )
    return PumpSweepFit(
        heating=heating,
        stderr_c_pump=float(sig[0]),
        stderr_c_heat=float(sig[1]),
        residual_norm=float(math.sqrt(2.0 * result.cost)),
        n_evaluations=int(result.nfev),
        converged=True,
    )
