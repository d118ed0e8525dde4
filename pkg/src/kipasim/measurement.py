"""Monte Carlo emulation of the dual-channel heterodyne measurement chain.

The forward model draws baseband quadrature samples directly from a device
covariance plus input-referred amplifier noise; the digital down-conversion
pipeline (mix, low-pass, decimate) is modeled separately at the voltage
level so the two can be cross-checked against each other. Pump-on/off
subtraction, detector-angle optimization, and covariance estimation mirror
the post-processing applied to real records.

Every stochastic operation is seeded and bit-reproducible. Independent
streams (e.g. sweep points, on/off settings) derive their seeds as
``derive_seed(root_seed, *key)`` from distinct integer keys; see that
function for the exact rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import constants, signal

from .errors import ConfigurationError, ValidationError
from .gaussian import (
    CovarianceMatrix2M,
    DetectorAngles,
    _branch_eigenvalues_matrix,
    rotation_matrix,
)

#: Restored vacuum noise in the on/off subtraction, (1/2) coth(hw/2kT) ~ 1/2.
DEFAULT_XI = 0.5

STOPBAND_ATTENUATION_DB = 60.0
FLAT_OBJECTIVE_TOL = 1e-9


@dataclass(frozen=True)
class ChainParams:
    """One measurement chain: total gain, added noise, and DDC settings.

    ``n_add`` is input-referred noise quanta added per quadrature, so the
    raw detected variance of a vacuum input is ``1/2 + n_add``. Bandwidth
    and sample rate are ordinary frequencies (Hz); ``omega_a`` and
    ``omega_if`` are angular.
    """

    gain_db: float
    n_add: float
    bandwidth_b: float
    impedance_r: float = 50.0
    omega_a: float = 2.0 * math.pi * 7.147e9
    omega_if: float = 2.0 * math.pi * 20e6
    sample_rate: float = 100e6

    def __post_init__(self):
        if not math.isfinite(self.gain_db):
            raise ValidationError("gain_db must be finite")
        if self.n_add < 0:
            raise ValidationError("added noise quanta must be >= 0")
        if not 0.0 < self.bandwidth_b < self.sample_rate / 2.0:
            raise ValidationError("bandwidth must satisfy 0 < B < sample_rate/2")
        if self.impedance_r <= 0:
            raise ValidationError("impedance must be positive")
        if self.omega_a <= 0:
            raise ValidationError("omega_a must be positive")
        if not 0.0 < self.omega_if < 2.0 * math.pi * self.sample_rate / 2.0:
            raise ValidationError("omega_if must lie below the Nyquist band edge")

    @property
    def gain_linear(self) -> float:
        return 10.0 ** (self.gain_db / 10.0)

    @property
    def if_frequency(self) -> float:
        """Intermediate frequency in Hz."""
        return self.omega_if / (2.0 * math.pi)


def derive_seed(root_seed: int, *key: int) -> int:
    """Deterministic child seed for an independent stream.

    Streams are split as ``SeedSequence((root_seed,) + key)``; distinct
    integer keys give statistically independent generators. Convention used
    by the pipelines: key = (sweep_index, 0) for pump-on records and
    (sweep_index, 1) for pump-off.
    """
    seq = np.random.SeedSequence(tuple([int(root_seed), *map(int, key)]))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class QuadratureRecords:
    """Sampled dimensionless quadratures per port, one pump setting."""

    x1: np.ndarray
    p1: np.ndarray
    x2: np.ndarray
    p2: np.ndarray
    pump_state: str = "on"
    seed: int = 0

    def __post_init__(self):
        arrays = []
        n = None
        for name in ("x1", "p1", "x2", "p2"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.ndim != 1:
                raise ValidationError(f"{name} must be a 1-D array")
            if n is None:
                n = a.size
            elif a.size != n:
                raise ValidationError("record arrays must have equal lengths")
            arrays.append(a)
        if n is None or n < 1:
            raise ValidationError("records need at least one sample")
        if self.pump_state not in ("on", "off"):
            raise ValidationError("pump_state must be 'on' or 'off'")
        for name, a in zip(("x1", "p1", "x2", "p2"), arrays):
            a = a.copy()
            a.flags.writeable = False
            object.__setattr__(self, name, a)

    @property
    def n(self) -> int:
        return self.x1.size

    def data(self) -> np.ndarray:
        """Samples as an (N, 4) array in (X1, P1, X2, P2) column order."""
        return np.column_stack([self.x1, self.p1, self.x2, self.p2])


def sample_quadratures(
    v: CovarianceMatrix2M,
    chain_1: ChainParams,
    chain_2: ChainParams,
    n: int,
    seed: int,
    pump_state: str = "on",
) -> QuadratureRecords:
    """Draw N quadrature 4-vectors from the device state plus chain noise.

    The sampled covariance is ``V + diag(n_add1, n_add1, n_add2, n_add2)``
    (input-referred added noise per quadrature). Deterministic for a fixed
    seed.
    """
    if n < 1:
        raise ValidationError("sample count must be >= 1")
    if not v.is_physical():
        raise ValidationError("cannot sample from a non-physical covariance")
    cov = v.matrix + np.diag(
        [chain_1.n_add, chain_1.n_add, chain_2.n_add, chain_2.n_add]
    )
    rng = np.random.default_rng(seed)
    try:
        samples = rng.multivariate_normal(np.zeros(4), cov, size=n, method="cholesky")
    except np.linalg.LinAlgError as exc:
        raise ValidationError(f"covariance is not positive definite: {exc}") from exc
    return QuadratureRecords(
        x1=samples[:, 0],
        p1=samples[:, 1],
        x2=samples[:, 2],
        p2=samples[:, 3],
        pump_state=pump_state,
        seed=seed,
    )


def rotate_records(records: QuadratureRecords, angles: DetectorAngles) -> QuadratureRecords:
    """Post-processing detector rotation applied sample-by-sample."""
    r = rotation_matrix(angles)
    rotated = records.data() @ r.T
    return QuadratureRecords(
        x1=rotated[:, 0],
        p1=rotated[:, 1],
        x2=rotated[:, 2],
        p2=rotated[:, 3],
        pump_state=records.pump_state,
        seed=records.seed,
    )


# ---------------------------------------------------------------------------
# Digital down-conversion


@lru_cache(maxsize=8)
def _design_taps(bandwidth_b: float, sample_rate: float) -> np.ndarray:
    # Linear-phase Kaiser low-pass: -6 dB point at B/2, transition width
    # B/4, stop-band attenuation >= 60 dB.
    nyquist = sample_rate / 2.0
    width = (bandwidth_b / 4.0) / nyquist
    numtaps, beta = signal.kaiserord(STOPBAND_ATTENUATION_DB, width)
    if numtaps % 2 == 0:
        numtaps += 1
    taps = signal.firwin(
        numtaps, bandwidth_b / 2.0, window=("kaiser", beta), fs=sample_rate
    )
    taps.flags.writeable = False
    return taps


def downconversion_filter(chain: ChainParams) -> np.ndarray:
    """FIR taps of the baseband low-pass used by the DDC."""
    return _design_taps(chain.bandwidth_b, chain.sample_rate)


def effective_noise_bandwidth(chain: ChainParams) -> float:
    """Two-sided effective noise bandwidth (Hz) of the designed filter,
    ``fs * sum(h^2) / (sum h)^2``; close to but not exactly B."""
    taps = downconversion_filter(chain)
    return chain.sample_rate * float(np.sum(taps**2)) / float(np.sum(taps)) ** 2


@dataclass(frozen=True)
class BasebandIQ:
    """Down-converted quadrature voltage pairs and pipeline metadata."""

    i: np.ndarray
    q: np.ndarray
    sample_rate: float
    decimation: int
    effective_noise_bandwidth: float


def downconvert_pipeline(
    series: np.ndarray,
    chain: ChainParams,
    quantize_bits: int | None = None,
    full_scale: float | None = None,
) -> BasebandIQ:
    """Mix a real IF voltage record to baseband I/Q, filter, and decimate.

    Convention: a tone ``A cos(omega_if t + theta)`` yields ``I = A cos
    theta`` and ``Q = A sin theta``. Output is decimated by
    ``round(sample_rate / B)`` so the complex sample rate roughly matches
    the filter bandwidth; filter edge transients are trimmed.

    ``quantize_bits`` optionally applies a uniform mid-rise ADC model over
    ``[-full_scale, +full_scale]`` before processing (off by default).
    """
    series = np.asarray(series, dtype=float)
    if series.ndim != 1:
        raise ValidationError("input series must be 1-D")
    f_if = chain.if_frequency
    f_nyq = chain.sample_rate / 2.0
    half_b = chain.bandwidth_b / 2.0
    if f_if - half_b <= 0.0 or f_if + half_b >= f_nyq:
        raise ConfigurationError(
            "IF band [f_if - B/2, f_if + B/2] must fit inside (0, sample_rate/2)"
        )
    taps = downconversion_filter(chain)
    if series.size < taps.size:
        raise ValidationError(
            f"series length {series.size} is below the filter length {taps.size}"
        )
    if quantize_bits is not None:
        if full_scale is None or full_scale <= 0:
            raise ConfigurationError("quantization requires a positive full_scale")
        levels = 2 ** int(quantize_bits)
        step = 2.0 * full_scale / levels
        series = np.clip(series, -full_scale, full_scale - step)
        series = (np.floor(series / step) + 0.5) * step

    t = np.arange(series.size) / chain.sample_rate
    phase = chain.omega_if * t
    mixed_i = 2.0 * series * np.cos(phase)
    mixed_q = -2.0 * series * np.sin(phase)

    factor = max(1, round(chain.sample_rate / chain.bandwidth_b))
    first = math.ceil((taps.size - 1) / factor)  # full-overlap region only
    last = (series.size - 1) // factor
    i_full = signal.upfirdn(taps, mixed_i, up=1, down=factor)
    q_full = signal.upfirdn(taps, mixed_q, up=1, down=factor)
    i_out = i_full[first : last + 1]
    q_out = q_full[first : last + 1]
    if i_out.size < 1:
        raise ValidationError("series too short after transient trimming")
    return BasebandIQ(
        i=i_out,
        q=q_out,
        sample_rate=chain.sample_rate / factor,
        decimation=factor,
        effective_noise_bandwidth=effective_noise_bandwidth(chain),
    )


def _quadrature_scale(chain: ChainParams) -> float:
    if chain.bandwidth_b <= 0 or chain.impedance_r <= 0 or chain.gain_linear <= 0:
        raise ValidationError("bandwidth, impedance, and gain must be positive")
    return math.sqrt(
        2.0 * constants.hbar * chain.omega_a * chain.bandwidth_b
        * chain.impedance_r * chain.gain_linear
    )


def scale_to_quanta(
    i: np.ndarray | float, q: np.ndarray | float, chain: ChainParams
) -> tuple[np.ndarray, np.ndarray]:
    """Convert I/Q voltages to dimensionless quadratures,
    ``X = I / sqrt(2 hbar omega_a B R G)`` and likewise for P."""
    scale = _quadrature_scale(chain)
    return np.asarray(i, dtype=float) / scale, np.asarray(q, dtype=float) / scale


def quanta_to_volts(
    x: np.ndarray | float, p: np.ndarray | float, chain: ChainParams
) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`scale_to_quanta`."""
    scale = _quadrature_scale(chain)
    return np.asarray(x, dtype=float) * scale, np.asarray(p, dtype=float) * scale


def synthesize_noise_floor(
    chain: ChainParams, quanta: float, n_samples: int, seed: int
) -> np.ndarray:
    """White IF voltage noise whose in-band density corresponds to the given
    input-referred quanta per quadrature after the actual DDC filter.

    Uses the designed filter's effective noise bandwidth, so the chain
    ``downconvert_pipeline -> scale_to_quanta`` recovers ``Var(X) = quanta``.
    """
    if quanta <= 0:
        raise ValidationError("quanta must be positive")
    enbw = effective_noise_bandwidth(chain)
    density = (
        quanta * constants.hbar * chain.omega_a * chain.impedance_r
        * chain.gain_linear * chain.bandwidth_b / enbw
    )
    sigma = math.sqrt(density * chain.sample_rate)
    rng = np.random.default_rng(seed)
    return rng.normal(0.0, sigma, size=n_samples)


# ---------------------------------------------------------------------------
# Moment estimation and pump-on/off subtraction


def _second_moments(data: np.ndarray) -> np.ndarray:
    centered = data - data.mean(axis=0)
    n = data.shape[0]
    if n < 2:
        raise ValidationError("need at least 2 samples for moments")
    m = centered.T @ centered / (n - 1)
    return 0.5 * (m + m.T)


def _block_bounds(n: int, n_blocks: int) -> list[tuple[int, int]]:
    if n_blocks < 2:
        raise ValidationError("need at least 2 jackknife blocks")
    if n < n_blocks:
        raise ValidationError("fewer samples than jackknife blocks")
    edges = np.linspace(0, n, n_blocks + 1, dtype=int)
    return [(int(edges[k]), int(edges[k + 1])) for k in range(n_blocks)]


def _jackknife(values: np.ndarray) -> np.ndarray:
    # Delete-one-block jackknife standard error from the k leave-out values.
    k = values.shape[0]
    mean = values.mean(axis=0)
    return np.sqrt((k - 1) / k * np.sum((values - mean) ** 2, axis=0))


@dataclass(frozen=True)
class CovarianceEstimate:
    """Sample covariance with jackknife standard errors."""

    matrix: np.ndarray
    stderr: np.ndarray
    degenerate: bool = False

    @property
    def covariance(self) -> CovarianceMatrix2M:
        if self.degenerate:
            raise ValidationError("estimate is degenerate (zero variance)")
        return CovarianceMatrix2M(self.matrix)


def estimate_covariance(
    records: QuadratureRecords, n_blocks: int = 20
) -> CovarianceEstimate:
    """Mean-subtracted symmetrized sample covariance from records.

    Standard errors are delete-one-block jackknife over ``n_blocks``
    contiguous blocks. Constant records yield a zero matrix flagged as
    degenerate rather than an error.
    """
    data = records.data()
    if records.n < 2:
        raise ValidationError("need at least 2 samples to estimate a covariance")
    full = _second_moments(data)
    if np.any(np.diag(full) <= 0.0):
        return CovarianceEstimate(
            matrix=np.zeros((4, 4)), stderr=np.zeros((4, 4)), degenerate=True
        )
    bounds = _block_bounds(records.n, n_blocks)
    leave_outs = np.empty((len(bounds), 4, 4))
    for k, (lo, hi) in enumerate(bounds):
        keep = np.concatenate([data[:lo], data[hi:]])
        leave_outs[k] = _second_moments(keep)
    return CovarianceEstimate(matrix=full, stderr=_jackknife(leave_outs))


@dataclass(frozen=True)
class SubtractedMoments:
    """Pump-on minus pump-off second moments with vacuum noise restored.

    Diagonal entries are ``<q^2>_on - <q^2>_off + xi``; cross moments
    subtract without the vacuum term. ``stderr`` combines jackknife errors
    of both settings in quadrature.
    """

    matrix: np.ndarray
    stderr: np.ndarray
    xi: float
    n_on: int
    n_off: int

    @property
    def covariance(self) -> CovarianceMatrix2M:
        return CovarianceMatrix2M(self.matrix)


def _check_paired(on: QuadratureRecords, off: QuadratureRecords) -> None:
    if on.pump_state == off.pump_state:
        raise ValidationError("need one pump-on and one pump-off record set")


def on_off_subtract(
    on: QuadratureRecords,
    off: QuadratureRecords,
    xi: float = DEFAULT_XI,
    n_blocks: int = 20,
) -> SubtractedMoments:
    """Estimate signal moments by differencing pump-on and pump-off records.

    ``xi`` restores the vacuum noise removed together with the chain noise
    (default 1/2, the low-temperature limit of the input thermal noise).
    """
    _check_paired(on, off)
    if xi < 0:
        raise ValidationError("xi must be non-negative")
    value, stderr = subtracted_statistic(
        on, off, xi, lambda m: m, n_blocks=n_blocks
    )
    return SubtractedMoments(
        matrix=value, stderr=stderr, xi=xi, n_on=on.n, n_off=off.n
    )


def subtracted_statistic(
    on: QuadratureRecords,
    off: QuadratureRecords,
    xi: float,
    stat: Callable[[np.ndarray], np.ndarray | float],
    n_blocks: int = 20,
):
    """Evaluate ``stat`` on the subtracted moment matrix with a jackknife SE.

    ``stat`` maps a 4x4 moment matrix to a scalar or array; the jackknife
    deletes aligned blocks from the on and off records simultaneously.
    """
    _check_paired(on, off)
    data_on = on.data()
    data_off = off.data()

    def subtracted(d_on: np.ndarray, d_off: np.ndarray) -> np.ndarray:
        return _second_moments(d_on) - _second_moments(d_off) + xi * np.eye(4)

    full = np.asarray(stat(subtracted(data_on, data_off)), dtype=float)
    bounds_on = _block_bounds(on.n, n_blocks)
    bounds_off = _block_bounds(off.n, n_blocks)
    leave_outs = np.empty((n_blocks,) + full.shape)
    for k in range(n_blocks):
        lo_on, hi_on = bounds_on[k]
        lo_off, hi_off = bounds_off[k]
        keep_on = np.concatenate([data_on[:lo_on], data_on[hi_on:]])
        keep_off = np.concatenate([data_off[:lo_off], data_off[hi_off:]])
        leave_outs[k] = stat(subtracted(keep_on, keep_off))
    value = full if full.shape else float(full)
    stderr = _jackknife(leave_outs)
    return value, (stderr if full.shape else float(stderr))


# ---------------------------------------------------------------------------
# Detector-angle optimization


@dataclass(frozen=True)
class AngleOptimum:
    """Result of a detector-angle scan."""

    phi: float
    value: float
    flat: bool = False


def optimize_detector_angle(
    objective: Callable[[float], float], grid_points: int = 64
) -> AngleOptimum:
    """Minimize a pi-periodic objective over the detector angle.

    Grid search over [0, pi) followed by parabolic interpolation around the
    minimum. A flat objective (variation below 1e-9) returns phi = 0 with
    the flat flag set.
    """
    if grid_points < 32:
        raise ValidationError("angle grid needs at least 32 points")
    phis = np.linspace(0.0, math.pi, grid_points, endpoint=False)
    values = np.array([objective(p) for p in phis])
    if float(values.max() - values.min()) < FLAT_OBJECTIVE_TOL:
        return AngleOptimum(phi=0.0, value=float(objective(0.0)), flat=True)
    k = int(np.argmin(values))
    v_mid = values[k]
    v_lo = values[(k - 1) % grid_points]
    v_hi = values[(k + 1) % grid_points]
    step = math.pi / grid_points
    denom = v_lo - 2.0 * v_mid + v_hi
    if abs(denom) > 0:
        shift = 0.5 * (v_lo - v_hi) / denom
        phi = (phis[k] + shift * step) % math.pi
        value = float(objective(phi))
        if value <= v_mid:
            return AngleOptimum(phi=float(phi), value=value)
    return AngleOptimum(phi=float(phis[k]), value=float(v_mid))


def _rotate_matrix(m: np.ndarray, phi_1: float, phi_2: float) -> np.ndarray:
    r = rotation_matrix(DetectorAngles(phi_1, phi_2))
    return r @ m @ r.T


def port_variance_objective(m: np.ndarray, port: int) -> Callable[[float], float]:
    """Objective: X variance of one port after a common-angle rotation."""
    idx = 0 if port == 1 else 2
    return lambda phi: float(_rotate_matrix(m, phi, phi)[idx, idx])


def epr_objective(m: np.ndarray) -> Callable[[float], float]:
    """Objective: joint EPR variance sum after rotating both ports."""

    def value(phi: float) -> float:
        r = _rotate_matrix(m, phi, phi)
        return float(
            0.5 * (r[0, 0] + r[2, 2]) + r[0, 2] + 0.5 * (r[1, 1] + r[3, 3]) - r[1, 3]
        )

    return value


def moment_epr(m: np.ndarray) -> float:
    """EPR variance sum of a moment matrix without rotation."""
    return epr_objective(m)(0.0)


def moment_zeta_minus(m: np.ndarray) -> float:
    """Smallest partially transposed symplectic eigenvalue of a sample
    moment matrix; negative radicands from statistical noise are clamped
    instead of rejected."""
    zeta, _ = _branch_eigenvalues_matrix(m, -1.0, guard_tol=None)
    return zeta


def moment_log_negativity(m: np.ndarray, base: float = 2.0) -> float:
    """Logarithmic negativity of a sample moment matrix.

    Unlike the model-state path this does not enforce physicality: finite-N
    estimates of near-pure states fluctuate across the boundary, where the
    closed form extends continuously.
    """
    zeta = moment_zeta_minus(m)
    if zeta <= 0.0:
        return math.inf
    return max(0.0, -math.log(2.0 * zeta) / math.log(base))


# ---------------------------------------------------------------------------
# Record file I/O


def records_to_csv(records: QuadratureRecords, path) -> None:
    """Write records as CSV with a metadata header comment."""
    header = (
        f"pump_state={records.pump_state} seed={records.seed} n={records.n}\n"
        "x1,p1,x2,p2"
    )
    np.savetxt(
        path, records.data(), delimiter=",", header=header, fmt="%.17g"
    )


def records_from_csv(path) -> QuadratureRecords:
    """Read records written by :func:`records_to_csv`."""
    with open(path) as fh:
        first = fh.readline()
    meta = {}
    for token in first.lstrip("# ").split():
        if "=" in token:
            key, _, val = token.partition("=")
            meta[key] = val
    data = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
    if data.shape[1] != 4:
        raise ValidationError("record CSV must have 4 columns")
    return QuadratureRecords(
        x1=data[:, 0],
        p1=data[:, 1],
        x2=data[:, 2],
        p2=data[:, 3],
        pump_state=meta.get("pump_state", "on"),
        seed=int(meta.get("seed", 0)),
    )
