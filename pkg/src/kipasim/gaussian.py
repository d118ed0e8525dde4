"""Two-mode Gaussian state toolbox: covariance matrices, symplectic spectra,
entanglement measures, and detector-phase rotations.

Conventions, fixed package-wide:

* quadrature ordering ``(X1, P1, X2, P2)``;
* vacuum variance 1/2 per quadrature, so physicality reads ``nu >= 1/2``;
* logarithmic negativity in ebits, ``E_N = max(0, -log2(2 zeta_minus))``,
  which is zero for the vacuum (the log base is configurable).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalDomainError, ValidationError

VACUUM_VARIANCE = 0.5

# Tolerances for the type invariants.
SYMMETRY_TOL = 1e-12
PHYSICALITY_TOL = 1e-9
DISCRIMINANT_TOL = 1e-9

# Symplectic form for two modes in (X1, P1, X2, P2) ordering.
OMEGA = np.array(
    [
        [0.0, 1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0, 0.0],
    ]
)


@dataclass(frozen=True)
class CovarianceMatrix2M:
    """Symmetrized 4x4 covariance matrix of two bosonic modes.

    ``matrix[i, j]`` holds the symmetrized second moment of the quadrature
    pair ``(i, j)`` in the (X1, P1, X2, P2) ordering. Construction checks
    shape, finiteness, symmetry (1e-12) and strictly positive diagonals;
    full physicality (``nu_minus >= 1/2``) is checked by the operations
    that rely on it, since sample estimates of near-pure states fluctuate
    slightly below the boundary.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (4, 4):
            raise ValidationError(f"covariance matrix must be 4x4, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValidationError("covariance matrix has non-finite entries")
        # 1e-12 absolute for order-unity covariances, relative beyond that
        if np.max(np.abs(m - m.T)) > SYMMETRY_TOL * max(1.0, float(np.max(np.abs(m)))):
            raise ValidationError("covariance matrix is not symmetric to 1e-12")
        if np.any(np.diag(m) <= 0.0):
            raise ValidationError("covariance diagonal entries must be positive")
        m = 0.5 * (m + m.T)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def block_a(self) -> np.ndarray:
        return self.matrix[:2, :2]

    @property
    def block_b(self) -> np.ndarray:
        return self.matrix[2:, 2:]

    @property
    def block_c(self) -> np.ndarray:
        return self.matrix[:2, 2:]

    def is_physical(self, tol: float = PHYSICALITY_TOL) -> bool:
        """Check ``nu_minus >= 1/2 - tol`` via the closed-form spectrum."""
        try:
            _require_physical(self, tol)
        except (ValidationError, NumericalDomainError):
            return False
        return True

    def to_json(self) -> str:
        """Serialize as a JSON array-of-arrays in (X1, P1, X2, P2) order."""
        return json.dumps([[float(x) for x in row] for row in self.matrix])

    @classmethod
    def from_json(cls, text: str) -> "CovarianceMatrix2M":
        return cls(np.array(json.loads(text), dtype=float))

    def to_csv(self) -> str:
        """Serialize as four comma-separated lines, one matrix row each."""
        return "\n".join(",".join(f"{x:.17g}" for x in row) for row in self.matrix) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "CovarianceMatrix2M":
        rows = [line.split(",") for line in text.strip().splitlines()]
        return cls(np.array(rows, dtype=float))


def vacuum_cm() -> CovarianceMatrix2M:
    """Covariance of two vacuum modes, diag(1/2, 1/2, 1/2, 1/2)."""
    return CovarianceMatrix2M(np.eye(4) * VACUUM_VARIANCE)


def thermal_cm(n1: float, n2: float) -> CovarianceMatrix2M:
    """Two uncorrelated thermal modes with mean occupancies ``n1``, ``n2``."""
    if n1 < 0 or n2 < 0:
        raise ValidationError("thermal occupancies must be non-negative")
    return CovarianceMatrix2M(np.diag([n1 + 0.5, n1 + 0.5, n2 + 0.5, n2 + 0.5]))


@dataclass(frozen=True)
class SymplecticSpectrum:
    """Symplectic eigenvalues of a two-mode covariance matrix.

    ``nu_minus <= nu_plus`` are the ordinary eigenvalues; ``zeta_minus`` is
    the smallest eigenvalue after partial transposition of mode 2.
    """

    nu_minus: float
    nu_plus: float
    zeta_minus: float

    def __post_init__(self):
        if not (self.nu_minus <= self.nu_plus):
            raise ValidationError("symplectic eigenvalues must be sorted ascending")
        if min(self.nu_minus, self.nu_plus, self.zeta_minus) <= 0.0:
            raise ValidationError("symplectic eigenvalues must be positive")


@dataclass(frozen=True)
class DetectorAngles:
    """Post-processing rotation angle per port, stored in (-pi, pi]."""

    phi_1: float
    phi_2: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "phi_1", _wrap_angle(self.phi_1))
        object.__setattr__(self, "phi_2", _wrap_angle(self.phi_2))


def _wrap_angle(phi: float) -> float:
    if not math.isfinite(phi):
        raise ValidationError("detector angle must be finite")
    wrapped = math.remainder(phi, 2.0 * math.pi)
    if wrapped <= -math.pi:  # remainder returns [-pi, pi]; fold -pi onto +pi
        wrapped = math.pi
    return wrapped


def _branch_eigenvalues_matrix(
    m: np.ndarray, det_c_sign: float, guard_tol: float | None = DISCRIMINANT_TOL
) -> tuple[float, float]:
    """Closed-form pair sqrt((d -+ sqrt(d^2 - 4 det V)) / 2) for one branch.

    ``d = det A + det B + sign * 2 det C``; ``sign = -1`` gives the
    partially transposed branch. ``guard_tol = None`` clamps negative
    radicands unconditionally (for noisy sample estimates).
    """
    det_a = float(np.linalg.det(m[:2, :2]))
    det_b = float(np.linalg.det(m[2:, 2:]))
    det_c = float(np.linalg.det(m[:2, 2:]))
    det_v = float(np.linalg.det(m))
    d = det_a + det_b + det_c_sign * 2.0 * det_c
    disc = d * d - 4.0 * det_v
    disc = _clamp_nonnegative(disc, "symplectic discriminant", guard_tol)
    root = math.sqrt(disc)
    lo = _clamp_nonnegative((d - root) / 2.0, "smaller symplectic radicand", guard_tol)
    hi = _clamp_nonnegative((d + root) / 2.0, "larger symplectic radicand", guard_tol)
    return math.sqrt(lo), math.sqrt(hi)


def _branch_eigenvalues(v: CovarianceMatrix2M, det_c_sign: float) -> tuple[float, float]:
    return _branch_eigenvalues_matrix(v.matrix, det_c_sign)


def _clamp_nonnegative(
    x: float, what: str, guard_tol: float | None = DISCRIMINANT_TOL
) -> float:
    if x < 0.0:
        if guard_tol is not None and x < -guard_tol:
            raise NumericalDomainError(f"{what} is negative beyond tolerance: {x:.3e}")
        return 0.0
    return x


def symplectic_eigenvalues(v: CovarianceMatrix2M) -> SymplecticSpectrum:
    """Ordinary and partially transposed symplectic spectrum of ``v``.

    Uses the two-mode closed form: with blocks A, B, C of the covariance,
    ``d = det A + det B + 2 det C`` for the ordinary branch, and the sign
    of ``det C`` flips under partial transposition. Raises a validation
    error for non-symmetric or non-physical input.
    """
    _require_physical(v)
    nu_minus, nu_plus = _branch_eigenvalues(v, +1.0)
    zeta_minus, _ = _branch_eigenvalues(v, -1.0)
    return SymplecticSpectrum(nu_minus=nu_minus, nu_plus=nu_plus, zeta_minus=zeta_minus)


def _require_physical(v: CovarianceMatrix2M, tol: float = PHYSICALITY_TOL) -> None:
    # Robertson-Schrodinger criterion V + i Omega / 2 >= 0, equivalent to
    # nu_minus >= 1/2 but numerically stable near pure states, where the
    # determinant-based closed form loses sqrt(eps) precision.
    herm = v.matrix.astype(complex) + 0.5j * OMEGA
    min_eig = float(np.linalg.eigvalsh(herm)[0])
    scale = max(1.0, float(np.max(np.diag(v.matrix))))
    if min_eig < -tol * scale:
        raise ValidationError(
            f"covariance is not physical: min eig(V + iΩ/2) = {min_eig:.6g}"
        )


def log_negativity(v: CovarianceMatrix2M, base: float = 2.0) -> float:
    """Logarithmic negativity ``max(0, -log_base(2 zeta_minus))``.

    Zero exactly when ``zeta_minus >= 1/2`` (PPT separable); with the
    default base 2 the value is in ebits.
    """
    if base <= 1.0:
        raise ValidationError("log base must exceed 1")
    zeta = symplectic_eigenvalues(v).zeta_minus
    if zeta <= 0.0:
        raise NumericalDomainError("zeta_minus must be positive")
    return max(0.0, -math.log(2.0 * zeta) / math.log(base))


def duan_epr(v: CovarianceMatrix2M) -> float:
    """Joint-quadrature variance sum Var(X+) + Var(P-).

    ``X+ = (X1 + X2)/sqrt(2)`` and ``P- = (P1 - P2)/sqrt(2)``; values below
    1 witness entanglement, the vacuum gives exactly 1.
    """
    _require_physical(v)
    m = v.matrix
    var_x_plus = 0.5 * (m[0, 0] + m[2, 2]) + m[0, 2]
    var_p_minus = 0.5 * (m[1, 1] + m[3, 3]) - m[1, 3]
    return var_x_plus + var_p_minus


def rotation_matrix(angles: DetectorAngles) -> np.ndarray:
    """Block-diagonal 4x4 rotation, ``X(phi) = cos(phi) X + sin(phi) P``."""
    blocks = []
    for phi in (angles.phi_1, angles.phi_2):
        c, s = math.cos(phi), math.sin(phi)
        blocks.append(np.array([[c, s], [-s, c]]))
    r = np.zeros((4, 4))
    r[:2, :2] = blocks[0]
    r[2:, 2:] = blocks[1]
    return r


def rotate_phase(v: CovarianceMatrix2M, angles: DetectorAngles) -> CovarianceMatrix2M:
    """Apply per-port detector-phase rotations: ``V' = R V R^T``."""
    _require_physical(v)
    r = rotation_matrix(angles)
    out = r @ v.matrix @ r.T
    return CovarianceMatrix2M(0.5 * (out + out.T))
