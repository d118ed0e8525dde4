import math

import numpy as np
import pytest

from kipasim.errors import ValidationError
from kipasim.gaussian import (
    CovarianceMatrix2M,
    DetectorAngles,
    duan_epr,
    log_negativity,
    rotate_phase,
    rotation_matrix,
    symplectic_eigenvalues,
    thermal_cm,
    vacuum_cm,
)

from conftest import (
    brute_force_symplectic,
    brute_force_zeta_minus,
    random_physical_cm,
)


def two_mode_squeezed_cm(r):
    # X1X2 < 0 and P1P2 > 0: squeezing in the (X1+X2, P1-P2) combination
    ch, sh = 0.5 * np.cosh(2 * r), 0.5 * np.sinh(2 * r)
    z = np.diag([-sh, sh])
    top = np.hstack([np.eye(2) * ch, z])
    bottom = np.hstack([z, np.eye(2) * ch])
    return CovarianceMatrix2M(np.vstack([top, bottom]))


class TestCovarianceMatrix:
    def test_rejects_wrong_shape(self):
        with pytest.raises(ValidationError):
            CovarianceMatrix2M(np.eye(3))

    def test_rejects_asymmetric(self):
        m = np.eye(4) * 0.5
        m[0, 1] = 1e-6
        with pytest.raises(ValidationError, match="symmetric"):
            CovarianceMatrix2M(m)

    def test_rejects_nonpositive_diagonal(self):
        with pytest.raises(ValidationError, match="diagonal"):
            CovarianceMatrix2M(np.diag([0.5, 0.5, 0.5, 0.0]))

    def test_rejects_non_finite(self):
        m = np.eye(4) * 0.5
        m[2, 2] = np.inf
        with pytest.raises(ValidationError):
            CovarianceMatrix2M(m)

    def test_matrix_is_read_only(self):
        v = vacuum_cm()
        with pytest.raises(ValueError):
            v.matrix[0, 0] = 1.0

    def test_is_physical(self):
        assert vacuum_cm().is_physical()
        below = CovarianceMatrix2M(np.eye(4) * 0.4)
        assert not below.is_physical()

    def test_json_round_trip(self):
        v = thermal_cm(0.3, 1.7)
        assert CovarianceMatrix2M.from_json(v.to_json()).matrix == pytest.approx(
            v.matrix
        )

    def test_csv_round_trip(self, rng):
        v = random_physical_cm(rng)
        back = CovarianceMatrix2M.from_csv(v.to_csv())
        np.testing.assert_allclose(back.matrix, v.matrix, rtol=0, atol=0)

    def test_csv_has_four_lines(self):
        assert vacuum_cm().to_csv().count("\n") == 4


class TestSymplecticEigenvalues:
    def test_vacuum(self):
        spec = symplectic_eigenvalues(vacuum_cm())
        assert spec.nu_minus == pytest.approx(0.5, abs=1e-12)
        assert spec.nu_plus == pytest.approx(0.5, abs=1e-12)
        assert spec.zeta_minus == pytest.approx(0.5, abs=1e-12)

    def test_two_thermal_modes(self):
        spec = symplectic_eigenvalues(thermal_cm(1.0, 1.0))
        assert spec.nu_minus == pytest.approx(1.5, abs=1e-12)
        assert spec.nu_plus == pytest.approx(1.5, abs=1e-12)

    def test_matches_brute_force_oracle(self, rng):
        for _ in range(300):
            v = random_physical_cm(rng)
            spec = symplectic_eigenvalues(v)
            nu_minus, nu_plus = brute_force_symplectic(v.matrix)
            assert abs(spec.nu_minus - nu_minus) < 1e-9
            assert abs(spec.nu_plus - nu_plus) < 1e-9
            assert abs(spec.zeta_minus - brute_force_zeta_minus(v.matrix)) < 1e-9

    def test_rejects_nonphysical(self):
        with pytest.raises(ValidationError, match="physical"):
            symplectic_eigenvalues(CovarianceMatrix2M(np.eye(4) * 0.3))


class TestLogNegativity:
    def test_vacuum_is_exactly_zero(self):
        assert log_negativity(vacuum_cm()) == 0.0

    def test_thermal_is_zero(self):
        assert log_negativity(thermal_cm(2.0, 0.5)) == 0.0

    def test_two_mode_squeezed_landmark(self):
        # r = 0.5: zeta = exp(-1)/2, E_N = 1/ln 2
        v = two_mode_squeezed_cm(0.5)
        assert symplectic_eigenvalues(v).zeta_minus == pytest.approx(
            math.exp(-1.0) / 2.0, rel=1e-12
        )
        assert log_negativity(v) == pytest.approx(1.0 / math.log(2.0), rel=1e-12)

    def test_base_is_configurable(self):
        v = two_mode_squeezed_cm(0.5)
        assert log_negativity(v, base=math.e) == pytest.approx(1.0, rel=1e-12)
        with pytest.raises(ValidationError):
            log_negativity(v, base=1.0)

    def test_ppt_consistency(self, rng):
        # zeta >= 1/2 exactly when E_N == 0
        for _ in range(200):
            v = random_physical_cm(rng)
            zeta = symplectic_eigenvalues(v).zeta_minus
            assert (zeta >= 0.5) == (log_negativity(v) == 0.0)


class TestDuanEpr:
    def test_vacuum(self):
        assert duan_epr(vacuum_cm()) == pytest.approx(1.0, abs=1e-12)

    def test_two_mode_squeezed(self):
        # both EPR variances squeezed: 2 * exp(-2r)/2
        r = 0.7
        assert duan_epr(two_mode_squeezed_cm(r)) == pytest.approx(
            math.exp(-2 * r), rel=1e-12
        )

    def test_matches_sampled_variances(self, rng):
        v = random_physical_cm(rng)
        n = 200_000
        samples = rng.multivariate_normal(np.zeros(4), v.matrix, size=n)
        x_plus = (samples[:, 0] + samples[:, 2]) / math.sqrt(2.0)
        p_minus = (samples[:, 1] - samples[:, 3]) / math.sqrt(2.0)
        estimate = x_plus.var(ddof=1) + p_minus.var(ddof=1)
        sigma = math.sqrt(2.0 / n) * (x_plus.var() + p_minus.var())
        assert abs(estimate - duan_epr(v)) < 3.0 * sigma


class TestRotatePhase:
    def test_identity(self, rng):
        v = random_physical_cm(rng)
        out = rotate_phase(v, DetectorAngles(0.0, 0.0))
        np.testing.assert_allclose(out.matrix, v.matrix, atol=1e-15)

    def test_vacuum_invariant(self):
        out = rotate_phase(vacuum_cm(), DetectorAngles(math.pi / 2.0, 1.1))
        np.testing.assert_allclose(out.matrix, vacuum_cm().matrix, atol=1e-15)

    def test_matches_matrix_product_oracle(self, rng):
        for _ in range(50):
            v = random_physical_cm(rng)
            phi_1, phi_2 = rng.uniform(-math.pi, math.pi, size=2)
            out = rotate_phase(v, DetectorAngles(phi_1, phi_2))
            c1, s1 = math.cos(phi_1), math.sin(phi_1)
            c2, s2 = math.cos(phi_2), math.sin(phi_2)
            r = np.zeros((4, 4))
            r[:2, :2] = [[c1, s1], [-s1, c1]]
            r[2:, 2:] = [[c2, s2], [-s2, c2]]
            np.testing.assert_allclose(out.matrix, r @ v.matrix @ r.T, atol=1e-12)

    def test_symplectic_invariance(self, rng):
        for _ in range(100):
            v = random_physical_cm(rng)
            spec = symplectic_eigenvalues(v)
            angles = DetectorAngles(*rng.uniform(-math.pi, math.pi, size=2))
            rotated = symplectic_eigenvalues(rotate_phase(v, angles))
            assert abs(rotated.nu_minus - spec.nu_minus) < 1e-10
            assert abs(rotated.nu_plus - spec.nu_plus) < 1e-10
            assert abs(rotated.zeta_minus - spec.zeta_minus) < 1e-10


class TestDetectorAngles:
    def test_wraps_into_half_open_interval(self):
        a = DetectorAngles(3.0 * math.pi, -math.pi)
        assert a.phi_1 == pytest.approx(math.pi)
        assert a.phi_2 == pytest.approx(math.pi)
        assert -math.pi < a.phi_1 <= math.pi

    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError):
            DetectorAngles(math.nan)

    def test_rotation_matrix_block_structure(self):
        r = rotation_matrix(DetectorAngles(0.4, -0.9))
        assert np.all(r[:2, 2:] == 0.0)
        assert np.all(r[2:, :2] == 0.0)
        np.testing.assert_allclose(r @ r.T, np.eye(4), atol=1e-15)
