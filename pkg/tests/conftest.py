import numpy as np
import pytest

from kipasim.cavity import ResonatorParams
from kipasim.gaussian import OMEGA, CovarianceMatrix2M

PT = np.diag([1.0, 1.0, 1.0, -1.0])  # partial transposition of mode 2


def random_physical_cm(rng, scale=0.6):
    """Random physical covariance: M M^T + vacuum is always admissible."""
    m = rng.normal(size=(4, 4)) * scale
    return CovarianceMatrix2M(m @ m.T + 0.5 * np.eye(4))


def brute_force_symplectic(matrix):
    """Moduli of eig(i Omega V), deduplicated: the symplectic spectrum."""
    mods = np.sort(np.abs(np.linalg.eigvals(1j * OMEGA @ matrix)))
    return mods[0], mods[2]  # each eigenvalue appears twice


def brute_force_zeta_minus(matrix):
    mods = np.sort(np.abs(np.linalg.eigvals(1j * OMEGA @ (PT @ matrix @ PT))))
    return mods[0]


def random_resonator(rng, max_thermal=0.0):
    """Random damping split with eta_1 + eta_2 <= 1."""
    eta_1 = rng.uniform(0.02, 0.95)
    eta_2 = rng.uniform(0.02, 0.95)
    total = eta_1 + eta_2
    if total > 0.98:
        eta_1 *= 0.98 / total
        eta_2 *= 0.98 / total
    kwargs = {}
    if max_thermal > 0:
        kwargs = dict(
            n_e1=rng.uniform(0, max_thermal),
            n_e2=rng.uniform(0, max_thermal),
            n_i=rng.uniform(0, 4.0 * max_thermal),
        )
    return ResonatorParams(
        omega_a=1.0,
        kappa_e1=eta_1,
        kappa_e2=eta_2,
        kappa_i=max(1.0 - eta_1 - eta_2, 0.0),
        **kwargs,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
