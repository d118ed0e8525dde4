"""Reference device, measurement chains, and fitted heating constants.

These presets describe the NbTiN two-port ring-resonator device and its
dual amplification chains used throughout the examples, tests, and the
``reproduce`` command. The heating model and detection-path transmissions
were fitted so the simulated pump sweeps land on the device's measured
landmark features (minimum port variances around 0.6-0.9 dB below vacuum
and a peak logarithmic negativity near 0.26 ebits, all non-monotone in
pump power).
"""

from __future__ import annotations

import math

from .cavity import HeatingModel, ResonatorParams
from .measurement import ChainParams

RESONANCE_HZ = 7.147e9


def reference_device() -> ResonatorParams:
    """Two-port ring resonator: kappa_e/2pi = 19.4 / 13.2 MHz, internal
    loss 3 MHz, vacuum waveguide inputs."""
    return ResonatorParams.from_hz(
        frequency_hz=RESONANCE_HZ,
        kappa_e1_hz=19.4e6,
        kappa_e2_hz=13.2e6,
        kappa_i_hz=3.0e6,
    )


def reference_chains() -> tuple[ChainParams, ChainParams]:
    """Calibrated amplification chains for ports 1 and 2."""
    common = dict(
        bandwidth_b=200e3,
        impedance_r=50.0,
        omega_a=2.0 * math.pi * RESONANCE_HZ,
        omega_if=2.0 * math.pi * 20e6,
        sample_rate=100e6,
    )
    chain_1 = ChainParams(gain_db=99.22, n_add=7.51, **common)
    chain_2 = ChainParams(gain_db=94.02, n_add=14.80, **common)
    return chain_1, chain_2


def reference_heating() -> HeatingModel:
    """Linear pump-power heating fitted to the landmark sweep features."""
    return HeatingModel(c_pump=0.8, c_heat=4.56)


#: Fitted effective power transmission of each detection path. Port 1
#: carries most of the unmodeled insertion loss; with these values port 2
#: shows the deeper squeezing, as observed.
REFERENCE_PATH_TRANSMISSION = (0.47, 0.955)

#: Pump-power sweep (arbitrary units, C = 0.8 P) used by ``reproduce``.
REFERENCE_POWER_SWEEP = (0.02, 1.2, 60)
