"""Run configuration: INI-style files with unit-suffixed keys.

Physical quantities carry their unit in the key name (``_hz``, ``_rad``,
``_ohm``, ``_db``) and are converted to the package's internal angular
units at this boundary. See ``RunConfig.example()`` for a complete file.
"""

from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cavity import HeatingModel, PumpConfig, ResonatorParams
from .errors import ConfigurationError
from .measurement import ChainParams
from .presets import (
    REFERENCE_PATH_TRANSMISSION,
    REFERENCE_POWER_SWEEP,
    reference_chains,
    reference_device,
    reference_heating,
)

OUTPUT_DIR_ENV = "KIPASIM_OUT"


@dataclass(frozen=True)
class SweepSpec:
    """Sweep axis: either cooperativity values directly, or pump powers
    mapped through a heating model."""

    kind: str  # "cooperativity" | "power"
    values: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in ("cooperativity", "power"):
            raise ConfigurationError("sweep kind must be 'cooperativity' or 'power'")
        if len(self.values) == 0:
            raise ConfigurationError("sweep must be non-empty")
        if any(not math.isfinite(v) for v in self.values):
            raise ConfigurationError("sweep values must be finite")
        if self.kind == "cooperativity" and any(v < 0 or v >= 1 for v in self.values):
            raise ConfigurationError("cooperativity sweep values must lie in [0, 1)")


@dataclass(frozen=True)
class RunConfig:
    """Everything a pipeline run needs."""

    device: ResonatorParams
    sweep: SweepSpec
    chain_1: ChainParams
    chain_2: ChainParams
    heating: HeatingModel | None = None
    phi_p: float = -math.pi / 2.0
    delta: float = 0.0
    transmission_1: float = 1.0
    transmission_2: float = 1.0
    samples: int = 100_000
    seed: int | None = None
    out_dir: Path = Path("out")
    formats: tuple[str, ...] = ("csv", "json")

    def __post_init__(self):
        if self.sweep.kind == "power" and self.heating is None:
            raise ConfigurationError("power sweeps require a [heating] section")
        for fmt in self.formats:
            if fmt not in ("csv", "json"):
                raise ConfigurationError(f"unknown output format {fmt!r}")
        if self.samples < 1:
            raise ConfigurationError("samples must be >= 1")

    def require_seed(self) -> int:
        if self.seed is None:
            raise ConfigurationError("sampling requested but no seed configured")
        return self.seed

    def pump_for(self, sweep_value: float) -> PumpConfig:
        c = (
            sweep_value
            if self.sweep.kind == "cooperativity"
            else self.heating.cooperativity(sweep_value)
        )
        return PumpConfig(cooperativity=c, phi_p=self.phi_p, delta=self.delta)

    def device_for(self, sweep_value: float) -> ResonatorParams:
        if self.sweep.kind == "power" and self.heating is not None:
            return self.device.with_occupancy(self.heating.occupancy(sweep_value))
        return self.device

    @staticmethod
    def example() -> str:
        return EXAMPLE_CONFIG


def reference_config(
    sweep: SweepSpec | None = None,
    samples: int = 100_000,
    seed: int | None = 1,
    out_dir: Path | str = "out",
) -> RunConfig:
    """Config preloaded with the reference device, chains, and heating."""
    if sweep is None:
        start, stop, count = REFERENCE_POWER_SWEEP
        sweep = SweepSpec("power", tuple(np.linspace(start, stop, count)))
    chain_1, chain_2 = reference_chains()
    tau_1, tau_2 = REFERENCE_PATH_TRANSMISSION
    return RunConfig(
        device=reference_device(),
        sweep=sweep,
        chain_1=chain_1,
        chain_2=chain_2,
        heating=reference_heating(),
        transmission_1=tau_1,
        transmission_2=tau_2,
        samples=samples,
        seed=seed,
        out_dir=Path(out_dir),
    )


def _get_float(section, key: str, where: str) -> float:
    if key not in section:
        raise ConfigurationError(f"missing key '{key}' in [{where}]")
    try:
        return float(section[key])
    except ValueError as exc:
        raise ConfigurationError(f"bad number for '{key}' in [{where}]: {exc}") from exc


def _parse_sweep(parser: configparser.ConfigParser) -> SweepSpec:
    if "sweep" not in parser:
        raise ConfigurationError("missing [sweep] section")
    section = parser["sweep"]
    kind = section.get("kind", "cooperativity").strip()
    if "values" in section:
        values = tuple(float(v) for v in section["values"].replace(",", " ").split())
    else:
        start = _get_float(section, "start", "sweep")
        stop = _get_float(section, "stop", "sweep")
        count = int(_get_float(section, "count", "sweep"))
        if count < 1:
            raise ConfigurationError("sweep count must be >= 1")
        values = tuple(np.linspace(start, stop, count))
    return SweepSpec(kind=kind, values=values)


def _parse_chain(parser, name: str, omega_a: float) -> ChainParams:
    if name not in parser:
        raise ConfigurationError(f"missing [{name}] section")
    section = parser[name]
    return ChainParams(
        gain_db=_get_float(section, "gain_db", name),
        n_add=_get_float(section, "added_noise_quanta", name),
        bandwidth_b=_get_float(section, "bandwidth_hz", name),
        impedance_r=float(section.get("impedance_ohm", 50.0)),
        omega_a=omega_a,
        omega_if=2.0 * math.pi * float(section.get("if_frequency_hz", 20e6)),
        sample_rate=float(section.get("sample_rate_hz", 100e6)),
    )


def load_config(path: str | os.PathLike) -> RunConfig:
    """Parse a run configuration file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigurationError(f"cannot parse {path}: {exc}") from exc

    if "device" not in parser:
        raise ConfigurationError("missing [device] section")
    dev = parser["device"]
    device = ResonatorParams.from_hz(
        frequency_hz=_get_float(dev, "frequency_hz", "device"),
        kappa_e1_hz=_get_float(dev, "kappa_e1_hz", "device"),
        kappa_e2_hz=_get_float(dev, "kappa_e2_hz", "device"),
        kappa_i_hz=_get_float(dev, "kappa_i_hz", "device"),
        n_e1=float(dev.get("occupancy_e1", 0.0)),
        n_e2=float(dev.get("occupancy_e2", 0.0)),
        n_i=float(dev.get("occupancy_i", 0.0)),
    )

    sweep = _parse_sweep(parser)

    heating = None
    if "heating" in parser:
        h = parser["heating"]
        heating = HeatingModel(
            c_pump=_get_float(h, "c_pump", "heating"),
            c_heat=_get_float(h, "c_heat", "heating"),
            pump_exponent=int(float(h.get("pump_exponent", 1))),
            heat_exponent=int(float(h.get("heat_exponent", 1))),
        )

    pump = parser["pump"] if "pump" in parser else {}
    phi_p = float(pump.get("phase_rad", -math.pi / 2.0))
    delta = 2.0 * math.pi * float(pump.get("detuning_hz", 0.0))

    path_section = parser["path"] if "path" in parser else {}
    tau_1 = float(path_section.get("transmission_1", 1.0))
    tau_2 = float(path_section.get("transmission_2", 1.0))

    sampler = parser["sampler"] if "sampler" in parser else {}
    samples = int(float(sampler.get("samples", 100_000)))
    seed = int(sampler["seed"]) if "seed" in sampler else None

    output = parser["output"] if "output" in parser else {}
    default_dir = os.environ.get(OUTPUT_DIR_ENV, "out")
    out_dir = Path(output.get("directory", default_dir))
    formats = tuple(
        f.strip() for f in output.get("formats", "csv,json").split(",") if f.strip()
    )

    return RunConfig(
        device=device,
        sweep=sweep,
        chain_1=_parse_chain(parser, "chain1", device.omega_a),
        chain_2=_parse_chain(parser, "chain2", device.omega_a),
        heating=heating,
        phi_p=phi_p,
        delta=delta,
        transmission_1=tau_1,
        transmission_2=tau_2,
        samples=samples,
        seed=seed,
        out_dir=out_dir,
        formats=formats,
    )


EXAMPLE_CONFIG = """\
# kipasim run configuration (units are encoded in the key names)

[device]
frequency_hz = 7.147e9
kappa_e1_hz = 19.4e6
kappa_e2_hz = 13.2e6
kappa_i_hz = 3.0e6
occupancy_e1 = 0.0
occupancy_e2 = 0.0
occupancy_i = 0.0

[pump]
phase_rad = -1.5707963267948966
detuning_hz = 0.0

[sweep]
# kind = cooperativity sweeps C directly; kind = power maps P through [heating]
kind = cooperativity
start = 0.05
stop = 0.85
count = 9
# or:  values = 0.1, 0.2, 0.4

[heating]
c_pump = 0.8
c_heat = 4.56
pump_exponent = 1
heat_exponent = 1

[path]
transmission_1 = 1.0
transmission_2 = 1.0

[chain1]
gain_db = 99.22
added_noise_quanta = 7.51
bandwidth_hz = 200e3
impedance_ohm = 50.0
if_frequency_hz = 20e6
sample_rate_hz = 100e6

[chain2]
gain_db = 94.02
added_noise_quanta = 14.80
bandwidth_hz = 200e3

[sampler]
samples = 100000
seed = 7

[output]
directory = out
formats = csv,json
"""
