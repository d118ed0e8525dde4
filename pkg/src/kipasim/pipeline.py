"""Batch pipelines behind the CLI subcommands.

Each command core is a pure function from a run configuration to one or
more tables; file emission is separated so outputs are byte-stable for
identical configurations and seeds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .calibration import CalFitResult, NoiseCurve, fit_noise_curve
from .cavity import pre_detection_loss, output_covariance
from .config import RunConfig
from .errors import ValidationError
from .gaussian import (
    CovarianceMatrix2M,
    duan_epr,
    log_negativity,
    symplectic_eigenvalues,
    vacuum_cm,
)
from .measurement import (
    derive_seed,
    epr_objective,
    moment_zeta_minus,
    optimize_detector_angle,
    port_variance_objective,
    records_to_csv,
    sample_quadratures,
    subtracted_statistic,
)

MODEL_SCHEMA = "kipasim.sweep.model.v1"
SAMPLE_SCHEMA = "kipasim.sweep.sample.v1"
FIGURE_SCHEMA = "kipasim.figure.v1"

MODEL_COLUMNS = ("sweep_value", "cooperativity", "var_x1", "var_x2", "epr", "log_neg")
SAMPLE_COLUMNS = MODEL_COLUMNS + ("var_x1_se", "var_x2_se", "epr_se", "log_neg_se")


def squeezing_db(variance: float) -> float:
    """Variance relative to vacuum in dB: 10 log10(2 V), negative when
    squeezed below the vacuum level."""
    if variance <= 0:
        raise ValidationError("variance must be positive")
    return 10.0 * math.log10(2.0 * variance)


@dataclass(frozen=True)
class SweepTable:
    """Fixed-schema numeric table emitted as CSV or JSON."""

    schema: str
    columns: tuple[str, ...]
    rows: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValidationError("row width does not match declared columns")
            if any(not math.isfinite(x) for x in row):
                raise ValidationError("table cells must be finite")

    def column(self, name: str) -> np.ndarray:
        idx = self.columns.index(name)
        return np.array([row[idx] for row in self.rows])

    def to_csv(self) -> str:
        lines = [f"# schema: {self.schema}", ",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(f"{x:.12g}" for x in row))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        payload = {
            "schema": self.schema,
            "columns": list(self.columns),
            "rows": [[float(f"{x:.12g}") for x in row] for row in self.rows],
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"

    def write(self, out_dir: Path, stem: str, formats: Sequence[str]) -> list[Path]:
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        if "csv" in formats:
            path = out_dir / f"{stem}.csv"
            path.write_text(self.to_csv())
            written.append(path)
        if "json" in formats:
            path = out_dir / f"{stem}.json"
            path.write_text(self.to_json())
            written.append(path)
        return written


def _model_state(config: RunConfig, sweep_value: float) -> CovarianceMatrix2M:
    device = config.device_for(sweep_value)
    pump = config.pump_for(sweep_value)
    v = output_covariance(device, pump)
    if config.transmission_1 != 1.0 or config.transmission_2 != 1.0:
        v = pre_detection_loss(v, config.transmission_1, config.transmission_2)
    return v


def cmd_model(config: RunConfig) -> SweepTable:
    """Analytic sweep: variances, EPR sum, and log-negativity per point."""
    rows = []
    for value in config.sweep.values:
        v = _model_state(config, value)
        m = v.matrix
        rows.append(
            (
                float(value),
                config.pump_for(value).cooperativity,
                m[0, 0],
                m[2, 2],
                duan_epr(v),
                log_negativity(v),
            )
        )
    return SweepTable(schema=MODEL_SCHEMA, columns=MODEL_COLUMNS, rows=tuple(rows))


def _sampled_point_stats(config: RunConfig, index: int, value: float, n_blocks: int = 20):
    """Per-point Monte Carlo statistics: {name: (value, stderr)} plus the
    raw on/off records."""
    seed = config.require_seed()
    v_model = _model_state(config, value)
    on = sample_quadratures(
        v_model, config.chain_1, config.chain_2, config.samples,
        derive_seed(seed, index, 0), "on",
    )
    off = sample_quadratures(
        vacuum_cm(), config.chain_1, config.chain_2, config.samples,
        derive_seed(seed, index, 1), "off",
    )

    def var_port(port):
        return lambda m: optimize_detector_angle(port_variance_objective(m, port)).value

    def epr_opt(m):
        return optimize_detector_angle(epr_objective(m)).value

    # Jackknife the smooth statistic zeta_minus and propagate to E_N by the
    # delta method; jackknifing E_N directly blows up when a replicate's
    # estimate crosses the separability boundary.
    zeta, zeta_se = subtracted_statistic(on, off, 0.5, moment_zeta_minus, n_blocks)
    if zeta <= 0.0:
        raise ValidationError(
            "sample too noisy to resolve the symplectic eigenvalue; "
            "increase the sample count"
        )
    log_neg = max(0.0, -math.log2(2.0 * zeta))
    log_neg_se = zeta_se / (zeta * math.log(2.0))

    stats = {
        "var_x1": subtracted_statistic(on, off, 0.5, var_port(1), n_blocks),
        "var_x2": subtracted_statistic(on, off, 0.5, var_port(2), n_blocks),
        "epr": subtracted_statistic(on, off, 0.5, epr_opt, n_blocks),
        "log_neg": (log_neg, log_neg_se),
    }
    return stats, (on, off)


def cmd_sample(
    config: RunConfig, write_records_to: Path | None = None
) -> SweepTable:
    """Monte Carlo sweep through the full measurement pipeline.

    Per point: sample pump-on and pump-off records, subtract, optimize the
    detector angle (per port for the variances, jointly for the EPR sum),
    and estimate each statistic with a jackknife standard error.
    """
    rows = []
    for index, value in enumerate(config.sweep.values):
        stats, (on, off) = _sampled_point_stats(config, index, value)
        if write_records_to is not None:
            write_records_to.mkdir(parents=True, exist_ok=True)
            records_to_csv(on, write_records_to / f"records_{index:03d}_on.csv")
            records_to_csv(off, write_records_to / f"records_{index:03d}_off.csv")
        rows.append(
            (
                float(value),
                config.pump_for(value).cooperativity,
                stats["var_x1"][0],
                stats["var_x2"][0],
                stats["epr"][0],
                stats["log_neg"][0],
                stats["var_x1"][1],
                stats["var_x2"][1],
                stats["epr"][1],
                stats["log_neg"][1],
            )
        )
    return SweepTable(schema=SAMPLE_SCHEMA, columns=SAMPLE_COLUMNS, rows=tuple(rows))


def cmd_calibrate(
    curve: NoiseCurve, init: tuple[float, float] | None = None
) -> CalFitResult:
    """Fit chain gain and added noise to a measured noise curve."""
    return fit_noise_curve(curve, init=init)


def write_calibration(result: CalFitResult, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / "calibration.json"
    json_path.write_text(result.to_json() + "\n")
    csv_path = out_dir / "calibration_residuals.csv"
    lines = ["residual_V2_per_Hz"]
    lines += [f"{r:.12g}" for r in result.residuals]
    csv_path.write_text("\n".join(lines) + "\n")
    return [json_path, csv_path]


FIG2_COLUMNS = (
    "sweep_value", "cooperativity", "var_x1", "var_x2", "var_x1_db", "var_x2_db",
)
FIG3_COLUMNS = ("sweep_value", "cooperativity", "epr", "log_neg", "zeta_minus")


def cmd_reproduce(
    figure: str, config: RunConfig, sample: bool = False
) -> dict[str, SweepTable | dict]:
    """Figure-data pipelines: model curves plus optional synthetic points.

    ``fig2`` emits per-port variances versus pump power; ``fig3`` emits the
    EPR sum and logarithmic negativity. The summary reports the landmark
    values (minimum variances in dB, maximum log-negativity under the
    package convention and under the alternative ``-2 log10 zeta`` reading).
    """
    if figure not in ("fig2", "fig3"):
        raise ValidationError("figure must be 'fig2' or 'fig3'")
    out: dict[str, SweepTable | dict] = {}
    curve_rows = []
    zetas = []
    for value in config.sweep.values:
        v = _model_state(config, value)
        m = v.matrix
        c = config.pump_for(value).cooperativity
        if figure == "fig2":
            curve_rows.append(
                (
                    float(value), c, m[0, 0], m[2, 2],
                    squeezing_db(m[0, 0]), squeezing_db(m[2, 2]),
                )
            )
        else:
            zeta = symplectic_eigenvalues(v).zeta_minus
            zetas.append(zeta)
            curve_rows.append((float(value), c, duan_epr(v), log_negativity(v), zeta))
    columns = FIG2_COLUMNS if figure == "fig2" else FIG3_COLUMNS
    curve = SweepTable(schema=FIGURE_SCHEMA, columns=columns, rows=tuple(curve_rows))
    out["curve"] = curve

    if figure == "fig2":
        var1 = curve.column("var_x1")
        var2 = curve.column("var_x2")
        summary = {
            "min_var_x1": float(var1.min()),
            "min_var_x2": float(var2.min()),
            "min_var_x1_db": float(squeezing_db(var1.min())),
            "min_var_x2_db": float(squeezing_db(var2.min())),
            "non_monotone_x1": bool(_is_non_monotone(var1)),
            "non_monotone_x2": bool(_is_non_monotone(var2)),
        }
    else:
        log_neg = curve.column("log_neg")
        epr = curve.column("epr")
        zeta_at_max = zetas[int(np.argmax(log_neg))]
        summary = {
            "max_log_neg": float(log_neg.max()),
            "max_log_neg_alt_neg2log10": float(-2.0 * math.log10(zeta_at_max)),
            "min_epr": float(epr.min()),
            "non_monotone_log_neg": bool(_is_non_monotone(-log_neg)),
        }
    out["summary"] = summary

    if sample:
        points_rows = []
        for index, value in enumerate(config.sweep.values):
            stats, _ = _sampled_point_stats(config, index, value)
            c = config.pump_for(value).cooperativity
            if figure == "fig2":
                points_rows.append(
                    (
                        float(value), c,
                        stats["var_x1"][0], stats["var_x2"][0],
                        stats["var_x1"][1], stats["var_x2"][1],
                    )
                )
            else:
                points_rows.append(
                    (
                        float(value), c,
                        stats["epr"][0], stats["log_neg"][0],
                        stats["epr"][1], stats["log_neg"][1],
                    )
                )
        point_columns = (
            ("sweep_value", "cooperativity", "var_x1", "var_x2", "var_x1_se", "var_x2_se")
            if figure == "fig2"
            else ("sweep_value", "cooperativity", "epr", "log_neg", "epr_se", "log_neg_se")
        )
        out["points"] = SweepTable(
            schema=FIGURE_SCHEMA, columns=point_columns, rows=tuple(points_rows)
        )
    return out


def _is_non_monotone(values: np.ndarray) -> bool:
    # Dips then recovers: an interior extremum distinguishable from the ends.
    k = int(np.argmin(values))
    return 0 < k < len(values) - 1 and (
        values[0] - values[k] > 0 and values[-1] - values[k] > 0
    )


def write_reproduction(
    results: Mapping[str, SweepTable | dict],
    figure: str,
    out_dir: Path,
    formats: Sequence[str],
) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = results["curve"].write(out_dir, f"{figure}_curve", formats)
    if "points" in results:
        written += results["points"].write(out_dir, f"{figure}_points", formats)
    summary_path = out_dir / f"{figure}_summary.json"
    summary_path.write_text(
        json.dumps(results["summary"], sort_keys=True, indent=2) + "\n"
    )
    written.append(summary_path)
    return written
