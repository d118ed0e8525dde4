"""Command-line front end.

Subcommands: ``model`` (analytic sweep), ``sample`` (Monte Carlo sweep),
``calibrate`` (noise-curve fit), and ``reproduce`` (figure-data pipelines).

Exit codes: 0 success, 2 validation/configuration error, 3 pump
instability, 4 fit failure, 5 I/O failure, 1 unexpected error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

from . import pipeline
from .calibration import NoiseCurve
from .config import OUTPUT_DIR_ENV, RunConfig, load_config, reference_config
from .errors import (
    FitError,
    InstabilityError,
    KipasimError,
    NumericalDomainError,
    ValidationError,
)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_VALIDATION = 2
EXIT_INSTABILITY = 3
EXIT_FIT = 4
EXIT_IO = 5

EPILOG = """\
exit codes:
  0  success
  2  validation or configuration error
  3  pump parameters at/beyond the oscillation threshold
  4  least-squares fit failure
  5  file I/O failure

The default output directory is taken from $%s when set.
""" % OUTPUT_DIR_ENV


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kipasim",
        description=(
            "Simulate and analyze path-entangled microwave radiation from a "
            "two-port kinetic-inductance parametric amplifier."
        ),
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", type=Path, required=False,
                           help="run configuration file (INI)")
        p.add_argument("--out", type=Path, default=None,
                       help="output directory (default from config or $%s)" % OUTPUT_DIR_ENV)
        p.add_argument("--format", choices=("csv", "json"), default=None,
                       help="restrict output to one format (default: both)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the sampler seed")
        p.add_argument("--points", type=int, default=None,
                       help="override the Monte Carlo sample count per sweep point")

    p_model = sub.add_parser("model", help="analytic sweep table",
                             epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    add_common(p_model)

    p_sample = sub.add_parser("sample", help="Monte Carlo sweep through the measurement chain",
                              epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    add_common(p_sample)
    p_sample.add_argument("--write-records", action="store_true",
                          help="also write per-point quadrature record CSVs")

    p_cal = sub.add_parser("calibrate", help="fit gain and added noise to a noise curve",
                           epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    p_cal.add_argument("curve", type=Path, help="CSV with temperature_K,noise_density_V2_per_Hz")
    p_cal.add_argument("--frequency-hz", type=float, default=7.147e9,
                       help="detection frequency of the curve (Hz)")
    p_cal.add_argument("--impedance-ohm", type=float, default=50.0)
    p_cal.add_argument("--bandwidth-hz", type=float, default=200e3)
    p_cal.add_argument("--out", type=Path, default=None)

    p_rep = sub.add_parser("reproduce", help="figure-data pipelines (fig2 | fig3)",
                           epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    p_rep.add_argument("figure", choices=("fig2", "fig3"))
    add_common(p_rep)
    p_rep.add_argument("--sample", action="store_true",
                       help="add synthetic measured points with error bars")
    return parser


def _resolve_config(args, default_seed=1) -> RunConfig:
    if getattr(args, "config", None) is not None:
        config = load_config(args.config)
    else:
        config = reference_config(seed=default_seed)
    updates = {}
    if args.out is not None:
        updates["out_dir"] = args.out
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.points is not None:
        updates["samples"] = args.points
    if args.format is not None:
        updates["formats"] = (args.format,)
    if updates:
        from dataclasses import replace

        config = replace(config, **updates)
    return config


def _out_dir(args, config: RunConfig | None = None) -> Path:
    if args.out is not None:
        return args.out
    if config is not None:
        return config.out_dir
    return Path(os.environ.get(OUTPUT_DIR_ENV, "out"))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "model":
            config = _resolve_config(args)
            table = pipeline.cmd_model(config)
            written = table.write(_out_dir(args, config), "model", config.formats)
        elif args.command == "sample":
            config = _resolve_config(args)
            out_dir = _out_dir(args, config)
            records_dir = out_dir / "records" if args.write_records else None
            table = pipeline.cmd_sample(config, write_records_to=records_dir)
            written = table.write(out_dir, "sample", config.formats)
        elif args.command == "calibrate":
            try:
                text = args.curve.read_text()
            except OSError as exc:
                print(f"kipasim: cannot read {args.curve}: {exc}", file=sys.stderr)
                return EXIT_IO
            curve = NoiseCurve.from_csv(
                text,
                omega=2.0 * math.pi * args.frequency_hz,
                impedance_r=args.impedance_ohm,
                bandwidth_b=args.bandwidth_hz,
            )
            result = pipeline.cmd_calibrate(curve)
            written = pipeline.write_calibration(result, _out_dir(args))
        elif args.command == "reproduce":
            config = _resolve_config(args)
            results = pipeline.cmd_reproduce(args.figure, config, sample=args.sample)
            written = pipeline.write_reproduction(
                results, args.figure, _out_dir(args, config), config.formats
            )
        else:  # pragma: no cover - argparse enforces the choices
            return EXIT_UNEXPECTED
    except InstabilityError as exc:
        print(f"kipasim: instability: {exc}", file=sys.stderr)
        return EXIT_INSTABILITY
    except FitError as exc:
        print(f"kipasim: fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT
    except (ValidationError, NumericalDomainError) as exc:
        print(f"kipasim: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except KipasimError as exc:
        print(f"kipasim: error: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED
    except OSError as exc:
        print(f"kipasim: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
