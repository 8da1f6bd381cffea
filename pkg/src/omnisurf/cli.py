"""Command line entry point: ``omnisurf <subcommand> [options]``.

Exit codes: 0 success, 2 configuration error, 3 physics/domain error,
4 I/O error. Failures print one line ``error <CODE>: <message>`` to stderr.
"""

from __future__ import annotations

import argparse
import sys

from .beamforming import BeamModel
from .errors import ConfigError, OmniSurfError
from .experiments import ExperimentKind, ExperimentSpec, run_experiment

EXIT_IO = 4


def _overrides(pairs: list[str]) -> dict[str, str]:
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _common(p: argparse.ArgumentParser, scenario_required: bool = True) -> None:
    p.add_argument("--scenario", required=scenario_required,
                   help="scenario file, or builtin:<name> for a bundled one")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--grid-step", type=float, default=None, help="sweep step in degrees")
    p.add_argument("--full-sweep", action="store_true", help="sweep every azimuth instead of the phi=0 cut")
    p.add_argument("--model", choices=[m.value for m in BeamModel], default=BeamModel.ANGLE_AWARE.value)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override a scenario file value (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="omnisurf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pattern", help="far-field pattern sweep")
    _common(p)
    p.add_argument("--incident", required=True, help="theta[,phi] in degrees")
    p.add_argument("--incident-side", default="reflection")
    p.add_argument("--mode", default="refract", choices=["reflect", "refract"])
    g = p.add_mutually_exclusive_group()
    g.add_argument("--config", help="element states as a 0/1 string, row-major")
    g.add_argument("--target", help="design the configuration for this departure direction")

    p = sub.add_parser("beamform", help="design a 1-bit configuration")
    _common(p)
    p.add_argument("--incident", required=True)
    p.add_argument("--incident-side", default="reflection")
    p.add_argument("--target", required=True)
    p.add_argument("--target-side", default="refraction")

    p = sub.add_parser("recip-channel", help="uplink/downlink channel equality check")
    _common(p, scenario_required=False)
    p.add_argument("--config")
    p.add_argument("--random", type=int, help="run on this many seeded random scenarios instead")
    p.add_argument("--tolerance", type=float, default=1e-10)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("recip-beam", help="beam round-trip experiment")
    _common(p)
    p.add_argument("--incident", default="60")
    p.add_argument("--incident-side", default="reflection")
    p.add_argument("--mode", default="refract", choices=["reflect", "refract"])
    p.add_argument("--target")
    p.add_argument("--config")

    p = sub.add_parser("compare-models", help="ideal-phase vs angle-aware design")
    _common(p)
    p.add_argument("--incident", default="0")
    p.add_argument("--incident-side", default="reflection")
    p.add_argument("--target", action="append", required=True, help="repeatable")
    p.add_argument("--target-side", default="refraction")

    p = sub.add_parser("s21-campaign", help="two-antenna S21/S12 reciprocity campaign")
    _common(p, scenario_required=False)
    p.add_argument("--range", type=float, default=1.0, dest="range_m", help="antenna range in meters")
    p.add_argument("--antenna1-elevation", type=float, default=30.0)
    p.add_argument("--elevations", default="30,45", help="antenna 2 elevations, comma separated")

    p = sub.add_parser("gen-random", help="write seeded random scenario files")
    _common(p, scenario_required=False)
    p.add_argument("--count", type=int, default=1)
    return parser


def spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    kind = ExperimentKind(args.command)
    params = {}
    for name in ("incident", "incident_side", "mode", "config", "target", "target_side",
                 "random", "tolerance", "workers", "range_m", "antenna1_elevation", "count"):
        value = getattr(args, name, None)
        if value is not None:
            params[name] = value
    if kind is ExperimentKind.MODEL_COMPARE:
        params["targets"] = params.pop("target")
    if kind is ExperimentKind.S21_CAMPAIGN:
        try:
            params["elevations"] = tuple(float(v) for v in args.elevations.split(","))
        except ValueError:
            raise ConfigError(f"--elevations must be comma separated degrees, got {args.elevations!r}") from None
        if len(params["elevations"]) != 2:
            raise ConfigError("--elevations takes exactly two values")
    step = args.grid_step if args.grid_step is not None else (2.0 if args.full_sweep else 1.0)
    return ExperimentSpec(kind, args.out, args.scenario, params, step, args.full_sweep,
                          BeamModel(args.model), args.seed, _overrides(args.set))


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        files = run_experiment(spec_from_args(args))
    except OmniSurfError as exc:
        print(f"error {exc.code}: {exc}", file=sys.stderr)
        return exc.exit_status
    except OSError as exc:
        print(f"error E_IO: {exc}", file=sys.stderr)
        return EXIT_IO
    for path in files:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
