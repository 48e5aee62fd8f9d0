import argparse
import sys
from pathlib import Path

import structlog
from pydantic import ValidationError

from cli import EXIT_RESONANCE, EXIT_USAGE, RunConfig, UsageError
from cli import coeff, figure, purity, scatlen, table, verify
from connectors.potential_file import PotentialFileError
from core.config import settings
from core.logging import configure_logging
from engine.coefficients import TABLE_GRID
from engine.quadrature import MCSpec, QuadratureSpec
from engine.scattering_length import ResonanceError

logger = structlog.get_logger()

HANDLERS = {
    "coeff": coeff.run,
    "table": table.run,
    "figure": figure.run,
    "scatlen": scatlen.run,
    "purity": purity.run,
    "verify": verify.run,
}
DEFAULT_FORMATS = {"table": "csv", "figure": "csv", "verify": "text"}


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_quadrature_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("quadrature")
    group.add_argument("--radial-nodes", type=int)
    group.add_argument("--angular-nodes", type=int)
    group.add_argument("--cutoff", type=float, dest="radial_cutoff")
    group.add_argument("--target-rel-err", type=float)
    group.add_argument("--max-refinements", type=int)


def _add_mc_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("monte-carlo")
    group.add_argument("--samples", type=int)
    group.add_argument("--seed", type=int)
    group.add_argument("--chunk-size", type=int)


def _add_output_flags(parser: argparse.ArgumentParser, formats: tuple[str, ...]) -> None:
    parser.add_argument("--format", choices=formats, dest="output_format")
    parser.add_argument("--out", type=Path, dest="output_path")


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="scatent", description="Entanglement generated by low-energy two-particle scattering.")
    parser.add_argument("--log-level", default=None, help=f"structlog level (default {settings.LOG_LEVEL})")
    parser.add_argument("--workers", type=int, default=None, help=f"worker threads (default WORKERS={settings.WORKERS})")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    p = sub.add_parser("coeff", help="entanglement coefficient E(mu1) with its J, L, N parts")
    p.add_argument("--mu1", type=float, required=True)
    _add_quadrature_flags(p)
    _add_output_flags(p, ("json", "csv"))

    p = sub.add_parser("table", help="E(mu1) on a regular grid")
    p.add_argument("--from", type=float, dest="start", default=TABLE_GRID[0])
    p.add_argument("--to", type=float, dest="stop", default=TABLE_GRID[1])
    p.add_argument("--step", type=float, default=TABLE_GRID[2])
    _add_quadrature_flags(p)
    _add_output_flags(p, ("csv", "json"))

    p = sub.add_parser("figure", help="dense (mu1, E) samples for plotting")
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--from", type=float, dest="start", default=TABLE_GRID[0])
    p.add_argument("--to", type=float, dest="stop", default=TABLE_GRID[1])
    _add_quadrature_flags(p)
    _add_output_flags(p, ("csv", "json"))

    p = sub.add_parser("scatlen", help="scattering length c0 and Y1 of a potential file")
    p.add_argument("potential", type=Path)
    p.add_argument("--grid", type=int)
    _add_output_flags(p, ("json",))

    p = sub.add_parser("purity", help="purity from the leading-order formula and from Monte-Carlo")
    p.add_argument("--mu1", type=float, required=True)
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--c0", type=float)
    source.add_argument("--potential", type=Path)
    p.add_argument("--y1", type=float, nargs=3, metavar=("X", "Y", "Z"))
    p.add_argument("--s", type=float, required=True, help="sigma/hbar")
    p.add_argument("--p0", type=float, nargs="+", help="p0/hbar: one value along z or three components")
    p.add_argument("--slack", type=float)
    _add_quadrature_flags(p)
    _add_mc_flags(p)
    _add_output_flags(p, ("json",))

    p = sub.add_parser("verify", help="golden-value and oracle checks")
    p.add_argument("--quick", action="store_true", help="skip the Monte-Carlo checks")
    p.add_argument("--check", action="append", dest="checks", choices=list(verify.ALL_CHECKS))
    p.add_argument("--j-tol", type=float)
    p.add_argument("--table-tol", type=float)
    _add_quadrature_flags(p)
    _add_mc_flags(p)
    _add_output_flags(p, ("text", "json"))
    return parser


def build_config(args: argparse.Namespace) -> RunConfig:
    values = vars(args)
    quad = QuadratureSpec.from_settings(
        radial_nodes=values.get("radial_nodes"),
        angular_nodes=values.get("angular_nodes"),
        radial_cutoff=values.get("radial_cutoff"),
        target_rel_err=values.get("target_rel_err"),
        max_refinements=values.get("max_refinements"),
    )
    mc = MCSpec.from_settings(samples=values.get("samples"), seed=values.get("seed"), chunk_size=values.get("chunk_size"))
    shared = {
        "command", "log_level", "workers", "output_format", "output_path",
        "radial_nodes", "angular_nodes", "radial_cutoff", "target_rel_err", "max_refinements",
        "samples", "seed", "chunk_size",
    }
    return RunConfig(
        command=args.command,
        params={k: v for k, v in values.items() if k not in shared},
        output_format=args.output_format or DEFAULT_FORMATS.get(args.command, "json"),
        output_path=args.output_path,
        workers=args.workers,
        quad=quad,
        mc=mc,
    )


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        configure_logging(args.log_level)
        config = build_config(args)
        logger.info("command_started", command=config.command)
        return HANDLERS[config.command](config)
    except ResonanceError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RESONANCE
    except (UsageError, PotentialFileError, ValidationError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
