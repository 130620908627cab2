"""Command-line entry point: ``wigner-current <stage> --config FILE --out DIR``."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .pipeline import PipelineError, run_scenario
from .reconstruction import InitMode

_COMMANDS = {
    "simulate": ("simulate",),
    "reconstruct": ("reconstruct",),
    "analyze": ("analyze",),
    "report": ("report",),
    "run": ("simulate", "reconstruct", "analyze", "report"),
}
_HELP = {
    "simulate": "render the Wigner snapshots of the pump sweep",
    "reconstruct": "recover J_exp for every snapshot pair (runs simulate first)",
    "analyze": "decompose currents and compute origin charges (runs simulate and reconstruct first)",
    "report": "write the dB / purity table and summary",
    "run": "all stages",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wigner-current", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name, help=_HELP[name])
        p.add_argument("--config", required=True, help="scenario file, or 'weak' / 'strong' for the bundled ones")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--init-mode", choices=("zero", "fitted", "both"), default=None,
                       help="initial current for reconstruction (default: as configured)")
        p.add_argument("--seed", type=int, default=None, help="reserved; the pipeline draws no random numbers")
        p.add_argument("--workers", type=int, default=1, help="processes for per-pair reconstruction")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    modes = None
    if args.init_mode == "both":
        modes = (InitMode.ZERO, InitMode.FITTED_JSYS)
    elif args.init_mode is not None:
        modes = (InitMode(args.init_mode),)
    try:
        manifest = run_scenario(args.config, args.out, _COMMANDS[args.command], modes, args.workers)
    except PipelineError as exc:
        print(f"wigner-current: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"wigner-current: [arguments] {exc}", file=sys.stderr)
        return 2
    for stage in manifest["stages"]:
        print(f"{stage['name']:<12} {stage['wall_time_s']:8.2f} s")
    print(f"{len(manifest['files'])} files written to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
