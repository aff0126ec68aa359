"""
Command-line front end.

    nidc validate --config SCENARIO.yaml
    nidc solve    --config SCENARIO.yaml --out runs/solve
    nidc control  --config SCENARIO.yaml --target free --eps 0.01
    nidc sweep    --config SCENARIO.yaml --eps 0.1,0.01,0.001

Exit codes: 0 success, 2 config error or structural violations, 3 numeric divergence.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Union, get_args

from dotenv import load_dotenv

from .errors import ConfigError, DivergenceError, NidcError
from .logging_setup import setup_logging
from .model.registry import describe_registries
from .pipeline.base import Command, RunContext
from .pipeline.stages import run_command
from .settings import load_solver_settings

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3

COMMANDS = get_args(Command)


def parse_float_list(text: str, flag: str) -> List[float]:
    """'0.1,0.01' -> [0.1, 0.01]; empty or malformed lists are config errors."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ConfigError(f"{flag} needs at least one value", field=flag)
    try:
        return [float(p) for p in parts]
    except ValueError as e:
        raise ConfigError(f"{flag}: {e}", field=flag) from e


def parse_target(text: Optional[str]) -> Optional[Union[str, List[float]]]:
    if text is None:
        return None
    if text.strip() == "free":
        return "free"
    return parse_float_list(text, "--target")


def parse_eps(text: Optional[str], command: str) -> Optional[List[float]]:
    if text is None:
        return None
    values = parse_float_list(text, "--eps")
    if any(v <= 0.0 for v in values):
        raise ConfigError("epsilons must be positive", field="--eps")
    if command == "sweep" and any(b >= a for a, b in zip(values, values[1:])):
        raise ConfigError("epsilons must be strictly decreasing", field="--eps")
    return values


def _registry_help() -> str:
    lines = ["Map kinds available in scenario files:"]
    for family, kinds in describe_registries().items():
        lines.append(f"  {family:<9} {', '.join(kinds)}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nidc",
        description="Neutral integrodifferential impulsive control: solve, steer and sweep",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=_registry_help() + """

Examples:
  # Structural checks plus the existence condition
  nidc validate --config config/scenarios/wave_memory.yaml

  # Mild solution with the open-loop control of the scenario
  nidc solve --config config/scenarios/free_wave.yaml --out runs/free_wave

  # Steer to a target with one regularization parameter
  nidc control --config config/scenarios/scalar_steering.yaml --target 1.0 --eps 0.01

  # ε-sweep, reusing cached resolvents
  nidc sweep --config config/scenarios/wave_memory.yaml --eps 0.1,0.01,0.001 --cache .nidc_cache
        """,
    )
    parser.add_argument('command', choices=COMMANDS, help='Pipeline to run')
    parser.add_argument('--config', required=True, help='Scenario YAML file')
    parser.add_argument('--out', default=None, help='Output directory (default: output/<scenario>_<command>)')
    parser.add_argument('--grid-step', type=float, default=None, help='Maximum time-grid spacing')
    parser.add_argument('--tol', type=float, default=None, help='Picard tolerance (sup-norm distance)')
    parser.add_argument('--eps', default=None, help='Regularization parameter(s), comma separated')
    parser.add_argument('--target', default=None, help="Target state: comma-separated vector or 'free'")
    parser.add_argument('--cache', default=None, help='Resolvent cache directory')
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)

    config_path = Path(args.config)
    out_dir = Path(args.out) if args.out else Path("output") / f"{config_path.stem}_{args.command}"
    setup_logging(args.command, out_dir)

    logger.info("=" * 80)
    logger.info(f"nidc {args.command}: {config_path}")
    logger.info("=" * 80)

    try:
        context = RunContext(
            command=args.command,
            config_path=config_path,
            out_dir=out_dir,
            settings=load_solver_settings(),
            overrides={'grid_step': args.grid_step, 'picard_tol': args.tol, 'cache_dir': args.cache},
            target_override=parse_target(args.target),
            eps_override=parse_eps(args.eps, args.command),
        )
        run_command(context)
    except ConfigError as e:
        logger.error(f"❌ Config error: {e}")
        return EXIT_CONFIG
    except DivergenceError as e:
        logger.error(f"❌ Divergence: {e}")
        if e.distances:
            logger.error(f"   distances: {', '.join(f'{d:.3e}' for d in e.distances[-10:])}")
        return EXIT_DIVERGENCE
    except NidcError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return EXIT_CONFIG

    if context.errors:
        first = context.errors[0]
        return EXIT_DIVERGENCE if isinstance(first, DivergenceError) else EXIT_CONFIG
    if context.violations:
        logger.error(f"❌ {len(context.violations)} structural violation(s)")
        return EXIT_CONFIG

    logger.info(f"✅ Done. Outputs in {out_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
