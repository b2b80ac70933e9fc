"""
Command-line entry point of the Nehari fixed-point toolkit.

    python -m src.main {profile|solve|verify|scan} --config run.yaml [--out DIR] [--seed N] [--workers N] [--metrics]
"""
import argparse
import sys
from pathlib import Path
from typing import List, Optional

from .cli.config import Command, parse_config
from .cli.runner import EXIT_USAGE, run
from .errors import ConfigError
from .logging_config import get_logger

logger = get_logger(__name__, component="main")

EPILOG = """\
run settings and their defaults (config keys under run.):
  seed 0, directions 50, samples 200, workers 1, damping 0.5,
  max_iters 500, profile_samples 256, reversed_H2 false, H1_box [10, 10]
problem defaults (config keys under problem.):
  p 2, r 0, R .inf, beta 0.25, n 1025, mode maximize; R_cap 1e8 for the
  kernel problem, required for the p-Laplacian when R is infinite

exit codes: 0 success, 1 usage/config error, 2 hypothesis fails,
3 no convergence or no interior maximizer
"""


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 1; exit code 2 means a hypothesis fails."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="nehari",
        description="Nehari-manifold fixed-point solver and hypothesis certifier",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=EPILOG,
    )
    parser.add_argument("command", choices=[c.value for c in Command], help="What to run")
    parser.add_argument("--config", required=True, help="YAML run configuration")
    parser.add_argument("--out", help="Output directory (run.out, default 'out')")
    parser.add_argument("--seed", type=int, help="Seed of every sampled quantity (run.seed)")
    parser.add_argument("--workers", type=int, help="Worker processes (run.workers)")
    parser.add_argument("--metrics", action="store_true", help="Write Prometheus metrics to <out>/metrics.prom")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {
        "run.command": args.command,
        "run.out": args.out,
        "run.seed": args.seed,
        "run.workers": args.workers,
    }
    try:
        config = parse_config(args.config, overrides)
    except ConfigError as e:
        logger.error("Invalid configuration", error=str(e))
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    metrics_path = Path(config.run.out) / "metrics.prom" if args.metrics else None
    return run(config, metrics_path)


if __name__ == "__main__":
    sys.exit(main())
