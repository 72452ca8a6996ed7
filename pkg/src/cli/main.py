"""
SB-MCL command line (meta-train | eval | sweep | baseline)

Exit codes: 0 success, 1 configuration/checkpoint/head error, 2 training divergence.
"""
import argparse
import logging
import os
import sys
from dataclasses import replace
from typing import List, Optional

from exceptions.sbmcl_exceptions import (
    CheckpointException,
    ConfigException,
    DivergenceException,
    HeadMismatchException,
)
from harness import (
    baseline_offline,
    baseline_online,
    meta_eval,
    meta_train,
    metrics_csv,
    sweep_generalization,
    write_loss_curve_csv,
    write_metrics_csv,
    write_metrics_json,
)
from models.config import MetaConfig, PredictMode

from .checkpoint_io import load_checkpoint, save_checkpoint
from .config_file import load_config

logger = logging.getLogger("sbmcl")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DIVERGED = 2


class ArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors reported as configuration errors (exit 1)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def parse_grid(text: str) -> List[int]:
    """'10,20,50' -> [10, 20, 50]; an empty grid is an error."""
    values = [item.strip() for item in text.split(",") if item.strip()]
    if not values:
        raise ValueError("grid is empty")
    try:
        return [int(v) for v in values]
    except ValueError:
        raise ValueError(f"grid {text!r} must be comma-separated integers") from None


def loss_curve_path(checkpoint_path: str) -> str:
    return os.path.splitext(checkpoint_path)[0] + ".loss.csv"


def _eval_spec(checkpoint, args):
    spec = checkpoint.config.stream
    num_tasks = args.tasks if args.tasks is not None else spec.num_tasks
    shots = args.shots if args.shots is not None else spec.shots
    spec = spec.with_setting(num_tasks, shots)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    return spec


def cmd_meta_train(args: argparse.Namespace) -> int:
    config = load_config(args.config) if args.config else MetaConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.steps is not None:
        overrides["steps"] = args.steps
    if overrides:
        config = replace(config, **overrides)
    checkpoint = meta_train(config)
    digest = save_checkpoint(checkpoint, args.out)
    write_loss_curve_csv(checkpoint.loss_curve, loss_curve_path(args.out))
    logger.info("wrote %s (checksum %s, %d parameters)", args.out, digest,
                checkpoint.num_parameters())
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    checkpoint = load_checkpoint(args.ckpt)
    spec = _eval_spec(checkpoint, args)
    row = meta_eval(checkpoint, spec, args.episodes, PredictMode(args.mode),
                    sequential=args.path == "sequential")
    sys.stdout.write(metrics_csv([row]))
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    checkpoint = load_checkpoint(args.ckpt)
    base = _eval_spec(checkpoint, argparse.Namespace(tasks=None, shots=None, seed=args.seed))
    rows = sweep_generalization(checkpoint, base, parse_grid(args.tasks_grid),
                                parse_grid(args.shots_grid), args.episodes, PredictMode(args.mode))
    write_metrics_csv(rows, args.out if args.out else sys.stdout)
    if args.json:
        write_metrics_json(rows, args.json, extra={"checkpoint": os.path.basename(args.ckpt)})
    return EXIT_OK


def cmd_baseline(args: argparse.Namespace) -> int:
    config = load_config(args.config) if args.config else MetaConfig()
    spec = config.stream
    spec = spec.with_setting(args.tasks if args.tasks is not None else spec.num_tasks,
                             args.shots if args.shots is not None else spec.shots)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    if args.kind == "online":
        row = baseline_online(config, spec, args.episodes)
    else:
        row = baseline_offline(config, spec, args.episodes, steps=args.steps)
    write_metrics_csv([row], args.out if args.out else sys.stdout)
    return EXIT_OK


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="sbmcl", description="Sequential Bayesian meta-continual learning")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")
    sub = parser.add_subparsers(dest="cmd", required=True, parser_class=ArgumentParser)

    p = sub.add_parser("meta-train", help="meta-train a head and write a checkpoint")
    p.add_argument("--config", help="JSON run config (defaults when omitted)")
    p.add_argument("--out", required=True, help="checkpoint path; the loss curve goes beside it")
    p.add_argument("--seed", type=int, help="override the run seed")
    p.add_argument("--steps", type=int, help="override the number of meta-steps")
    p.set_defaults(handler=cmd_meta_train)

    p = sub.add_parser("eval", help="meta-test a checkpoint; CSV on stdout")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--tasks", type=int, help="tasks per episode (default: as trained)")
    p.add_argument("--shots", type=int, help="shots per task (default: as trained)")
    p.add_argument("--episodes", type=int, help="episode count (default: config eval_episodes, 512)")
    p.add_argument("--mode", choices=[m.value for m in PredictMode], default=PredictMode.MAP.value)
    p.add_argument("--path", choices=["sequential", "batch"], default="sequential",
                   help="posterior update path")
    p.add_argument("--seed", type=int, help="stream seed (default: the checkpoint's)")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("sweep", help="evaluate a (tasks x shots) grid without re-training")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--tasks-grid", required=True, help="comma-separated task counts")
    p.add_argument("--shots-grid", required=True, help="comma-separated shot counts")
    p.add_argument("--episodes", type=int)
    p.add_argument("--mode", choices=[m.value for m in PredictMode], default=PredictMode.MAP.value)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.add_argument("--json", help="also write a JSON summary here")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("baseline", help="online or offline reference baseline")
    p.add_argument("--kind", choices=["online", "offline"], required=True)
    p.add_argument("--config", help="JSON run config (defaults when omitted)")
    p.add_argument("--tasks", type=int)
    p.add_argument("--shots", type=int)
    p.add_argument("--episodes", type=int)
    p.add_argument("--steps", type=int, help="offline step cap (default: config offline_steps)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(handler=cmd_baseline)
    return parser


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, stream=sys.stderr, force=True,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    try:
        return args.handler(args)
    except DivergenceException as e:
        logger.error("%s", e)
        return EXIT_DIVERGED
    except (ConfigException, CheckpointException, HeadMismatchException, ValueError, OSError) as e:
        logger.error("%s", e)
        return EXIT_CONFIG


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
