"""mda-train: fit the bilateral predictor on an exported mode-window dataset.

Exit codes: 0 success, 1 usage or configuration problem, 2 data problem.
Flag precedence: built-in defaults, then the --config key=value file, then
explicit flags.
"""
import argparse
import sys
from dataclasses import fields

from .config import PredictorConfig, read_run_config
from .errors import PredictorError, InvalidInputError, UsageError
from .train import train

DEFAULT_SEED = 2024

_FLAG_FIELDS = ("k", "w", "h", "d", "heads", "epochs", "batch_size", "lr",
                "weight_decay", "clip_norm", "lambda1", "lambda2", "lambda3",
                "tau", "mode_embeddings")


def _parse_flag_bool(text):
    lowered = text.lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mda-train",
        description="Train the bilateral mode-domain predictor on a directory "
                    "of exported mode windows; writes metrics.csv and the "
                    "best-validation checkpoint.")
    parser.add_argument("--data", required=True,
                        help="dataset directory containing manifest.json")
    parser.add_argument("--out", required=True,
                        help="output directory for metrics and checkpoint")
    parser.add_argument("--config", help="key=value run-config file")
    parser.add_argument("--human", default="human",
                        help="manifest channel treated as the human side")
    parser.add_argument("--robot", default="robot",
                        help="manifest channel treated as the robot side")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED,
                        help="single seed behind all run randomness")
    parser.add_argument("--stride", type=int, default=0,
                        help="window slicing stride, 0 means the horizon")
    parser.add_argument("--resume", help="checkpoint to initialize weights from")
    defaults = PredictorConfig()
    group = parser.add_argument_group("model and schedule")
    for name in _FLAG_FIELDS:
        current = getattr(defaults, name)
        flag = "--" + name.replace("_", "-")
        kind = _parse_flag_bool if isinstance(current, bool) else type(current)
        group.add_argument(flag, dest=name, type=kind, default=None,
                           help=f"{name} (default {current})")
    return parser


def _build_config(args) -> PredictorConfig:
    values = PredictorConfig().to_dict()
    if args.config:
        values.update(read_run_config(args.config))
    for name in _FLAG_FIELDS:
        flag_value = getattr(args, name)
        if flag_value is not None:
            values[name] = flag_value
    try:
        return PredictorConfig.from_dict(values)
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from exc


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        config = _build_config(args)
        result = train(args.data, config, args.out, human=args.human,
                       robot=args.robot, seed=args.seed, stride=args.stride,
                       resume=args.resume,
                       log=lambda line: print(line, file=sys.stderr))
    except UsageError as exc:
        print(f"mda-train: {exc}", file=sys.stderr)
        return 1
    except (PredictorError, OSError) as exc:
        print(f"mda-train: {exc}", file=sys.stderr)
        return 2
    train_n, val_n, test_n = result.split_sizes
    print(f"split {train_n}/{val_n}/{test_n}, best epoch {result.best_epoch} "
          f"val_loss={result.best_val_loss!r}")
    print(f"wrote {result.metrics_path} and {result.checkpoint_path}")
    return 0


def console_main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    console_main()
