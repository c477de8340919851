"""Command line front end: ``repdata <command> [options]``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 contract violation.
Errors are reported on stderr as a single ``error: <kind>: <message>`` line.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .bounds import bound_report
from .dataset import SamplerConfig, load_csv, load_iris_binary, sample_interlaced_torus, sample_labeled_circle, save_csv
from .errors import ContractError, DataError
from .experiment import SCHEMA_VERSION, ExperimentSpec, run_experiment
from .metric import hausdorff, optimal_epsilon_subset
from .perceptron import TrainConfig, init_weights, train
from .persistence import bottleneck_distance, epsilon_interval, persistence_diagrams, read_diagram_csv, write_diagram_csv
from .reduce import epsilon_for_target_size, reduce_dataset

EXIT_USAGE, EXIT_DATA, EXIT_CONTRACT = 2, 3, 4


class UsageError(Exception):
    pass


def _emit(args, payload: dict, csv_row=None) -> None:
    """Print a result in the requested format."""
    if args.format == "csv" and csv_row is not None:
        header, values = csv_row
        print(",".join(header))
        print(",".join(str(v) for v in values))
    else:
        print(json.dumps({"schema_version": SCHEMA_VERSION, **payload}))


def _write_json(path, payload: dict) -> None:
    try:
        Path(path).write_text(json.dumps({"schema_version": SCHEMA_VERSION, **payload}, indent=2))
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _out_path(args, name):
    if name is None:
        return None
    path = Path(name)
    if args.out_dir and not path.is_absolute():
        Path(args.out_dir).mkdir(parents=True, exist_ok=True)
        path = Path(args.out_dir) / path
    return path


def _scale(text: str):
    if text == "auto":
        return "auto"
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive number or 'auto', got {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError("max scale must be positive")
    return value


def _nonneg(text: str) -> float:
    value = float(text)
    if not (value >= 0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError(f"expected a finite nonnegative number, got {text!r}")
    return value


def _load_weights(path) -> np.ndarray:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read weights from {path}: {exc}") from exc
    w = data["weights"] if isinstance(data, dict) else data
    return np.asarray(w, dtype=float)


# --------------------------------------------------------------------- commands


def cmd_gen(args) -> int:
    if args.shape == "iris":
        data = load_iris_binary(tuple(args.classes))
    elif args.shape == "torus":
        data = sample_interlaced_torus(SamplerConfig("interlaced-torus", args.points_per_class, args.noise, args.seed))
    else:
        data = sample_labeled_circle(
            SamplerConfig("circle", args.points_per_class, args.noise, args.seed, radius=args.radius, num_points=args.num_points)
        )
    save_csv(data, _out_path(args, args.out), args.label_column)
    return 0


def cmd_reduce(args) -> int:
    data = load_csv(args.input, args.label_column)
    epsilon = args.epsilon
    if epsilon is None:
        epsilon, _ = epsilon_for_target_size(data, args.target_size)
    report = reduce_dataset(data, epsilon)
    save_csv(report.reduced, _out_path(args, args.out), args.label_column)
    if args.report:
        _write_json(_out_path(args, args.report), report.to_dict())
    _emit(args, report.to_dict(), (["requested_epsilon", "certified_epsilon", "original_size", "reduced_size"],
                                   [report.requested_epsilon, report.certified_epsilon, report.original_size, len(report.reduced)]))
    return 0


def cmd_diagram(args) -> int:
    data = load_csv(args.input, args.label_column)
    dims = (0, 1) if args.dim is None else (args.dim,)
    diagrams = persistence_diagrams(data.points, dims, args.max_scale)
    out = _out_path(args, args.out)
    if out is not None:
        write_diagram_csv(diagrams.values(), out)
    else:
        for q, dgm in diagrams.items():
            for birth, death in dgm.pairs:
                print(f"{q},{birth!r},{'inf' if math.isinf(death) else repr(death)}")
    return 0


def cmd_bottleneck(args) -> int:
    a = read_diagram_csv(args.first, args.dim)[args.dim]
    b = read_diagram_csv(args.second, args.dim)[args.dim]
    if args.truncate is not None:
        a, b = a.truncated(args.truncate), b.truncated(args.truncate)
    value = bottleneck_distance(a, b)
    _emit(args, {"dim": args.dim, "bottleneck": None if math.isinf(value) else value, "infinite": math.isinf(value)},
          (["dim", "bottleneck"], [args.dim, value]))
    return 0


def cmd_hausdorff(args) -> int:
    a = load_csv(args.first, args.label_column)
    b = load_csv(args.second, args.label_column)
    value = hausdorff(a.points, b.points)
    _emit(args, {"hausdorff": value}, (["hausdorff"], [value]))
    return 0


def cmd_epsilon(args) -> int:
    original = load_csv(args.original, args.label_column)
    reduced = load_csv(args.reduced, args.label_column)
    reduced = _align_labels(original, reduced)
    value = optimal_epsilon_subset(original, reduced)
    _emit(args, {"optimal_epsilon": value}, (["optimal_epsilon"], [value]))
    return 0


def cmd_epsilon_interval(args) -> int:
    original = load_csv(args.original, args.label_column)
    reduced = load_csv(args.reduced, args.label_column)
    interval = epsilon_interval(original.points, reduced.points, dims=args.dims, max_scale=args.max_scale)
    _emit(args, interval.to_dict(), (["lower", "upper"], [interval.lower, interval.upper]))
    return 0


def cmd_train(args) -> int:
    data = load_csv(args.input, args.label_column)
    reference = load_csv(args.reference, args.label_column) if args.reference else None
    w0 = _load_weights(args.weights) if args.weights else init_weights(data.dim, args.seed)
    config = TrainConfig(args.mode, args.epochs, args.schedule, args.lr, args.seed)
    trace = train(data, w0, config, reference)
    if args.trace:
        trace.to_csv(_out_path(args, args.trace))
    if args.weights_out:
        _write_json(_out_path(args, args.weights_out), {"weights": trace.weights.tolist()})
    summary = {"weights": trace.weights.tolist(), "train_loss": trace.train_loss[-1], "train_acc": trace.train_acc[-1]}
    if reference is not None:
        summary.update(ref_loss=trace.ref_loss[-1], ref_acc=trace.ref_acc[-1])
    _emit(args, summary, (["train_loss", "train_acc"], [summary["train_loss"], summary["train_acc"]]))
    return 0


def cmd_bounds(args) -> int:
    original = load_csv(args.input, args.label_column)
    reduced = _align_labels(original, load_csv(args.reduced, args.label_column))
    w = _load_weights(args.weights)
    report = bound_report(w, original, reduced, args.delta, args.include_bias)
    _emit(args, report.to_dict(), (["loss_gap_bound", "empirical_loss_gap", "margin_min"],
                                   [report.gap_bound, report.empirical_loss_gap, report.margin_min]))
    return 0


def cmd_experiment(args) -> int:
    trainer = TrainConfig(args.mode, args.epochs, args.schedule, args.lr, args.seed)
    spec = ExperimentSpec(
        name=args.name,
        epsilon=args.epsilon,
        target_size=args.target_size,
        trainer=trainer,
        repetitions=args.repetitions,
        seed=args.seed,
        out_dir=args.out_dir,
        points_per_class=args.points_per_class,
        timing_epochs=args.timing_epochs,
    )
    report = run_experiment(spec)
    _emit(args, {k: v for k, v in report.items() if k != "schema_version"})
    return 0


def _align_labels(original, reduced):
    """Re-express ``reduced``'s dense labels in ``original``'s numbering (files store raw labels)."""
    if original.label_map is None or reduced.label_map is None:
        return reduced
    inverse = {dense: raw for raw, dense in reduced.label_map.items()}
    try:
        labels = [original.label_map[inverse[int(c)]] for c in reduced.labels]
    except KeyError as exc:
        raise ContractError(f"reduced dataset uses label {exc.args[0]} absent from the original") from None
    return type(reduced)(reduced.points, labels, original.num_classes, label_map=original.label_map,
                         feature_names=reduced.feature_names)


# ----------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="repdata", description="Dominating-set reduction of labeled point clouds, persistence diagrams and perceptron bounds."
    )
    _global_flags(parser, default=True)
    # global flags are accepted after the subcommand too; SUPPRESS keeps the
    # subparser from overwriting a value given before it
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, default=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="write a synthetic or bundled dataset as CSV")
    p.add_argument("shape", choices=("torus", "circle", "iris"))
    p.add_argument("--out", required=True)
    p.add_argument("--points-per-class", type=int, default=2000)
    p.add_argument("--num-points", type=int, default=None, help="circle: total number of points")
    p.add_argument("--noise", type=_nonneg, default=0.0)
    p.add_argument("--radius", type=float, default=30.0)
    p.add_argument("--classes", type=int, nargs=2, default=(0, 2), help="iris: the two classes kept")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("reduce", parents=[common], help="dominating-set reduction")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--epsilon", type=_nonneg)
    g.add_argument("--target-size", type=int, help="bisect epsilon to reach about this many points")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("diagram", parents=[common], help="Rips persistence diagram of a point cloud")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--dim", type=int, choices=(0, 1), default=None)
    p.add_argument("--max-scale", type=_scale, default="auto")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_diagram)

    p = sub.add_parser("bottleneck", parents=[common], help="bottleneck distance between two diagram files")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--dim", type=int, choices=(0, 1), default=0)
    p.add_argument("--truncate", type=float, default=None, help="replace infinite deaths by this value")
    p.set_defaults(func=cmd_bottleneck)

    p = sub.add_parser("hausdorff", parents=[common], help="Hausdorff distance between two point clouds")
    p.add_argument("first")
    p.add_argument("second")
    p.set_defaults(func=cmd_hausdorff)

    p = sub.add_parser("epsilon", parents=[common], help="optimal representation error of a subset")
    p.add_argument("--original", required=True)
    p.add_argument("--reduced", required=True)
    p.set_defaults(func=cmd_epsilon)

    p = sub.add_parser("epsilon-interval", parents=[common], help="bottleneck/Hausdorff bracket on the representation error")
    p.add_argument("--original", required=True)
    p.add_argument("--reduced", required=True)
    p.add_argument("--dims", type=int, nargs="+", choices=(0, 1), default=[0, 1])
    p.add_argument("--max-scale", type=_scale, default="auto")
    p.set_defaults(func=cmd_epsilon_interval)

    p = sub.add_parser("train", parents=[common], help="train a sigmoid perceptron")
    _trainer_flags(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--reference", default=None)
    p.add_argument("--weights", default=None, help="JSON file with initial weights")
    p.add_argument("--weights-out", default=None)
    p.add_argument("--trace", default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("bounds", parents=[common], help="loss-gap and margin certificates for given weights")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--reduced", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--include-bias", action="store_true", help="count the bias weight in margin and delta norms")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("experiment", parents=[common], help="original vs dominating vs random comparison")
    p.add_argument("name", choices=("torus", "iris", "circle"))
    g = p.add_mutually_exclusive_group()
    g.add_argument("--epsilon", type=_nonneg, default=None)
    g.add_argument("--target-size", type=int, default=None)
    _trainer_flags(p)
    p.add_argument("--repetitions", type=int, default=100)
    p.add_argument("--points-per-class", type=int, default=2000)
    p.add_argument("--timing-epochs", type=int, default=10000)
    p.set_defaults(func=cmd_experiment)
    return parser


def _global_flags(p, default: bool) -> None:
    def d(value):
        return value if default else argparse.SUPPRESS

    p.add_argument("--seed", type=int, default=d(0), help="master random seed")
    p.add_argument("--out-dir", default=d(None), help="directory for relative output paths")
    p.add_argument("--format", choices=("json", "csv"), default=d("json"), help="stdout format")
    p.add_argument("--label-column", default=d("label"))


def _trainer_flags(p) -> None:
    p.add_argument("--mode", choices=("sgd", "gd"), default="sgd")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--lr", type=float, default=0.1, help="base learning rate")
    p.add_argument("--schedule", choices=("constant", "harmonic"), default="constant")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ContractError as exc:
        print(f"error: contract: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except DataError as exc:
        print(f"error: data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
