"""Command-line entry point: synth / train / infer / eval / gradcheck / plot.

Exit codes: 0 success, 1 usage error, 2 data or configuration error,
3 numerical failure (divergence or a failed gradient check).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .datasets import DataError, SequenceSample, load_kitti_sequence, save_image, save_kitti_poses
from .evaluation import (
    EvaluationError,
    SEGMENT_LENGTHS,
    kitti_drift,
    load_trajectory_csv,
    rpe_rmse,
    write_trajectory_csv,
    write_trajectory_svg,
)
from .gradcheck import SUITES, run_suites
from .geometry import GeometryError
from .model import ModelConfig, estimates_to_trajectory, forward_sequence
from .synthetic import ConfigError, SyntheticWorldConfig, generate_synthetic
from .tensor import NumericsError, ShapeError
from .training import TrainConfig, train, write_loss_curve

__all__ = ["main", "dispatch", "RunConfig", "load_run_config"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

_DATA_ERRORS = (DataError, CheckpointError, EvaluationError, ConfigError, GeometryError,
                ShapeError, ValueError, OSError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with code 2
        raise UsageError(message)


@dataclass
class RunConfig:
    """Typed view of the JSON run configuration."""

    model: ModelConfig
    train: TrainConfig
    synth: SyntheticWorldConfig


def _build_section(cls, section: dict, name: str):
    fields = {f.name for f in cls.__dataclass_fields__.values()}
    unknown = set(section) - fields
    if unknown:
        raise DataError(f"unknown key(s) in config section {name!r}: {sorted(unknown)}")
    if "step_translation" in section:
        section = dict(section, step_translation=tuple(section["step_translation"]))
    try:
        return cls(**section)
    except (TypeError, ValueError) as exc:
        raise DataError(f"invalid config section {name!r}: {exc}") from exc


def load_run_config(path) -> RunConfig:
    """Parse and validate the JSON config; unknown keys are rejected."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise DataError(f"{path}: top-level config must be a JSON object")
    unknown = set(doc) - {"model", "train", "synth"}
    if unknown:
        raise DataError(f"{path}: unknown top-level key(s): {sorted(unknown)}")
    for key in ("model", "train", "synth"):
        if key in doc and not isinstance(doc[key], dict):
            raise DataError(f"{path}: section {key!r} must be a JSON object")
    return RunConfig(
        model=_build_section(ModelConfig, doc.get("model", {}), "model"),
        train=_build_section(TrainConfig, doc.get("train", {}), "train"),
        synth=_build_section(SyntheticWorldConfig, doc.get("synth", {}), "synth"),
    )


def _load_dataset(data_dir) -> list[SequenceSample]:
    root = Path(data_dir)
    if (root / "poses.txt").exists():
        seq_dirs = [root]
    else:
        seq_dirs = sorted(d for d in root.iterdir() if d.is_dir() and (d / "poses.txt").exists())
    if not seq_dirs:
        raise DataError(f"{data_dir}: no sequence directories with poses.txt found")
    return [load_kitti_sequence(d, d / "poses.txt") for d in seq_dirs]


# -- subcommands -----------------------------------------------------------


def _cmd_synth(args) -> int:
    cfg = load_run_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    samples = generate_synthetic(cfg.synth)
    for i, sample in enumerate(samples):
        seq_dir = out / f"seq_{i:03d}"
        seq_dir.mkdir(exist_ok=True)
        for j, frame in enumerate(sample.frames):
            save_image(frame, seq_dir / f"{j:06d}.png")
        save_kitti_poses(sample.poses, seq_dir / "poses.txt")
    print(f"wrote {len(samples)} sequences to {out}")
    return EXIT_OK


def _cmd_train(args) -> int:
    cfg = load_run_config(args.config)
    train_cfg = cfg.train
    if args.seed is not None:
        train_cfg = dataclasses.replace(train_cfg, seed=args.seed)
    dataset = _load_dataset(args.data)
    result = train(dataset, cfg.model, train_cfg)
    out = Path(args.out)
    save_checkpoint(result.params, result.state, out)
    write_loss_curve(result.loss_curve, out.with_name(out.name + ".loss.csv"))
    sidecar = {"model": dataclasses.asdict(cfg.model)}
    out.with_name(out.name + ".cfg.json").write_text(json.dumps(sidecar, indent=2) + "\n")
    final = result.loss_curve[-1][1] if result.loss_curve else float("nan")
    print(f"trained {train_cfg.iterations} iterations; final loss {final:.6g}; checkpoint {out}")
    return EXIT_OK


def _model_config_for(ckpt_path, config_arg) -> ModelConfig:
    if config_arg is not None:
        return load_run_config(config_arg).model
    sidecar = Path(str(ckpt_path) + ".cfg.json")
    if not sidecar.exists():
        raise DataError(
            f"{sidecar} not found; pass --config to describe the checkpointed model"
        )
    try:
        doc = json.loads(sidecar.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"{sidecar}: {exc}") from exc
    return _build_section(ModelConfig, doc.get("model", {}), "model")


def _cmd_infer(args) -> int:
    cfg = _model_config_for(args.ckpt, args.config)
    params, _ = load_checkpoint(args.ckpt)
    dataset = _load_dataset(args.data)
    if len(dataset) != 1:
        raise DataError(f"{args.data}: expected exactly one sequence, found {len(dataset)}")
    sample = dataset[0]
    estimates = []
    start = 0
    while start + 1 < len(sample):
        stop = min(start + cfg.seq_len, len(sample))
        window = SequenceSample(sample.frames[start:stop], sample.poses[start:stop])
        estimates.extend(forward_sequence(window, params, cfg))
        start = stop - 1
    traj = estimates_to_trajectory(estimates)
    write_trajectory_csv(traj, args.out)
    print(f"wrote {len(traj)} poses to {args.out}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    gt = load_trajectory_csv(args.gt)
    pred = load_trajectory_csv(args.pred)
    if args.metric == "rpe":
        result = {"rpe_rmse": rpe_rmse(gt, pred, delta=args.delta)}
    else:
        lengths = args.lengths if args.lengths else list(SEGMENT_LENGTHS)
        t_rel, r_rel = kitti_drift(gt, pred, lengths=lengths)
        result = {"t_rel_percent": t_rel, "r_rel_deg_per_100m": r_rel}
    print(json.dumps(result))
    return EXIT_OK


def _cmd_gradcheck(args) -> int:
    names = [args.module] if args.module else None
    try:
        results = run_suites(names)
    except KeyError as exc:
        raise UsageError(str(exc)) from exc
    failed = 0
    for res in results:
        print(res)
        failed += 0 if res.passed else 1
    print(f"{len(results) - failed}/{len(results)} gradient checks passed")
    return EXIT_OK if failed == 0 else EXIT_NUMERIC


def _cmd_plot(args) -> int:
    trajs = [load_trajectory_csv(p) for p in args.traj]
    labels = args.label if args.label else [Path(p).stem for p in args.traj]
    if len(labels) != len(trajs):
        raise UsageError("need one --label per --traj when labels are given")
    write_trajectory_svg(trajs, labels, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def _make_parser() -> _Parser:
    parser = _Parser(prog="guidedvo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train a model on a dataset directory")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("infer", help="run a checkpoint over a sequence")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("eval", help="compare trajectories, print JSON metrics")
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--metric", choices=("kitti", "rpe"), required=True)
    p.add_argument("--lengths", type=float, nargs="+", default=None)
    p.add_argument("--delta", type=int, default=1)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("gradcheck", help="run finite-difference suites")
    p.add_argument("--module", default=None, help=f"one of {sorted(SUITES)}")
    p.set_defaults(func=_cmd_gradcheck)

    p = sub.add_parser("plot", help="overlay trajectories into an SVG")
    p.add_argument("--traj", nargs="+", required=True)
    p.add_argument("--label", nargs="*", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_plot)

    return parser


def dispatch(argv) -> int:
    parser = _make_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericsError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))
