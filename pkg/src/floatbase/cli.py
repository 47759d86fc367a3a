"""Command-line entry point: ``floatbase {simulate,estimate,evaluate,converge}``.

Each command writes its outputs into ``--out`` together with ``config.txt``,
the fully resolved configuration used for the run.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import lie
from .config import ConfigError, RunConfig
from .dataset import (
    DatasetFormatError, read_dataset, read_trajectory, write_dataset, write_table, write_trajectory,
)
from .estimator import KinematicInertialOdometry, run
from .evaluation import EvaluationError, Trajectory, convergence_study, evaluate
from .kinematics import ChainFormatError, load_legs
from .lgekf import DivergenceError, SingularInnovationError
from .simulator import InfeasibleGaitError, simulate

CONFIG_NAME = "config.txt"


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return "%.12g" % v
    return str(v)


def write_summary(path: Path, values: dict) -> None:
    path.write_text("".join(f"{k} = {_fmt(v)}\n" for k, v in values.items()), encoding="utf-8", newline="\n")


def _resolve(args) -> RunConfig:
    cfg = RunConfig.load(args.config)
    over = {}
    if getattr(args, "seed", None) is not None:
        over["seed"] = args.seed
    if getattr(args, "model", None) is not None:
        over["model"] = str(args.model)
    if getattr(args, "trials", None) is not None:
        over["converge__trials"] = args.trials
    return cfg.with_overrides(**over) if over else cfg


def _out_dir(args, cfg: RunConfig) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg.save(out / CONFIG_NAME)
    return out


def _legs(cfg: RunConfig):
    return load_legs(cfg["model"] or None)


def _odometry(cfg: RunConfig, legs) -> KinematicInertialOdometry:
    return KinematicInertialOdometry(
        legs, cfg.noise_params(), cfg.encoder_std, cfg.prior(), cfg["gravity"], cfg.gate,
    )


def _initial_state(cfg: RunConfig, ds):
    if cfg["init.mode"] == "truth":
        if ds.truth is None:
            raise ConfigError("init.mode = truth needs ground-truth columns in the dataset")
        return ds.truth.p[0], ds.truth.R[0], ds.truth.v[0]
    return (
        np.array(cfg["init.position"]), lie.so3_exp(np.array(cfg["init.rotation"])), np.array(cfg["init.velocity"]),
    )


def cmd_simulate(args) -> int:
    cfg = _resolve(args)
    legs = _legs(cfg)
    gt, log = simulate(
        cfg.gait(), cfg.noise_params(), cfg.encoder_std, legs, cfg["sim.noise_scale"], cfg["gravity"],
    )
    out = _out_dir(args, cfg)
    write_dataset(out / "dataset.csv", log, gt)
    write_trajectory(out / "truth.csv", gt)
    return 0


def cmd_estimate(args) -> int:
    cfg = _resolve(args)
    legs = _legs(cfg)
    ds = read_dataset(args.dataset)
    p0, R0, v0 = _initial_state(cfg, ds)
    est = run(_odometry(cfg, legs), ds.sensor_log(legs), p0, R0, v0)
    out = _out_dir(args, cfg)
    write_trajectory(out / "estimate.csv", est)
    return 0


def cmd_evaluate(args) -> int:
    cfg = _resolve(args)
    est = read_trajectory(args.estimate)
    gt = read_trajectory(args.truth)
    report = evaluate(Trajectory.of(est), Trajectory.of(gt), cfg["eval.rpe_window"])
    out = _out_dir(args, cfg)
    names, data = report.series_columns()
    write_table(out / "report.csv", names, data)
    write_summary(out / "summary.txt", report.summary())
    return 0


def cmd_converge(args) -> int:
    cfg = _resolve(args)
    legs = _legs(cfg)
    ds = read_dataset(args.dataset)
    if ds.truth is None:
        raise ConfigError("the convergence study needs ground-truth columns in the dataset")
    study = convergence_study(
        ds.sensor_log(legs), ds.truth, legs, cfg.study(), cfg.noise_params(), cfg.encoder_std,
        cfg.prior(), cfg["gravity"], cfg.gate, workers=cfg["converge.workers"],
    )
    out = _out_dir(args, cfg)
    s = cfg.study()
    rows = []
    for tr in study.trials:
        if not tr.failure:
            write_table(
                out / f"trial_{tr.index:03d}.csv", ["t", "roll_err_deg", "pitch_err_deg", "vel_err"],
                np.column_stack([tr.t, tr.roll_err_deg, tr.pitch_err_deg, tr.vel_err]),
            )
        rows.append([tr.index, tr.roll0_deg, tr.pitch0_deg, *tr.v0,
                     tr.settle_time(s.tilt_tol_deg, s.velocity_tol), float(bool(tr.failure))])
    write_table(out / "trials.csv",
                ["trial", "roll0_deg", "pitch0_deg", "vx0", "vy0", "vz0", "settle_time_s", "failed"], np.array(rows))
    write_summary(out / "summary.txt", study.summary())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="floatbase", description="Kinematic-inertial base state estimation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, dataset=False):
        p.add_argument("--config", type=Path, help="key = value configuration file")
        p.add_argument("--model", type=Path, help="leg chain file (default: bundled reference legs)")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", type=Path, required=True, help="output directory")
        if dataset:
            p.add_argument("--dataset", type=Path, required=True)

    p = sub.add_parser("simulate", help="synthesize a walk with sensor log and ground truth")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="run the filter over a sensor log")
    common(p, dataset=True)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("evaluate", help="ATE/RPE of an estimate against ground truth")
    common(p)
    p.add_argument("--estimate", type=Path, required=True)
    p.add_argument("--truth", type=Path, required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("converge", help="randomized initial tilt/velocity study")
    common(p, dataset=True)
    p.add_argument("--trials", type=int)
    p.set_defaults(func=cmd_converge)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DatasetFormatError, ChainFormatError, EvaluationError, InfeasibleGaitError,
            DivergenceError, SingularInnovationError, OSError) as exc:
        print(f"floatbase {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
