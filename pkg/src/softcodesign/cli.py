"""Command-line experiment runner.

Subcommands::

    match-material   fit K=2 material scores to a torus/cross label grid
    sample-shapes    Chamfer/MDS expressiveness analysis of a morph encoder
    optimize         CMA-ES co-design on the swim or jump task
    replay           re-simulate a design saved by ``optimize``

Exit codes: 0 success, 2 usage error, 3 config error, 4 runtime error.
Outputs are only written after the arguments and config validate.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import artifacts
from .analysis import BasisMorpher, NeuralMorpher, classical_mds, novelty_scores, sample_design_distances
from .cmaes import OptimizationSchedule, run_schedule
from .config import config_hash, load_config
from .exceptions import ConfigError, EmptyDesignError, InvalidArgumentError, SimulationDivergedError
from .objectives import LossWeights, trajectory_metrics
from .simulators import simulate
from .tasks import (
    MatchingProblem,
    TaskObjective,
    cross_target,
    default_sim_config,
    make_encoder,
    morphology_and_actuation_masks,
    torus_target,
)

log = logging.getLogger("softcodesign")

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3, 4

TASK_ENCODERS = {"jump": ("basis", "voxel"), "swim": ("basis", "neural")}


class UsageError(Exception):
    pass


def _u64(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON experiment config")
    common.add_argument("--seed", type=_u64, help="overrides optimizer.seed")
    common.add_argument("--workers", type=_positive, default=os.cpu_count() or 1,
                        help="parallel candidate evaluations (default: all cores)")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="softcodesign", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("match-material", parents=[common], help="material distribution matching")
    m.add_argument("--target", choices=("torus", "cross"))
    m.add_argument("--rbf-per-axis", type=_positive, help="RBFs per axis (N_phi = n^2)")

    s = sub.add_parser("sample-shapes", parents=[common], help="intrinsic dimensionality and novelty")
    s.add_argument("--encoder", choices=("basis", "neural"))
    s.add_argument("--rbf-per-axis", type=_positive)
    s.add_argument("--layers", type=_positive, nargs="+", help="neural layer sizes, e.g. 3 6 12 6 3")
    s.add_argument("--n-samples", type=_positive)
    s.add_argument("--cloud-size", type=_positive)

    o = sub.add_parser("optimize", parents=[common], help="co-design with CMA-ES")
    o.add_argument("--task", required=True, choices=tuple(TASK_ENCODERS))
    o.add_argument("--encoder", default="basis", choices=("basis", "neural", "voxel"))
    o.add_argument("--schedule", choices=("joint", "sequential"))

    r = sub.add_parser("replay", parents=[common], help="re-simulate a saved design")
    r.add_argument("--design", type=Path, required=True, help="best_design.json written by optimize")
    return p


# ------------------------------------------------------------------ commands


def _finish(out: Path, command: str, cfg: dict, seed: int, files, extra=None):
    manifest = artifacts.write_manifest(
        out / "manifest.json", command=command, config_hash=config_hash(cfg), seed=seed,
        artifacts=files, extra=extra,
    )
    log.info("wrote %s", manifest)


def cmd_match_material(args, cfg) -> dict:
    mc = cfg["matching"]
    n = mc["grid"]
    if mc["target"] == "torus":
        target = torus_target(n, *mc["torus_radii"])
    else:
        target = cross_target(n, mc["cross_arm_width"], mc["cross_margin"])
    prob = MatchingProblem(target, mc["rbf_per_axis"], tau=mc["tau"], grid=n)
    oc = cfg["optimizer"]
    res = run_schedule(prob, prob.n_params, OptimizationSchedule.joint(oc["generations"]), oc["seed"],
                       sigma0=oc["sigma0"], lam=oc["lambda"], workers=args.workers)
    mismatch = prob.mismatch(res.best_x)
    args.out.mkdir(parents=True, exist_ok=True)
    files = [
        artifacts.write_loss_csv(args.out / "loss.csv", res.history),
        artifacts.write_pgm(args.out / "labels.pgm", prob.labels(res.best_x), (n, n)),
    ]
    summary = {"target": mc["target"], "n_phi": mc["rbf_per_axis"] ** 2, "best_loss": res.best_f,
               "mismatch_fraction": mismatch}
    (args.out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    files.append(args.out / "summary.json")
    _finish(args.out, "match-material", cfg, oc["seed"], files)
    print(f"mismatch_fraction={mismatch!r}")
    return summary


def _morpher(ac):
    if ac["encoder"] == "basis":
        return BasisMorpher((ac["rbf_per_axis"],) * 3, gamma=ac["gamma"])
    return NeuralMorpher(tuple(ac["layers"]), gamma=ac["gamma"] if ac["gamma"] is not None else 0.3)


def cmd_sample_shapes(args, cfg) -> dict:
    ac = cfg["analysis"]
    seed = cfg["optimizer"]["seed"]
    D = sample_design_distances(_morpher(ac), ac["n_samples"], ac["cloud_size"], seed)
    mds = classical_mds(D)
    nu = novelty_scores(D)
    args.out.mkdir(parents=True, exist_ok=True)
    files = [
        artifacts.write_eigenvalue_csv(args.out / "eigenvalues.csv", mds.eigenvalues, mds.cumulative),
        artifacts.write_novelty_csv(args.out / "novelty.csv", nu),
    ]
    summary = {"d95": mds.d95, "novelty_median": float(np.median(nu)), "n_samples": ac["n_samples"]}
    (args.out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    files.append(args.out / "summary.json")
    _finish(args.out, "sample-shapes", cfg, seed, files)
    print(f"d95={mds.d95}")
    return summary


def _task_setup(task, encoder, cfg):
    ec = cfg["encoder"]
    enc = make_encoder(task, encoder, rbf_dims=ec["rbf_dims"], mlp_hidden=ec["mlp_hidden"], gamma=ec["gamma"])
    weights = LossWeights(tuple(cfg["loss"]["alpha"]), tuple(cfg["loss"]["beta"]))
    obj = TaskObjective(task, enc, default_sim_config(task, **cfg["simulator"]), weights)
    return enc, obj


def _metrics_dict(m):
    return {k: getattr(m, k) for k in ("disp", "drift", "rot", "jump", "muscle_frac")}


def cmd_optimize(args, cfg) -> dict:
    oc = cfg["optimizer"]
    enc, obj = _task_setup(args.task, args.encoder, cfg)
    if oc["schedule"] == "joint":
        schedule = OptimizationSchedule.joint(oc["generations"])
    else:
        morph, act = morphology_and_actuation_masks(enc)
        schedule = OptimizationSchedule.sequential(morph, act, oc["sequential_budgets"])
    res = run_schedule(obj, enc.n_params_, schedule, oc["seed"], sigma0=oc["sigma0"], lam=oc["lambda"],
                       workers=args.workers)
    design, traj = obj.rollout(res.best_x)
    metrics = trajectory_metrics(traj, design)
    args.out.mkdir(parents=True, exist_ok=True)
    best = {
        "task": args.task,
        "encoder": args.encoder,
        "schedule": oc["schedule"],
        "best_loss": res.best_f,
        "evaluations": res.evaluations,
        "metrics": _metrics_dict(metrics),
        "design_vector": [float(v) for v in res.best_x],
        "config": cfg,
    }
    best_path = args.out / "best_design.json"
    best_path.write_text(json.dumps(best, indent=2, sort_keys=True) + "\n")
    files = [
        artifacts.write_loss_csv(args.out / "loss.csv", res.history),
        best_path,
        artifacts.write_trajectory_csv(args.out / "trajectory.csv", traj),
    ]
    _finish(args.out, "optimize", cfg, oc["seed"], files)
    print(f"best_loss={res.best_f!r}")
    return best


def cmd_replay(args, cfg_unused) -> dict:
    try:
        saved = json.loads(args.design.read_text())
        task, encoder, cfg = saved["task"], saved["encoder"], saved["config"]
        c = np.asarray(saved["design_vector"], dtype=float)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read design file {args.design}: {exc}", key="<design>") from exc
    cfg = load_config(overrides=cfg)
    enc, obj = _task_setup(task, encoder, cfg)
    if c.size != enc.n_params_:
        raise ConfigError(f"design has {c.size} values, encoder expects {enc.n_params_}", key="design_vector")
    design = enc.decode(c)
    traj = simulate(task, design, obj.sim_config)
    m = trajectory_metrics(traj, design)
    loss = obj(c)
    args.out.mkdir(parents=True, exist_ok=True)
    summary = {"task": task, "encoder": encoder, "loss": loss, "metrics": _metrics_dict(m)}
    (args.out / "replay.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    files = [artifacts.write_trajectory_csv(args.out / "trajectory.csv", traj), args.out / "replay.json"]
    _finish(args.out, "replay", cfg, cfg["optimizer"]["seed"], files)
    print(f"loss={loss!r}")
    return summary


COMMANDS = {
    "match-material": cmd_match_material,
    "sample-shapes": cmd_sample_shapes,
    "optimize": cmd_optimize,
    "replay": cmd_replay,
}


def _overrides(args) -> dict:
    ov: dict = {}
    if args.seed is not None:
        ov.setdefault("optimizer", {})["seed"] = args.seed
    if args.command == "match-material":
        if args.target:
            ov.setdefault("matching", {})["target"] = args.target
        if args.rbf_per_axis:
            ov.setdefault("matching", {})["rbf_per_axis"] = args.rbf_per_axis
    elif args.command == "sample-shapes":
        a = ov.setdefault("analysis", {})
        for key in ("encoder", "rbf_per_axis", "layers", "n_samples", "cloud_size"):
            v = getattr(args, key)
            if v is not None:
                a[key] = list(v) if key == "layers" else v
    elif args.command == "optimize" and args.schedule:
        ov.setdefault("optimizer", {})["schedule"] = args.schedule
    return ov


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "optimize" and args.encoder not in TASK_ENCODERS[args.task]:
        print(f"error: the {args.task} task supports encoders {TASK_ENCODERS[args.task]}", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config, _overrides(args))
        COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SimulationDivergedError, EmptyDesignError, InvalidArgumentError, RuntimeError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
