"""Command-line entry point: ``mechcool {thermalize,train,evaluate,inspect-checkpoint}``.

Settings come from the named preset, then the optional YAML ``--config``
file, then command-line flags (last one wins). A config file looks like::

    preset: four_linear
    seed: 7
    training: {epochs: 100, batch_size: 80, steps: 4000}
    evaluation: {n_traj: 500, steps: 20000}
    modes:
      - {omega: 1.0, gamma: 4.0e-5, nbar: 100, g: 0.3}
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from .checkpoint import load_checkpoint
from .experiments import run_evaluation, run_thermalize, run_training
from .presets import PRESETS, ExperimentPreset, get_preset

# nested config sections map onto flat preset fields
_SECTIONS = {
    "training": {"epochs": "epochs", "batch_size": "batch_size", "steps": "steps", "eta": "eta",
                 "dt": "dt", "reward_scale": "reward_scale", "checkpoint_every": "checkpoint_every"},
    "evaluation": {"n_traj": "eval_n_traj", "steps": "eval_steps", "track": "track_trajectories"},
    "thermalize": {"n_traj": "thermalize_n_traj", "decay_times": "thermalize_decay_times"},
    "network": {"layer_sizes": "layer_sizes"},
    "actions": {"regime": "regime", "max_level": "max_level", "n_actions": "n_actions", "kappa": "kappa"},
}


def load_config(path) -> dict:
    try:
        with open(path) as f:
            raw = yaml.safe_load(f) or {}
    except OSError as exc:
        raise OSError(f"could not read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: top level must be a mapping")
    flat = {}
    for key, value in raw.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ValueError(f"{path}: section {key!r} must be a mapping")
            for sub, v in value.items():
                if sub not in _SECTIONS[key]:
                    raise KeyError(f"{path}: unknown key {key}.{sub}")
                flat[_SECTIONS[key][sub]] = v
        else:
            flat[key] = value
    return flat


def resolve_preset(args, default: str) -> ExperimentPreset:
    file_cfg = load_config(args.config) if args.config else {}
    name = args.preset or file_cfg.pop("preset", None) or default
    file_cfg.pop("preset", None)
    preset = get_preset(name).replace(**file_cfg)
    return preset.replace(seed=args.seed, epochs=args.epochs, batch_size=args.batch, steps=args.steps)


def _common(p: argparse.ArgumentParser):
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--config", type=Path, help="YAML config file")
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int, help="trajectories per training epoch")
    p.add_argument("--steps", type=int, help="time steps per trajectory")
    p.add_argument("--out", type=Path, default=Path("runs"))
    p.add_argument("--checkpoint", type=Path)
    p.add_argument("--n-traj", type=int)
    p.add_argument("--mode", choices=("sample", "argmax"), default="argmax")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mechcool", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("thermalize", "free thermalization of a cold ensemble"),
                        ("train", "train a cooling policy (--checkpoint resumes)"),
                        ("evaluate", "run a trained policy on fresh thermal states"),
                        ("inspect-checkpoint", "print a checkpoint summary as JSON")):
        _common(sub.add_parser(name, help=help_))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    try:
        if args.command == "thermalize":
            preset = resolve_preset(args, "thermalize")
            summary = run_thermalize(preset, args.out, steps=args.steps, n_traj=args.n_traj)
            print(json.dumps({k: v for k, v in summary.items() if k != "preset"}, indent=2))
        elif args.command == "train":
            preset = resolve_preset(args, "single_quadratic")
            ck = run_training(preset, args.out, resume=args.checkpoint)
            curve = ck.curve.mean_total_reward
            print(f"trained {ck.epoch} epochs; final mean reward "
                  f"{curve[-1] if curve else float('nan'):.6g}; checkpoint in {args.out / 'checkpoint.ckpt'}")
        elif args.command == "evaluate":
            if args.checkpoint is None:
                print("error: evaluate needs --checkpoint", file=sys.stderr)
                return 2
            ck = load_checkpoint(args.checkpoint)
            preset = resolve_preset(args, ck.preset or "single_quadratic")
            # --steps sets the evaluation horizon here, not the training one
            preset = preset.replace(steps=get_preset(preset.name).steps)
            summary = run_evaluation(ck, preset, args.out, n_traj=args.n_traj, steps=args.steps, mode=args.mode)
            print(json.dumps({k: v for k, v in summary.items() if k != "preset"}, indent=2))
        else:
            if args.checkpoint is None:
                print("error: inspect-checkpoint needs --checkpoint", file=sys.stderr)
                return 2
            ck = load_checkpoint(args.checkpoint)
            print(json.dumps({
                "preset": ck.preset, "epoch": ck.epoch, "master_seed": ck.master_seed,
                "layer_sizes": list(ck.layer_sizes), "n_params": int(ck.params.theta.size),
                "adam_t": ck.params.adam_t, "baseline_history_len": len(ck.baseline.epoch_mean_rewards),
                "last_mean_total_reward": ck.curve.mean_total_reward[-1] if len(ck.curve) else None,
            }, indent=2))
    except (OSError, ValueError, KeyError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
