"""Train a cooling policy on a preset, then evaluate it with argmax actions.

Desk-scale defaults; pass --epochs 400 --n-traj 4000 for the full-size run.

    python3 scripts/cooling.py single_quadratic --epochs 150 --out runs/single
    python3 scripts/cooling.py four_linear --epochs 100 --out runs/four
"""
import argparse
import json
import logging
from pathlib import Path

from mechcool.experiments import run_evaluation, run_training
from mechcool.presets import get_preset


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("preset", choices=["single_quadratic", "four_linear"])
    ap.add_argument("--out", type=Path, default=None)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--epochs", type=int, default=150)
    ap.add_argument("--n-traj", type=int, default=500)
    ap.add_argument("--eval-steps", type=int, default=20000)
    ap.add_argument("--resume", type=Path, help="checkpoint to continue from")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    out = args.out or Path("runs") / args.preset
    preset = get_preset(args.preset).replace(seed=args.seed, epochs=args.epochs)
    ck = run_training(preset, out / "train", resume=args.resume)
    summary = run_evaluation(ck, preset, out / "eval", n_traj=args.n_traj, steps=args.eval_steps)
    summary.pop("preset")
    print(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
