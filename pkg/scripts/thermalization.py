"""Free thermalization of a cold single mode, default 1000 trajectories for 3/gamma.

    python3 scripts/thermalization.py --out runs/thermalize
"""
import argparse
import json

from mechcool.experiments import run_thermalize
from mechcool.presets import get_preset


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/thermalize")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--n-traj", type=int, default=1000)
    ap.add_argument("--nbar", type=float, default=100.0)
    ap.add_argument("--gamma", type=float, default=4e-5)
    args = ap.parse_args()
    preset = get_preset("thermalize").replace(
        seed=args.seed, modes=[{"omega": 1.0, "gamma": args.gamma, "nbar": args.nbar}])
    summary = run_thermalize(preset, args.out, n_traj=args.n_traj)
    summary.pop("preset")
    print(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
