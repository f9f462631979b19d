"""Quick-look plots of a run directory's CSVs (needs matplotlib, not a package dependency).

    python3 scripts/plot_run.py runs/single_quadratic
"""
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from mechcool.experiments import read_csv  # noqa: E402


def main(root):
    root = Path(root)
    fig, axes = plt.subplots(2, 2, figsize=(10, 8))
    curve = root / "train" / "learning_curve.csv"
    if curve.exists():
        _, _, c = read_csv(curve)
        axes[0, 0].plot(c[:, 0], c[:, 1], label="mean total reward")
        axes[0, 0].plot(c[:, 0], c[:, 2], label="baseline")
        axes[0, 0].set_xlabel("epoch")
        axes[0, 0].legend()
    ev = root / "eval" if (root / "eval").exists() else root
    _, cols, e = read_csv(ev / "energy_vs_time.csv")
    for j in range(1, len(cols)):
        axes[0, 1].plot(e[:, 0], e[:, j], label=cols[j])
    axes[0, 1].set_xlabel("t")
    axes[0, 1].legend()
    for name, colour in (("initial", "tab:orange"), ("final", "tab:blue")):
        _, _, ps = read_csv(ev / f"phase_space_{name}.csv")
        first = ps[ps[:, 1] == 0]
        axes[1, 0].scatter(first[:, 2], first[:, 3], s=2, c=colour, label=name)
        _, _, h = read_csv(ev / f"energy_hist_{name}.csv")
        axes[1, 1].hist(h[:, 1], bins=50, alpha=0.6, color=colour, label=name)
    axes[1, 0].set_xlabel("q (mode 1)")
    axes[1, 0].set_ylabel("p")
    axes[1, 1].set_xlabel("total energy")
    axes[1, 0].legend()
    axes[1, 1].legend()
    fig.tight_layout()
    fig.savefig(root / "overview.png", dpi=120)
    print(root / "overview.png")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "runs/single_quadratic")
