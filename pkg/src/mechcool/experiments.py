"""Experiment runners: thermalization check, training, and policy evaluation.

Every CSV starts with a ``#`` comment line naming the preset and seed,
followed by a column header. Floats are written with ``repr`` precision so
files are byte-identical across reruns with the same seed.
"""
from __future__ import annotations

import csv
import json
import logging
from pathlib import Path

import numpy as np
from scipy import stats

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .dynamics import NOISE_STREAM, ResonatorState, StreamBank, as_mode_arrays, free_evolution
from .presets import ExperimentPreset
from .reinforce import (EVAL_TAG, THERMALIZE_TAG, BaselineState, LearningCurve, initial_params,
                        rollout_batch, stream_configs, train)

log = logging.getLogger(__name__)


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path: Path, columns, rows, preset: ExperimentPreset) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            f.write(f"# preset={preset.name} seed={preset.seed}\n")
            w = csv.writer(f, lineterminator="\n")
            w.writerow(columns)
            for row in rows:
                w.writerow([_fmt(x) for x in row])
    except OSError as exc:
        raise OSError(f"could not write {path}: {exc}") from exc
    return path


def read_csv(path) -> tuple[str, list[str], np.ndarray]:
    """Return (comment line, column names, data as float array)."""
    with open(path) as f:
        comment = f.readline().rstrip("\n")
        columns = f.readline().rstrip("\n").split(",")
        rows = [[float(x) for x in line.split(",")] for line in f if line.strip()]
    return comment, columns, np.array(rows).reshape(len(rows), len(columns))


def write_manifest(path: Path, payload: dict) -> Path:
    path = Path(path)
    try:
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"could not write {path}: {exc}") from exc
    return path


def _phase_space_rows(state: ResonatorState):
    B, N = state.q.shape
    for k in range(B):
        for j in range(N):
            yield k, j, state.q[k, j], state.p[k, j]


def _energy_rows(state: ResonatorState):
    total = 0.5 * (state.q ** 2 + state.p ** 2).sum(axis=1)
    return ((k, e) for k, e in enumerate(total))


def _energy_columns(n_modes):
    cols = ["t", "mean_total_energy"]
    if n_modes > 1:
        cols += [f"mean_energy_mode{j + 1}" for j in range(n_modes)]
    return cols


def _energy_time_rows_for(times, trace):
    if trace.shape[1] == 1:
        return ((t, row[0]) for t, row in zip(times, trace))
    return ((t, row.sum(), *row) for t, row in zip(times, trace))


def run_thermalize(preset: ExperimentPreset, out_dir, steps: int | None = None, n_traj: int | None = None,
                   stride: int | None = None) -> dict:
    """Evolve a cold ensemble (all at the origin) under the bath alone.

    Default duration is ``thermalize_decay_times / gamma`` of the slowest mode.
    """
    out = Path(out_dir)
    m = as_mode_arrays(preset.modes)
    n_traj = preset.thermalize_n_traj if n_traj is None else n_traj
    if steps is None:
        gamma_min = m.gamma[m.gamma > 0].min() if np.any(m.gamma > 0) else 1.0
        steps = int(round(preset.thermalize_decay_times / gamma_min / preset.dt))
    stride = max(1, steps // 2000) if stride is None else stride
    start = ResonatorState(np.zeros((n_traj, m.n_modes)), np.zeros((n_traj, m.n_modes)))
    bank = StreamBank(stream_configs(preset.seed, n_traj, (THERMALIZE_TAG,)), NOISE_STREAM)
    final, times, trace = free_evolution(start, m, preset.dt, steps, bank, stride=stride)

    write_csv(out / "energy_vs_time.csv", _energy_columns(m.n_modes), _energy_time_rows_for(times, trace), preset)
    write_csv(out / "phase_space_initial.csv", ["traj_id", "mode", "q", "p"], _phase_space_rows(start), preset)
    write_csv(out / "phase_space_final.csv", ["traj_id", "mode", "q", "p"], _phase_space_rows(final), preset)
    write_csv(out / "energy_hist_initial.csv", ["traj_id", "total_energy"], _energy_rows(start), preset)
    write_csv(out / "energy_hist_final.csv", ["traj_id", "total_energy"], _energy_rows(final), preset)

    final_E = 0.5 * (final.q ** 2 + final.p ** 2).sum(axis=1)
    summary = {
        "command": "thermalize", "preset": preset.to_dict(), "steps": steps, "n_traj": n_traj,
        "t_final": float(final.t), "final_mean_energy": float(final_E.mean()),
        "expected_mean_energy": float(m.nbar.sum()),
    }
    if m.n_modes == 1 and m.nbar[0] > 0:
        ks = stats.kstest(final_E, "expon", args=(0.0, float(m.nbar[0])))
        summary["ks_statistic"], summary["ks_pvalue"] = float(ks.statistic), float(ks.pvalue)
    write_manifest(out / "manifest.json", summary)
    log.info("thermalize: final mean energy %.3f after %d steps", summary["final_mean_energy"], steps)
    return summary


def _checkpoint(preset: ExperimentPreset, params, epoch, baseline, curve) -> Checkpoint:
    return Checkpoint(params=params, epoch=epoch, master_seed=preset.seed, baseline=baseline,
                      curve=curve, preset=preset.name, config=preset.to_dict())


def write_learning_curve(path, curve: LearningCurve, preset: ExperimentPreset) -> Path:
    rows = zip(curve.epochs, curve.mean_total_reward, curve.baseline)
    return write_csv(path, ["epoch", "mean_total_reward", "baseline"], rows, preset)


def run_training(preset: ExperimentPreset, out_dir, resume: str | Path | None = None) -> Checkpoint:
    """Train, checkpointing every ``checkpoint_every`` epochs and at the end.

    Writes ``checkpoint_epoch<k>.ckpt`` snapshots, ``checkpoint.ckpt`` (latest),
    ``learning_curve.csv`` and ``manifest.json``. On a numerical blow-up the
    last good checkpoint stays on disk and the error propagates.
    """
    out = Path(out_dir)
    config = preset.training_config()
    if resume is not None:
        ck = load_checkpoint(resume)
        if ck.layer_sizes != tuple(config.layer_sizes):
            raise ValueError(f"checkpoint layers {ck.layer_sizes} do not match preset {config.layer_sizes}")
        if ck.master_seed != preset.seed:
            raise ValueError(f"checkpoint seed {ck.master_seed} differs from requested seed {preset.seed}")
        params, start, baseline, curve = ck.params, ck.epoch, ck.baseline, ck.curve
    else:
        params, start, baseline, curve = initial_params(config), 0, BaselineState(), LearningCurve()

    last = out / "checkpoint.ckpt"
    if resume is None or Path(resume).resolve() != last.resolve():
        save_checkpoint(last, _checkpoint(preset, params, start, baseline, curve))

    def on_epoch(epoch, p, b, c):
        done = epoch + 1
        if preset.checkpoint_every and done % preset.checkpoint_every == 0:
            ck = _checkpoint(preset, p, done, b, c)
            save_checkpoint(out / f"checkpoint_epoch{done}.ckpt", ck)
            save_checkpoint(last, ck)
            write_learning_curve(out / "learning_curve.csv", c, preset)

    params, curve, baseline = train(config, params=params, start_epoch=start, baseline=baseline,
                                    curve=curve, on_epoch=on_epoch)
    final = _checkpoint(preset, params, max(config.epochs, start), baseline, curve)
    save_checkpoint(last, final)
    write_learning_curve(out / "learning_curve.csv", curve, preset)
    write_manifest(out / "manifest.json", {
        "command": "train", "preset": preset.to_dict(), "epochs_completed": final.epoch,
        "resumed_from": str(resume) if resume is not None else None,
        "final_mean_total_reward": curve.mean_total_reward[-1] if len(curve) else None,
    })
    return final


def run_evaluation(checkpoint: Checkpoint | str | Path, preset: ExperimentPreset, out_dir,
                   n_traj: int | None = None, steps: int | None = None, mode: str = "argmax",
                   chunk: int = 1000) -> dict:
    """Run the policy on fresh thermal initial conditions and write the plotting CSVs.

    Trajectories are simulated in chunks of ``chunk``; each keeps its own
    random stream, so per-trajectory outputs do not depend on the chunk size.
    """
    ck = load_checkpoint(checkpoint) if not isinstance(checkpoint, Checkpoint) else checkpoint
    config = preset.training_config()
    if ck.layer_sizes != tuple(config.layer_sizes):
        raise ValueError(f"checkpoint layers {ck.layer_sizes} do not match preset {config.layer_sizes}")
    n_traj = preset.eval_n_traj if n_traj is None else n_traj
    steps = preset.eval_steps if steps is None else steps
    out = Path(out_dir)
    m = as_mode_arrays(preset.modes)
    streams = stream_configs(preset.seed, n_traj, (EVAL_TAG,))

    q0, p0, q1, p1, max_E, tracked = [], [], [], [], [], {}
    mode_energy_sum = np.zeros((steps + 1, m.n_modes))
    for start in range(0, n_traj, chunk):
        part = rollout_batch(ck.params, config, streams[start:start + chunk], mode=mode, steps=steps, record=False)
        q0.append(part.initial_state.q), p0.append(part.initial_state.p)
        q1.append(part.final_state.q), p1.append(part.final_state.p)
        max_E.append(part.max_energy)
        mode_energy_sum += part.mean_mode_energy * len(part)
        for k in preset.track_trajectories:
            if start <= k < start + len(part):
                tracked[k] = part.actions[k - start].copy()

    initial = ResonatorState(np.concatenate(q0), np.concatenate(p0))
    final = ResonatorState(np.concatenate(q1), np.concatenate(p1), steps * config.dt)
    trace = mode_energy_sum / n_traj
    times = config.dt * np.arange(steps + 1)
    write_csv(out / "energy_vs_time.csv", _energy_columns(m.n_modes), _energy_time_rows_for(times, trace), preset)
    write_csv(out / "phase_space_initial.csv", ["traj_id", "mode", "q", "p"], _phase_space_rows(initial), preset)
    write_csv(out / "phase_space_final.csv", ["traj_id", "mode", "q", "p"], _phase_space_rows(final), preset)
    write_csv(out / "energy_hist_initial.csv", ["traj_id", "total_energy"], _energy_rows(initial), preset)
    write_csv(out / "energy_hist_final.csv", ["traj_id", "total_energy"], _energy_rows(final), preset)
    levels = config.actions.as_array()
    for k, acts in sorted(tracked.items()):
        rows = ((t * config.dt, int(a), levels[a]) for t, a in enumerate(acts))
        write_csv(out / f"actions_traj{k}.csv", ["t", "action_index", "drive"], rows, preset)

    E_init = 0.5 * (initial.q ** 2 + initial.p ** 2)
    E_final = 0.5 * (final.q ** 2 + final.p ** 2)
    max_E = np.concatenate(max_E)
    summary = {
        "command": "evaluate", "preset": preset.to_dict(), "checkpoint_epoch": ck.epoch, "mode": mode,
        "n_traj": n_traj, "steps": steps,
        "initial_mean_energy": float(E_init.sum(axis=1).mean()),
        "final_mean_energy": float(E_final.sum(axis=1).mean()),
        "initial_mean_mode_energy": E_init.mean(axis=0).tolist(),
        "final_mean_mode_energy": E_final.mean(axis=0).tolist(),
        "initial_max_energy": float(E_init.sum(axis=1).max()),
        "max_energy_along_trajectories": float(max_E.max()),
        "n_diverging": int((max_E > 2.0 * E_init.sum(axis=1).max()).sum()),
    }
    write_manifest(out / "manifest.json", summary)
    return summary
