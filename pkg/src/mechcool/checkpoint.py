"""Versioned binary checkpoints; byte layout in docs/checkpoint_format.md."""
from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .policy import PolicyParams, n_params
from .reinforce import BaselineState, LearningCurve

MAGIC = b"MECHCOOL"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<8sIQ")  # magic, version, header length


class CheckpointError(ValueError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


@dataclass
class Checkpoint:
    params: PolicyParams
    epoch: int  # number of completed epochs
    master_seed: int
    baseline: BaselineState = field(default_factory=BaselineState)
    curve: LearningCurve = field(default_factory=LearningCurve)
    preset: str = ""
    config: dict = field(default_factory=dict)

    @property
    def layer_sizes(self):
        return self.params.layer_sizes


def _arrays(ck: Checkpoint):
    return [
        ("theta", ck.params.theta),
        ("adam_m", ck.params.adam_m),
        ("adam_v", ck.params.adam_v),
        ("baseline_history", np.asarray(ck.baseline.epoch_mean_rewards, dtype=float)),
        ("curve_mean_total_reward", np.asarray(ck.curve.mean_total_reward, dtype=float)),
        ("curve_baseline", np.asarray(ck.curve.baseline, dtype=float)),
    ]


def save_checkpoint(path, ck: Checkpoint) -> Path:
    """Write atomically (temp file + rename) so a crash never leaves half a file."""
    path = Path(path)
    arrays = _arrays(ck)
    header = {
        "format_version": FORMAT_VERSION,
        "layer_sizes": list(ck.params.layer_sizes),
        "adam_t": int(ck.params.adam_t),
        "epoch": int(ck.epoch),
        "master_seed": int(ck.master_seed),
        "preset": ck.preset,
        "config": ck.config,
        "curve_epochs": [int(e) for e in ck.curve.epochs],
        "arrays": [[name, int(a.size)] for name, a in arrays],
    }
    hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    tmp = path.with_name(path.name + ".tmp")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(tmp, "wb") as f:
            f.write(_PREFIX.pack(MAGIC, FORMAT_VERSION, len(hbytes)))
            f.write(hbytes)
            for _, a in arrays:
                f.write(np.ascontiguousarray(a, dtype="<f8").tobytes())
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"could not write checkpoint {path}: {exc}") from exc
    return path


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise OSError(f"could not read checkpoint {path}: {exc}") from exc
    if len(raw) < _PREFIX.size:
        raise CheckpointError(f"{path}: file too short to be a checkpoint")
    magic, version, hlen = _PREFIX.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic {magic!r})")
    if version != FORMAT_VERSION:
        raise CheckpointVersionError(f"{path}: format version {version}, this build reads {FORMAT_VERSION}")
    try:
        header = json.loads(raw[_PREFIX.size:_PREFIX.size + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt header") from exc

    pos = _PREFIX.size + hlen
    data = {}
    for name, size in header["arrays"]:
        nbytes = 8 * size
        if pos + nbytes > len(raw):
            raise CheckpointError(f"{path}: truncated while reading {name}")
        data[name] = np.frombuffer(raw, dtype="<f8", count=size, offset=pos).astype(float)
        pos += nbytes
    if pos != len(raw):
        raise CheckpointError(f"{path}: {len(raw) - pos} trailing bytes")

    sizes = tuple(header["layer_sizes"])
    if data["theta"].size != n_params(sizes):
        raise CheckpointError(f"{path}: {data['theta'].size} parameters do not fit layer sizes {sizes}")
    params = PolicyParams(sizes, data["theta"], data["adam_m"], data["adam_v"], header["adam_t"])
    curve = LearningCurve(list(header["curve_epochs"]), data["curve_mean_total_reward"].tolist(),
                          data["curve_baseline"].tolist())
    if not (len(curve.epochs) == len(curve.mean_total_reward) == len(curve.baseline)):
        raise CheckpointError(f"{path}: learning curve columns have different lengths")
    return Checkpoint(
        params=params, epoch=header["epoch"], master_seed=header["master_seed"],
        baseline=BaselineState(data["baseline_history"].tolist()), curve=curve,
        preset=header["preset"], config=header["config"],
    )
