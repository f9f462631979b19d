"""Parameter bundles for the thermalization check and the two cooling experiments.

Frequencies and rates are in units of omega_1, times in units of 1/omega_1.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .actuation import ActionSet
from .dynamics import ModeParams
from .reinforce import TrainingConfig

# |alpha|^2 reached when the quadratic drive is fully on
QUADRATIC_MAX_INTENSITY = 0.5e7
# free-space kick strength u at the top action; not fixed by any measurement
DIRECT_FORCE_MAX = 1.0
DEFAULT_KAPPA = 10.0


_FLOAT_FIELDS = {"max_level", "eta", "dt", "reward_scale", "kappa", "thermalize_decay_times"}
_INT_FIELDS = {"n_actions", "batch_size", "epochs", "steps", "seed", "eval_n_traj", "eval_steps",
               "thermalize_n_traj", "checkpoint_every"}


def _number(key, value, kind):
    # YAML 1.1 reads exponents without a sign (5.0e6) as strings
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ValueError(f"{key}: expected a number, got {value!r}") from None
    if kind is int:
        if not x.is_integer():
            raise ValueError(f"{key}: expected an integer, got {value!r}")
        return int(value) if isinstance(value, int) else int(x)
    return x


def _mode_from_dict(d: dict) -> ModeParams:
    allowed = {f.name for f in dataclasses.fields(ModeParams)}
    if not isinstance(d, dict) or not set(d) <= allowed:
        raise ValueError(f"mode entries take keys {sorted(allowed)}, got {d!r}")
    return ModeParams(**{k: _number(f"modes.{k}", v, float) for k, v in d.items()})


@dataclass
class ExperimentPreset:
    name: str
    modes: list[ModeParams]
    regime: str = "direct_force"
    max_level: float = DIRECT_FORCE_MAX
    n_actions: int = 11
    layer_sizes: tuple[int, ...] = (2, 60, 60, 11)
    eta: float = 8e-5
    batch_size: int = 80
    epochs: int = 400
    steps: int = 4000
    dt: float = 0.05
    reward_scale: float = 1.0
    kappa: float = DEFAULT_KAPPA
    seed: int = 0
    eval_n_traj: int = 4000
    eval_steps: int = 20000
    # thermalize only: trajectories start at the origin and run for this many 1/gamma
    thermalize_n_traj: int = 1000
    thermalize_decay_times: float = 3.0
    checkpoint_every: int = 50
    track_trajectories: tuple[int, ...] = field(default=(0, 1))

    def actions(self) -> ActionSet:
        return ActionSet.uniform(self.max_level, self.regime, self.n_actions)

    def training_config(self) -> TrainingConfig:
        return TrainingConfig(
            modes=list(self.modes), actions=self.actions(), layer_sizes=tuple(self.layer_sizes),
            batch_size=self.batch_size, epochs=self.epochs, steps=self.steps, dt=self.dt,
            eta=self.eta, reward_scale=self.reward_scale, kappa=self.kappa, seed=self.seed,
        )

    def replace(self, **overrides) -> "ExperimentPreset":
        """Copy with overrides; ``None`` values are ignored, ``modes`` may be dicts."""
        overrides = {k: v for k, v in overrides.items() if v is not None}
        unknown = set(overrides) - {f.name for f in dataclasses.fields(self)}
        if unknown:
            raise KeyError(f"unknown preset fields: {sorted(unknown)}")
        for key in overrides.keys() & (_FLOAT_FIELDS | _INT_FIELDS):
            overrides[key] = _number(key, overrides[key], float if key in _FLOAT_FIELDS else int)
        if "modes" in overrides:
            overrides["modes"] = [m if isinstance(m, ModeParams) else _mode_from_dict(m) for m in overrides["modes"]]
        for key in ("layer_sizes", "track_trajectories"):
            if key in overrides:
                overrides[key] = tuple(overrides[key])
        return dataclasses.replace(self, **overrides)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["layer_sizes"] = list(self.layer_sizes)
        d["track_trajectories"] = list(self.track_trajectories)
        return d


def thermalize() -> ExperimentPreset:
    return ExperimentPreset(
        name="thermalize",
        modes=[ModeParams(omega=1.0, gamma=4e-5, nbar=100.0)],
    )


def single_quadratic() -> ExperimentPreset:
    # 2 g |alpha|^2 = 0.1 omega with every level on
    return ExperimentPreset(
        name="single_quadratic",
        modes=[ModeParams(omega=1.0, gamma=4e-5, nbar=100.0, g=1e-8)],
        regime="direct_quadratic",
        max_level=QUADRATIC_MAX_INTENSITY,
        layer_sizes=(2, 60, 60, 11),
        eta=0.00008,
    )


def four_linear() -> ExperimentPreset:
    omegas = (1.0, 0.8, 1.2, 0.6)
    gammas = (4e-5, 3e-5, 5e-5, 2e-5)
    couplings = (0.3, 0.2, 0.4, 0.3)
    return ExperimentPreset(
        name="four_linear",
        modes=[ModeParams(omega=w, gamma=gm, nbar=100.0, g=g) for w, gm, g in zip(omegas, gammas, couplings)],
        regime="direct_force",
        max_level=DIRECT_FORCE_MAX,
        layer_sizes=(2, 100, 100, 11),
        eta=0.0006,
    )


PRESETS = {"thermalize": thermalize, "single_quadratic": single_quadratic, "four_linear": four_linear}


def get_preset(name: str) -> ExperimentPreset:
    try:
        return PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def cavity_max_drive(intensity: float, kappa: float = DEFAULT_KAPPA) -> float:
    """Drive amplitude whose steady-state cavity intensity (drive/kappa)^2 equals ``intensity``."""
    return kappa * intensity ** 0.5
