"""Discrete actions, the classical cavity field, and what the policy gets to see."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.constants import hbar

from .dynamics import ResonatorState, as_mode_arrays

REGIMES = ("linear_cavity", "quadratic_cavity", "direct_force", "direct_quadratic")


@dataclass(frozen=True)
class CavityState:
    alpha: float | np.ndarray
    kappa: float
    drive: float | np.ndarray = 0.0

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if not np.all(np.isfinite(self.alpha)):
            raise ValueError("cavity amplitude must be finite")

    @property
    def intensity(self):
        return np.asarray(self.alpha) ** 2


@dataclass(frozen=True)
class ActionSet:
    """Ordered drive levels, ``levels[0] == 0``.

    What a level means depends on ``regime``:

    * ``linear_cavity`` / ``quadratic_cavity``: cavity drive amplitude epsilon,
      filtered through the cavity before it reaches the modes;
    * ``direct_force``: free-space intensity u, forces ``-g_j u``;
    * ``direct_quadratic``: intracavity intensity |alpha|^2 set directly,
      frequency shifts ``2 g_j |alpha|^2``.
    """

    levels: tuple[float, ...]
    regime: str = "direct_force"

    def __post_init__(self):
        levels = tuple(float(x) for x in self.levels)
        object.__setattr__(self, "levels", levels)
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}; expected one of {REGIMES}")
        if not levels or levels[0] != 0.0:
            raise ValueError("levels[0] must be 0 (the idle action)")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError("levels must be strictly increasing")

    @classmethod
    def uniform(cls, max_level: float, regime: str = "direct_force", n_actions: int = 11) -> "ActionSet":
        return cls(tuple(max_level * k / (n_actions - 1) for k in range(n_actions)), regime)

    @property
    def n_actions(self) -> int:
        return len(self.levels)

    @property
    def uses_cavity(self) -> bool:
        return self.regime.endswith("_cavity")

    @property
    def quadratic(self) -> bool:
        return self.regime in ("quadratic_cavity", "direct_quadratic")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.levels)


def action_to_drive(action_index, actions: ActionSet):
    idx = np.asarray(action_index)
    if np.any(idx < 0) or np.any(idx >= actions.n_actions):
        raise IndexError(f"action index {action_index} outside [0, {actions.n_actions})")
    drive = actions.as_array()[idx]
    return float(drive) if drive.ndim == 0 else drive


def cavity_step(cavity: CavityState, drive, dt: float) -> CavityState:
    """Exact solution of d(alpha)/dt = -kappa alpha + drive over one step."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    decay = np.exp(-cavity.kappa * dt)
    alpha = cavity.alpha * decay + (np.asarray(drive) / cavity.kappa) * (1.0 - decay)
    return CavityState(alpha=alpha, kappa=cavity.kappa, drive=drive)


def linear_forces(intensity, modes) -> np.ndarray:
    """One-sided radiation-pressure forces ``-g_j * intensity``.

    A batch of intensities ``(B,)`` yields forces of shape ``(B, N)``.
    """
    g = as_mode_arrays(modes).g
    return -g * np.asarray(intensity, dtype=float)[..., None]


def quadratic_shifts(intensity, modes) -> np.ndarray:
    g = as_mode_arrays(modes).g
    return 2.0 * g * np.asarray(intensity, dtype=float)[..., None]


def observe(state: ResonatorState, modes) -> np.ndarray:
    """Collective position and velocity (sum q_j, sum omega_j p_j).

    For a single mode this is just (q, dq/dt). Output shape is ``(..., 2)``.
    """
    omega = as_mode_arrays(modes).omega
    pos = state.q.sum(axis=-1)
    vel = (omega * state.p).sum(axis=-1)
    return np.stack([pos, vel], axis=-1)


def power_to_drive(P0: float, kappa_L: float, omega_c: float) -> float:
    """Drive amplitude sqrt(2 P0 kappa_L / (hbar omega_c)) in SI units."""
    if P0 < 0 or kappa_L < 0 or omega_c < 0:
        raise ValueError("power, loss rate and cavity frequency must be non-negative")
    return float(np.sqrt(2.0 * P0 * kappa_L / (hbar * omega_c)))


@dataclass(frozen=True)
class Actuator:
    """Turns an action index into per-mode forces and frequency shifts.

    Holds no state; the cavity amplitude (when a cavity is in the loop) is
    threaded through ``apply`` by the caller.
    """

    actions: ActionSet
    modes: Sequence | object
    kappa: float = 10.0

    def initial_cavity(self, batch: int | None = None) -> CavityState | None:
        if not self.actions.uses_cavity:
            return None
        alpha = 0.0 if batch is None else np.zeros(batch)
        return CavityState(alpha=alpha, kappa=self.kappa, drive=alpha)

    def apply(self, action_index, cavity: CavityState | None, dt: float):
        """Return (forces, freq_shifts, cavity, drive) for one step."""
        drive = action_to_drive(action_index, self.actions)
        if self.actions.uses_cavity:
            cavity = cavity_step(cavity, drive, dt)
            intensity = cavity.intensity
        else:
            intensity = drive
        if self.actions.quadratic:
            shifts = quadratic_shifts(intensity, self.modes)
            return np.zeros_like(shifts), shifts, cavity, drive
        forces = linear_forces(intensity, self.modes)
        return forces, np.zeros_like(forces), cavity, drive
