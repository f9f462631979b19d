"""Stochastic equations of motion for independent mechanical modes.

Quadratures are dimensionless and time is measured in units of 1/omega_1.
Arrays carry the mode index last, so every function here also accepts a
leading batch axis: ``q`` and ``p`` of shape ``(N,)`` or ``(B, N)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ModeParams:
    omega: float
    gamma: float
    nbar: float
    g: float = 0.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if self.nbar < 0:
            raise ValueError(f"nbar must be non-negative, got {self.nbar}")


@dataclass(frozen=True)
class ModeArrays:
    """Column view of a mode list, built once per rollout."""

    omega: np.ndarray
    gamma: np.ndarray
    nbar: np.ndarray
    g: np.ndarray

    @property
    def n_modes(self) -> int:
        return self.omega.shape[0]


def as_mode_arrays(modes: Sequence[ModeParams] | ModeArrays) -> ModeArrays:
    if isinstance(modes, ModeArrays):
        return modes
    modes = list(modes)
    if not modes:
        raise ValueError("at least one mode is required")
    return ModeArrays(
        omega=np.array([m.omega for m in modes], dtype=float),
        gamma=np.array([m.gamma for m in modes], dtype=float),
        nbar=np.array([m.nbar for m in modes], dtype=float),
        g=np.array([m.g for m in modes], dtype=float),
    )


@dataclass(frozen=True)
class ResonatorState:
    q: np.ndarray
    p: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        p = np.asarray(self.p, dtype=float)
        if q.shape != p.shape:
            raise ValueError(f"q and p shapes differ: {q.shape} vs {p.shape}")
        if q.ndim == 0 or q.shape[-1] < 1:
            raise ValueError("state needs at least one mode")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def n_modes(self) -> int:
        return self.q.shape[-1]


@dataclass(frozen=True)
class NoiseConfig:
    """Identifies one random stream: a master seed and a trajectory index."""

    seed: int
    stream_id: int = 0
    tag: tuple[int, ...] = field(default=())

    def generator(self, purpose: int = 0) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(*self.tag, self.stream_id, purpose))
        return np.random.Generator(np.random.PCG64(ss))


# purposes of the per-trajectory child streams
INIT_STREAM, NOISE_STREAM, ACTION_STREAM = 0, 1, 2


class StreamBank:
    """One independent PCG64 stream per trajectory, drawn in row-stacked chunks.

    Acts like a ``Generator`` whose ``size`` is ``(B, ...)``: row ``k`` always
    comes from stream ``k``, so a trajectory sees the same numbers whatever
    batch it is simulated in.
    """

    def __init__(self, configs: Sequence[NoiseConfig], purpose: int, chunk: int = 512):
        self.gens = [c.generator(purpose) for c in configs]
        self.chunk = chunk
        self._buf: dict[tuple[str, tuple[int, ...]], tuple[np.ndarray, int]] = {}

    def __len__(self):
        return len(self.gens)

    def _draw(self, kind: str, size):
        size = tuple(np.atleast_1d(size))
        if size[0] != len(self.gens):
            raise ValueError(f"leading size {size[0]} != number of streams {len(self.gens)}")
        inner = size[1:]
        key = (kind, inner)
        buf, pos = self._buf.get(key, (None, self.chunk))
        if pos >= self.chunk:
            draw = (lambda g: g.standard_normal((self.chunk, *inner))) if kind == "normal" \
                else (lambda g: g.random((self.chunk, *inner)))
            buf = np.stack([draw(g) for g in self.gens], axis=1)
            pos = 0
        self._buf[key] = (buf, pos + 1)
        return buf[pos]

    def standard_normal(self, size):
        return self._draw("normal", size)

    def random(self, size):
        return self._draw("uniform", size)


def sample_initial_state(modes, rng, size: int | None = None) -> ResonatorState:
    """Draw thermal initial conditions from the classical Boltzmann law.

    Per mode the occupation-number energy is ``-nbar * ln(1 - b)`` with ``b``
    uniform on [0, 1) and the phase angle is uniform. ``size`` adds a batch axis.
    """
    m = as_mode_arrays(modes)
    shape = (m.n_modes,) if size is None else (size, m.n_modes)
    b = rng.random(shape)
    phi = rng.random(shape)
    return initial_state_from_uniforms(m, b, phi)


def initial_state_from_uniforms(modes, b, phi) -> ResonatorState:
    m = as_mode_arrays(modes)
    e = -m.nbar * np.log1p(-np.asarray(b, dtype=float))
    amp = np.sqrt(2.0 * e)
    angle = 2.0 * np.pi * np.asarray(phi, dtype=float)
    return ResonatorState(q=amp * np.cos(angle), p=amp * np.sin(angle), t=0.0)


def energy(state: ResonatorState) -> tuple[np.ndarray, np.ndarray]:
    """Per-mode energies (q^2 + p^2)/2 and their sum over modes."""
    per_mode = 0.5 * (state.q ** 2 + state.p ** 2)
    return per_mode, per_mode.sum(axis=-1)


def _check_lengths(q, m: ModeArrays, forces, freq_shifts):
    n = q.shape[-1]
    if m.n_modes != n:
        raise ValueError(f"state has {n} modes but {m.n_modes} mode parameters were given")
    for name, arr in (("forces", forces), ("freq_shifts", freq_shifts)):
        if np.ndim(arr) and np.shape(arr)[-1] != n:
            raise ValueError(f"{name} has length {np.shape(arr)[-1]}, expected {n}")


def _drift(q, p, m: ModeArrays, forces, freq_shifts):
    dq = m.omega * p
    dp = -(m.omega + freq_shifts) * q - m.gamma * p + forces
    return dq, dp


def deterministic_drift(state: ResonatorState, modes, forces=0.0, freq_shifts=0.0):
    """Time derivative (dq/dt, dp/dt) without the thermal force."""
    m = as_mode_arrays(modes)
    _check_lengths(state.q, m, forces, freq_shifts)
    return _drift(state.q, state.p, m, np.asarray(forces, float), np.asarray(freq_shifts, float))


def rk4_arrays(q, p, m: ModeArrays, forces, freq_shifts, dt: float):
    # forces and shifts are held fixed over the four stages
    k1q, k1p = _drift(q, p, m, forces, freq_shifts)
    h = 0.5 * dt
    k2q, k2p = _drift(q + h * k1q, p + h * k1p, m, forces, freq_shifts)
    k3q, k3p = _drift(q + h * k2q, p + h * k2p, m, forces, freq_shifts)
    k4q, k4p = _drift(q + dt * k3q, p + dt * k3p, m, forces, freq_shifts)
    c = dt / 6.0
    q_new = q + c * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
    p_new = p + c * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
    return q_new, p_new


def rk4_step(state: ResonatorState, modes, forces=0.0, freq_shifts=0.0, dt: float = 0.05) -> ResonatorState:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    m = as_mode_arrays(modes)
    _check_lengths(state.q, m, forces, freq_shifts)
    q, p = rk4_arrays(state.q, state.p, m, np.asarray(forces, float), np.asarray(freq_shifts, float), dt)
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
        raise FloatingPointError(f"non-finite state after RK4 step at t={state.t + dt}")
    return ResonatorState(q=q, p=p, t=state.t + dt)


def kick_std(modes, dt: float) -> np.ndarray:
    """Standard deviation of the per-step momentum kick, sqrt((2 nbar + 1) gamma dt)."""
    m = as_mode_arrays(modes)
    return np.sqrt((2.0 * m.nbar + 1.0) * m.gamma * dt)


def thermal_kick(state: ResonatorState, modes, dt: float, rng) -> ResonatorState:
    """Add one Euler-Maruyama Wiener increment of the thermal bath to p."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    sigma = kick_std(modes, dt)
    p = state.p + sigma * rng.standard_normal(state.p.shape)
    return ResonatorState(q=state.q, p=p, t=state.t)


def evolve_step(state: ResonatorState, modes, forces, freq_shifts, dt: float, rng) -> ResonatorState:
    """Noise-free RK4 drift step followed by a thermal kick."""
    m = as_mode_arrays(modes)
    return thermal_kick(rk4_step(state, m, forces, freq_shifts, dt), m, dt, rng)


class ZeroNoise:
    """Stand-in RNG that returns zeros; switches the bath off."""

    def standard_normal(self, size):
        return np.zeros(size)


def free_evolution(state: ResonatorState, modes, dt: float, steps: int, rng, stride: int = 1):
    """Evolve a batch under the bath alone (no drive).

    Returns ``(final_state, times, mean_mode_energy)`` where the energy trace is
    the batch mean per mode, sampled every ``stride`` steps including t=0.
    """
    m = as_mode_arrays(modes)
    q, p = state.q.copy(), state.p.copy()
    sigma = kick_std(m, dt)
    zero = np.zeros(m.n_modes)
    # undriven RK4 is linear: read its per-mode 2x2 transfer matrix off the unit vectors
    one = np.ones(m.n_modes)
    mqq, mpq = rk4_arrays(one, zero, m, zero, zero, dt)
    mqp, mpp = rk4_arrays(zero, one, m, zero, zero, dt)
    n_rec = steps // stride + 1
    trace = np.empty((n_rec, m.n_modes))
    times = state.t + dt * stride * np.arange(n_rec)
    trace[0] = (0.5 * (q * q + p * p)).reshape(-1, m.n_modes).mean(axis=0)
    for t in range(1, steps + 1):
        q, p = mqq * q + mqp * p, mpq * q + mpp * p + sigma * rng.standard_normal(p.shape)
        if t % stride == 0:
            trace[t // stride] = (0.5 * (q * q + p * p)).reshape(-1, m.n_modes).mean(axis=0)
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
        raise FloatingPointError("free evolution produced non-finite values")
    return ResonatorState(q, p, state.t + steps * dt), times, trace
