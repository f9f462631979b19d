"""Energy-reduction reward, batched rollouts, and the REINFORCE training loop."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .actuation import ActionSet, Actuator
from .dynamics import (ACTION_STREAM, INIT_STREAM, NOISE_STREAM, ModeParams, NoiseConfig,
                       ResonatorState, StreamBank, as_mode_arrays, kick_std,
                       rk4_arrays, sample_initial_state)
from .policy import (PolicyParams, adam_update, argmax_action, forward, init_params,
                     sample_action, weighted_logprob_grad)

log = logging.getLogger(__name__)

# spawn-key tags keep training, evaluation and thermalization streams disjoint
TRAIN_TAG, EVAL_TAG, THERMALIZE_TAG, INIT_PARAMS_TAG = 1, 2, 3, 4


@dataclass
class TrainingConfig:
    modes: list[ModeParams]
    actions: ActionSet
    layer_sizes: tuple[int, ...] = (2, 60, 60, 11)
    batch_size: int = 80
    epochs: int = 400
    steps: int = 4000
    dt: float = 0.05
    eta: float = 8e-5
    reward_scale: float = 1.0
    kappa: float = 10.0
    seed: int = 0
    use_baseline: bool = True

    def __post_init__(self):
        if self.batch_size < 1 or self.steps < 1 or self.epochs < 0:
            raise ValueError("batch_size and steps must be >= 1, epochs >= 0")
        if not (self.dt > 0 and self.eta > 0):
            raise ValueError("dt and eta must be positive")
        if self.layer_sizes[-1] != self.actions.n_actions:
            raise ValueError(f"policy has {self.layer_sizes[-1]} outputs but there are "
                             f"{self.actions.n_actions} actions")
        if self.layer_sizes[0] != 2:
            raise ValueError("the observation (Q, dQ/dt) has two entries")

    def actuator(self) -> Actuator:
        return Actuator(self.actions, as_mode_arrays(self.modes), self.kappa)


@dataclass
class TrajectoryRecord:
    observations: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    total_reward: float
    final_state: ResonatorState
    E0: float
    initial_state: ResonatorState | None = None


@dataclass
class BatchRecord:
    """A batch of rollouts; per-step arrays have shape ``(B, T, ...)``."""

    actions: np.ndarray
    total_reward: np.ndarray
    initial_state: ResonatorState
    final_state: ResonatorState
    E0: np.ndarray
    mean_mode_energy: np.ndarray  # (T + 1, N), batch mean, row 0 is the initial state
    max_energy: np.ndarray  # (B,), largest total energy seen along each trajectory
    observations: np.ndarray | None = None
    rewards: np.ndarray | None = None

    def __len__(self):
        return self.actions.shape[0]

    def trajectory(self, k: int) -> TrajectoryRecord:
        if self.observations is None or self.rewards is None:
            raise ValueError("batch was simulated without per-step records")
        return TrajectoryRecord(
            observations=self.observations[k], actions=self.actions[k], rewards=self.rewards[k],
            total_reward=float(self.total_reward[k]),
            final_state=ResonatorState(self.final_state.q[k], self.final_state.p[k], self.final_state.t),
            E0=float(self.E0[k]),
            initial_state=ResonatorState(self.initial_state.q[k], self.initial_state.p[k], 0.0),
        )


@dataclass
class BaselineState:
    epoch_mean_rewards: list[float] = field(default_factory=list)


def step_reward(E0, E_t, E_next):
    """(E0 - E_next) when the step lowered the energy, else 0."""
    E0, E_t, E_next = np.asarray(E0, float), np.asarray(E_t, float), np.asarray(E_next, float)
    r = np.where(E_next < E_t, E0 - E_next, 0.0)
    return float(r) if r.ndim == 0 else r


def stream_configs(seed: int, n: int, tag: tuple[int, ...], offset: int = 0) -> list[NoiseConfig]:
    return [NoiseConfig(seed, offset + k, tag) for k in range(n)]


def rollout_batch(params: PolicyParams, config: TrainingConfig, streams: Sequence[NoiseConfig],
                  mode: str = "sample", steps: int | None = None, record: bool = True,
                  initial_state: ResonatorState | None = None, policy_fn: Callable | None = None) -> BatchRecord:
    """Simulate one trajectory per stream under the policy.

    Each step: observe, pick an action (sampled or argmax), turn it into
    forces/shifts, take an RK4 step plus a thermal kick, score the step.
    ``policy_fn`` replaces the network by a map from observations ``(B, 2)``
    to action indices ``(B,)``.
    """
    if mode not in ("sample", "argmax"):
        raise ValueError(f"mode must be 'sample' or 'argmax', got {mode!r}")
    steps = config.steps if steps is None else steps
    m = as_mode_arrays(config.modes)
    actuator = config.actuator()
    B, N, dt = len(streams), m.n_modes, config.dt
    if policy_fn is None and params.n_inputs != 2:
        raise ValueError("policy input size does not match the observation size")

    if initial_state is None:
        initial_state = sample_initial_state(m, StreamBank(streams, INIT_STREAM, chunk=2), size=B)
    noise = StreamBank(streams, NOISE_STREAM)
    uniforms = StreamBank(streams, ACTION_STREAM)
    sigma = kick_std(m, dt)

    q, p = initial_state.q.copy(), initial_state.p.copy()
    E_mode = 0.5 * (q * q + p * p)
    E = E_mode.sum(axis=1)
    E0 = E.copy()
    cavity = actuator.initial_cavity(B)

    # int8 keeps 4000 x 20000 evaluation runs in memory
    actions = np.empty((B, steps), dtype=np.int8 if actuator.actions.n_actions <= 127 else np.int64)
    obs_rec = np.empty((B, steps, 2)) if record else None
    rew_rec = np.empty((B, steps)) if record else None
    total = np.zeros(B)
    mean_mode = np.empty((steps + 1, N))
    mean_mode[0] = E_mode.mean(axis=0)
    max_E = E.copy()

    for t in range(steps):
        obs = np.stack([q.sum(axis=1), (m.omega * p).sum(axis=1)], axis=1)
        if policy_fn is not None:
            a = np.asarray(policy_fn(obs))
            uniforms.random((B,))  # keep the action stream in step with network runs
        else:
            probs = forward(params, obs)
            u = uniforms.random((B,))
            a = sample_action(probs, None, uniforms=u) if mode == "sample" else argmax_action(probs)
        forces, shifts, cavity, _ = actuator.apply(a, cavity, dt)
        q, p = rk4_arrays(q, p, m, forces, shifts, dt)
        p = p + sigma * noise.standard_normal((B, N))
        E_mode = 0.5 * (q * q + p * p)
        E_next = E_mode.sum(axis=1)
        if not np.all(np.isfinite(E_next)):
            bad = np.flatnonzero(~np.isfinite(E_next))
            raise FloatingPointError(f"trajectories {bad.tolist()} diverged at step {t}")
        r = np.where(E_next < E, E0 - E_next, 0.0)
        total += r
        actions[:, t] = a
        if record:
            obs_rec[:, t] = obs
            rew_rec[:, t] = r
        mean_mode[t + 1] = E_mode.mean(axis=0)
        np.maximum(max_E, E_next, out=max_E)
        E = E_next

    return BatchRecord(
        actions=actions, total_reward=total, initial_state=initial_state,
        final_state=ResonatorState(q, p, initial_state.t + steps * dt), E0=E0,
        mean_mode_energy=mean_mode, max_energy=max_E, observations=obs_rec, rewards=rew_rec,
    )


def rollout(params: PolicyParams, config: TrainingConfig, noise: NoiseConfig, mode: str = "sample") -> TrajectoryRecord:
    """Single-trajectory rollout; draws the same random numbers as row ``k`` of a batch on that stream."""
    return rollout_batch(params, config, [noise], mode=mode).trajectory(0)


def batch_gradient(batch, params: PolicyParams, baseline: float, reward_scale: float = 1.0) -> np.ndarray:
    """Batch-mean of (R - b) * sum_t grad ln pi(a_t | s_t), flattened.

    ``batch`` is a BatchRecord or a sequence of TrajectoryRecords.
    """
    if isinstance(batch, BatchRecord):
        obs, acts, R = batch.observations, batch.actions, batch.total_reward
        if obs is None:
            raise ValueError("batch was simulated without observations")
    else:
        batch = list(batch)
        if not batch:
            raise ValueError("empty batch")
        obs = np.stack([tr.observations for tr in batch])
        acts = np.stack([tr.actions for tr in batch])
        R = np.array([tr.total_reward for tr in batch])
    if not np.isfinite(baseline):
        raise ValueError("baseline must be finite")
    B, T = acts.shape
    adv = reward_scale * (np.asarray(R, float) - baseline) / B
    weights = np.broadcast_to(adv[:, None], (B, T))
    return weighted_logprob_grad(params, obs.reshape(B * T, -1), acts.reshape(-1), weights.reshape(-1))


def update_baseline(state: BaselineState, epoch_mean_R: float) -> tuple[BaselineState, float]:
    """Baseline for this epoch (mean of earlier epoch means, 0 at first), then record."""
    hist = state.epoch_mean_rewards
    b = float(np.mean(hist)) if hist else 0.0
    return BaselineState(hist + [float(epoch_mean_R)]), b


@dataclass
class LearningCurve:
    epochs: list[int] = field(default_factory=list)
    mean_total_reward: list[float] = field(default_factory=list)
    baseline: list[float] = field(default_factory=list)

    def append(self, epoch: int, mean_R: float, b: float):
        self.epochs.append(epoch)
        self.mean_total_reward.append(mean_R)
        self.baseline.append(b)

    def __len__(self):
        return len(self.epochs)


def policy_gradient_loop(params: PolicyParams, sample_batch: Callable[[PolicyParams, int], object],
                         epochs: int, eta: float, reward_scale: float = 1.0, use_baseline: bool = True,
                         start_epoch: int = 0, baseline: BaselineState | None = None,
                         curve: LearningCurve | None = None, on_epoch: Callable | None = None):
    """Generic epoch loop: one batch of rollouts, one Adam ascent step per epoch.

    ``sample_batch(params, epoch)`` returns a BatchRecord or list of
    TrajectoryRecords. ``on_epoch(epoch, params, baseline, curve)`` runs after
    each update (checkpointing hook).
    """
    baseline = BaselineState() if baseline is None else baseline
    curve = LearningCurve() if curve is None else curve
    for epoch in range(start_epoch, epochs):
        batch = sample_batch(params, epoch)
        R = batch.total_reward if isinstance(batch, BatchRecord) else np.array([t.total_reward for t in batch])
        mean_R = float(np.mean(R))
        baseline, b = update_baseline(baseline, mean_R)
        if not use_baseline:
            b = 0.0
        grad = batch_gradient(batch, params, b, reward_scale)
        params = adam_update(params, grad, eta)
        if not np.all(np.isfinite(params.theta)):
            raise FloatingPointError(f"non-finite policy parameters after epoch {epoch}")
        curve.append(epoch, mean_R, b)
        log.info("epoch %d  mean R %.6g  baseline %.6g", epoch, mean_R, b)
        if on_epoch is not None:
            on_epoch(epoch, params, baseline, curve)
    return params, baseline, curve


def initial_params(config: TrainingConfig) -> PolicyParams:
    rng = NoiseConfig(config.seed, 0, (INIT_PARAMS_TAG,)).generator()
    return init_params(config.layer_sizes, rng)


def train(config: TrainingConfig, params: PolicyParams | None = None, start_epoch: int = 0,
          baseline: BaselineState | None = None, curve: LearningCurve | None = None,
          on_epoch: Callable | None = None):
    """Train a policy; returns (params, learning curve, baseline state).

    Epoch ``e`` uses trajectory streams ``(seed, (TRAIN_TAG, e), k)``, so a run
    resumed from a checkpoint at epoch ``e`` replays exactly.
    """
    params = initial_params(config) if params is None else params

    def sample_batch(p, epoch):
        return rollout_batch(p, config, stream_configs(config.seed, config.batch_size, (TRAIN_TAG, epoch)))

    params, baseline, curve = policy_gradient_loop(
        params, sample_batch, config.epochs, config.eta, config.reward_scale, config.use_baseline,
        start_epoch, baseline, curve, on_epoch)
    return params, curve, baseline
