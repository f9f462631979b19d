"""Reinforcement-learned feedback cooling of classical mechanical resonator modes."""
from .actuation import ActionSet, CavityState, observe
from .dynamics import ModeParams, NoiseConfig, ResonatorState, energy, evolve_step, sample_initial_state
from .policy import PolicyParams, forward, init_params
from .presets import get_preset
from .reinforce import TrainingConfig, train

__version__ = "0.1.0"
