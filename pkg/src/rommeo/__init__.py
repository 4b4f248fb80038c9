"""Maximum-entropy multi-agent RL with regularized opponent models.

Exact tabular soft Q-iteration with closed-form policy / opponent-model
extraction, a sample-based tabular learner, a continuous actor-critic
learner, discrete baselines, and an experiment harness for the two
benchmark games (the climbing matrix game and max-of-two-quadratics).
"""

from . import ac, backend, baselines, games, harness, nets, qlearner, soft_tables

__version__ = "0.1.0"

__all__ = [
    "ac",
    "backend",
    "baselines",
    "games",
    "harness",
    "nets",
    "qlearner",
    "soft_tables",
    "__version__",
]
