"""Spatial-reuse bandits for dense Wi-Fi.

Per-AP bandit agents pick a transmit power and CCA threshold each step of an
analytical multi-BSS environment. Modules, bottom up: ``topology``, ``radio``
(worst-case capacity surface), ``macsim`` (the environment), ``bandits`` (stateless
agents), ``sau`` (the neural contextual agent), ``transfer`` and ``harness``.
"""

from .config import ExperimentConfig, load_config, parse_config
from .harness import compare, default_configs, run_experiment

__version__ = "0.1.0"
