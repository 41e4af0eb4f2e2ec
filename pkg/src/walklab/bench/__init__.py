"""Chain generators and the config-driven experiment runner."""

from .experiment import ExperimentConfig, dumps, load_config, run_experiment, run_single
from .generators import (ChainSpec, complete, cycle_directed, cycle_lazy, generate, johnson, johnson_states,
                         parse_marked, random_irreducible, random_reversible, resolve_marked, torus2d)

__all__ = [
    "ChainSpec", "ExperimentConfig", "complete", "cycle_directed", "cycle_lazy", "dumps", "generate",
    "johnson", "johnson_states", "load_config", "parse_marked", "random_irreducible", "random_reversible",
    "resolve_marked", "run_experiment", "run_single", "torus2d",
]
