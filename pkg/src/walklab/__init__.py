"""Quantum walks built from Markov chains, with phase-estimation reflections used for search."""

from .chain import (ClassicalRunStats, MarkedSet, MarkovChain, classical_search_1, classical_search_2,
                    eigenvalue_gap, is_reversible, lazify, marked_set, monte_carlo, stationary_distribution,
                    time_reversal, validate_chain)
from .errors import *  # noqa: F401,F403
from .meter import CostMeter
from .reflect import (Mode, PhaseEstimationSpec, Reflection, ReflectionReport, Vote, auto_s, build_reflection,
                      pe_kernel, reflection_error)
from .search import (RecursionSchedule, SearchOutcome, cost_recursion_check, ideal_grover, make_schedule,
                     marked_flip, quantum_search, recursive_search)
from .spectral import Discriminant, build_discriminant, check_unit_multiplicity, phase_gap, singular_value_gap
from .walk import EdgeState, WalkOperator, apply_controlled_walk, apply_walk, build_walk, pi_state

__version__ = "0.1.0"
