"""Central numerical tolerances and size caps.

Every module reads these through :data:`TOL`; callers may swap in a modified
copy with :func:`override` (the experiment config does this).
"""

from __future__ import annotations

import contextlib
import dataclasses


@dataclasses.dataclass(frozen=True)
class Tolerances:
    structural: float = 1e-12     # row sums, involutions of exact algebra
    row_sum: float = 1e-9         # validate_chain rejection threshold
    spectral: float = 1e-10       # stationary residuals, singular-value bounds
    unit_sv: float = 1e-9         # sigma >= 1 - unit_sv counts as "singular value 1"
    zero_sv: float = 1e-9         # sigma <= zero_sv counts as 0 (theta = pi/2)
    rank: float = 1e-10           # rank cut when orthonormalizing A+B
    operator: float = 1e-9        # unitarity / projector residuals
    max_states_classical: int = 2000
    max_states_quantum: int = 256
    dense_walk_states: int = 64   # dense n^2 x n^2 matrices allowed up to this n
    dense_eigen_states: int = 24  # eigen-decomposition by dense orthonormalization up to this n
    circuit_amplitudes: int = 2 ** 22
    joint_amplitudes: int = 2 ** 24


TOL = Tolerances()


def current() -> Tolerances:
    return TOL


@contextlib.contextmanager
def override(**changes):
    """Temporarily replace fields of the global tolerance set."""
    global TOL
    saved = TOL
    TOL = dataclasses.replace(TOL, **changes)
    try:
        yield TOL
    finally:
        TOL = saved
