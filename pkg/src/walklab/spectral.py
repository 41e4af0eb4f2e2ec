"""Discriminant matrix of a chain and its singular-value structure."""

from __future__ import annotations

import dataclasses
import math
from typing import Optional

import numpy as np

from . import tolerances as _tol
from .chain import MarkovChain, eigenvalue_gap, time_reversal
from .errors import DegenerateSpectrum, PropositionViolation


@dataclasses.dataclass(frozen=True, eq=False)
class Discriminant:
    D: np.ndarray
    singular_values: np.ndarray   # descending
    left: np.ndarray              # columns are left singular vectors
    right: np.ndarray             # columns are right singular vectors
    sv_gap: float
    phase_gap: Optional[float]    # None when every singular value is 1
    unit_sv_multiplicity: int

    @property
    def n(self) -> int:
        return self.D.shape[0]

    def angles(self) -> np.ndarray:
        """theta_j with cos(theta_j) = sigma_j, clipped into [0, pi/2]."""
        return np.arccos(np.clip(self.singular_values, 0.0, 1.0))


def discriminant_matrix(chain: MarkovChain) -> np.ndarray:
    """D = diag(pi)^{1/2} P diag(pi)^{-1/2}, cross-checked against sqrt(p_xy p*_yx)."""
    sq = np.sqrt(chain.pi)
    D = sq[:, None] * chain.P / sq[None, :]
    rev = time_reversal(chain)
    D2 = np.sqrt(chain.P * rev.P.T)
    scale = max(1.0, float(np.max(np.abs(D))))
    err = float(np.max(np.abs(D - D2)))
    if err > _tol.TOL.structural * scale * 10:
        raise ArithmeticError(f"discriminant entry forms disagree by {err:.3e}; stationary law suspect")
    return D


def _phase_gap_from(sv: np.ndarray) -> Optional[float]:
    t = _tol.TOL
    below = sv[sv < 1.0 - t.unit_sv]
    if below.size == 0:
        return None
    top = float(below.max())
    theta = math.pi / 2 if top <= t.zero_sv else math.acos(top)
    return 2.0 * theta


def build_discriminant(chain: MarkovChain) -> Discriminant:
    if chain.n > _tol.TOL.max_states_classical:
        raise ValueError(f"dense SVD capped at n = {_tol.TOL.max_states_classical}")
    D = discriminant_matrix(chain)
    U, s, Vt = np.linalg.svd(D)
    unit = int(np.sum(s >= 1.0 - _tol.TOL.unit_sv))
    if s.size < 2:
        gap = 1.0
    else:
        gap = 0.0 if unit > 1 else float(1.0 - s[1])
    return Discriminant(D, s, U, Vt.T, gap, _phase_gap_from(s), unit)


def singular_value_gap(disc: Discriminant) -> float:
    return disc.sv_gap


def phase_gap(disc: Discriminant) -> float:
    """Twice the smallest angle whose cosine is a singular value below 1.

    Raises
    ------
    DegenerateSpectrum
        when every singular value equals 1 (e.g. permutation chains).
    """
    if disc.phase_gap is None:
        raise DegenerateSpectrum("all singular values of D(P) equal 1; phase gap undefined")
    return disc.phase_gap


def check_unit_multiplicity(disc: Discriminant, chain: MarkovChain) -> int:
    """Count singular values equal to 1 and enforce the structural results.

    All singular values must lie in [0, 1]; a chain that is irreducible and
    has every p_xx > 0 must have exactly one singular value 1.
    """
    s = disc.singular_values
    if s.max() > 1.0 + _tol.TOL.spectral or s.min() < -_tol.TOL.spectral:
        raise PropositionViolation(f"singular values outside [0, 1]: range [{s.min()}, {s.max()}]")
    count = disc.unit_sv_multiplicity
    if chain.irreducible and chain.has_self_loops and count != 1:
        raise PropositionViolation(f"chain with self-loops has {count} unit singular values")
    return count


def perron_residual(disc: Discriminant, chain: MarkovChain) -> float:
    """max(||D v - v||, ||D^T v - v||) for v = (sqrt(pi_x))."""
    v = np.sqrt(chain.pi)
    return float(max(np.linalg.norm(disc.D @ v - v), np.linalg.norm(disc.D.T @ v - v)))


def spectrum_summary(chain: MarkovChain) -> dict:
    disc = build_discriminant(chain)
    check_unit_multiplicity(disc, chain)
    return {
        "n": chain.n,
        "singular_values": disc.singular_values.tolist(),
        "sv_gap": disc.sv_gap,
        "phase_gap": disc.phase_gap,
        "unit_multiplicity": disc.unit_sv_multiplicity,
        "eigenvalue_gap": eigenvalue_gap(chain),
    }
