"""Phase estimation on the walk and the approximate reflection R(P).

Ancilla layout: ``k`` registers of ``s`` qubits, each an axis of size
``N = 2**s`` appended after the edge axis, so a joint state has shape
``(n*n, N, ..., N)``.  Inside a register the integer index t = sum_b 2^b t_b;
qubit b controls W^(2^b).

One phase-estimation round on an eigenvector with eigenphase phi acts on its
register as C(phi) = F^dagger diag(e^{i t phi}) H^{(x)s}, so C(phi)|0> has the
amplitudes of :func:`pe_kernel`.  R(P) runs k rounds, flips the sign of every
ancilla configuration selected by the vote rule, and uncomputes.
"""

from __future__ import annotations

import dataclasses
import enum
import functools
import math
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from . import tolerances as _tol
from .errors import DimensionCap, DimensionMismatch
from .meter import CostMeter
from .walk import WalkOperator, apply_controlled_walk


class Mode(str, enum.Enum):
    EXACT = "exact"
    SPECTRAL = "spectral"
    CIRCUIT = "circuit"


class Vote(str, enum.Enum):
    ANY = "any"            # flip iff at least one register holds a nonzero estimate
    MAJORITY = "majority"  # flip iff at least ceil(k/2) registers are nonzero


@dataclasses.dataclass(frozen=True)
class PhaseEstimationSpec:
    s: int
    k: int
    mode: Mode = Mode.SPECTRAL
    vote: Vote = Vote.ANY

    def __post_init__(self):
        if self.s < 1 or self.k < 1:
            raise ValueError(f"need s >= 1 and k >= 1, got s={self.s}, k={self.k}")
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "vote", Vote(self.vote))

    @property
    def walk_calls(self) -> int:
        """Controlled-walk calls charged per application of R(P): k 2^(s+1)."""
        return self.k * 2 ** (self.s + 1)

    def with_k(self, k: int) -> "PhaseEstimationSpec":
        return dataclasses.replace(self, k=k)


def auto_s(phase_gap: float) -> int:
    """ceil(log2(1/Delta)) + 3 ancilla bits, so that 2^s >= 8/Delta."""
    return max(1, math.ceil(math.log2(1.0 / phase_gap)) + 3)


def pe_kernel(phase: float, s: int) -> np.ndarray:
    """Outcome amplitudes alpha_j = 2^-s sum_t exp(i t (phase - 2 pi j / 2^s)).

    Closed-form geometric sum; exact grid phases give a single unit amplitude.
    """
    if s > 24:
        raise DimensionCap("pe_kernel table capped at s = 24")
    N = 2 ** s
    x = phase - 2.0 * np.pi * np.arange(N) / N
    z = np.exp(1j * x)
    on_grid = np.abs(np.angle(z)) < 1e-15
    num = 1.0 - np.exp(1j * N * x)
    den = np.where(on_grid, 1.0, 1.0 - z)
    return np.where(on_grid, 1.0 + 0j, num / (N * den))


def zero_outcome_probability(phase: float, s: int) -> float:
    return float(abs(pe_kernel(phase, s)[0]) ** 2)


def _threshold(k: int, vote: Vote) -> int:
    return 1 if Vote(vote) is Vote.ANY else math.ceil(k / 2)


def leakage(phase: float, s: int, k: int, vote: Vote = Vote.ANY) -> float:
    """||(R + Id)|v>|0>|| for an eigenvector with eigenphase ``phase``.

    Equals twice the norm of the unflipped part of C(phase)^{(x)k}|0>, i.e.
    2 sqrt(Pr[fewer than threshold registers nonzero]) with independent rounds.
    """
    p0 = min(1.0, zero_outcome_probability(phase, s))
    q = 1.0 - p0
    m = _threshold(k, vote)
    tail = sum(math.comb(k, j) * q ** j * p0 ** (k - j) for j in range(m))
    return 2.0 * math.sqrt(max(tail, 0.0))


@functools.lru_cache(maxsize=32)
def _register_matrices(s: int):
    N = 2 ** s
    H = scipy.linalg.hadamard(N).astype(float) / math.sqrt(N)
    jt = np.outer(np.arange(N), np.arange(N))
    Fdag = np.exp(-2j * np.pi * jt / N) / math.sqrt(N)
    return H, Fdag


@functools.lru_cache(maxsize=32)
def _vote_signs(s: int, k: int, vote: Vote) -> np.ndarray:
    N = 2 ** s
    nonzero = np.zeros((N,) * k, dtype=int)
    for r in range(k):
        shape = [1] * k
        shape[r] = N
        nonzero = nonzero + (np.arange(N) != 0).reshape(shape)
    return np.where(nonzero >= _threshold(k, vote), -1.0, 1.0)


def register_unitary(phase: float, s: int) -> np.ndarray:
    """Full 2^s x 2^s unitary C(phase) = F^dagger D(phase) H of one round."""
    H, Fdag = _register_matrices(s)
    d = np.exp(1j * phase * np.arange(2 ** s))
    return Fdag @ (d[:, None] * H)


def _on_axis(M: np.ndarray, X: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(M, X, axes=([1], [axis])), 0, axis)


class Reflection:
    """Approximate reflection about |pi>|0> built from the walk.

    ``apply`` accepts arrays of shape ``(n*n, *ancilla_shape)``; the exact mode
    carries no ancilla.
    """

    def __init__(self, walk: WalkOperator, spec: PhaseEstimationSpec):
        self.walk = walk
        self.spec = spec
        self.pi = walk.pi_state()
        self.circuit_walk_calls = 0
        if spec.mode is Mode.CIRCUIT:
            amps = walk.dim * (2 ** spec.s) ** spec.k
            if amps > _tol.TOL.circuit_amplitudes:
                raise DimensionCap(f"circuit simulation needs {amps} amplitudes (cap {_tol.TOL.circuit_amplitudes})")

    @property
    def ancilla_shape(self) -> tuple:
        if self.spec.mode is Mode.EXACT:
            return ()
        return (2 ** self.spec.s,) * self.spec.k

    @property
    def walk_calls(self) -> int:
        return 0 if self.spec.mode is Mode.EXACT else self.spec.walk_calls

    def initial(self, edge: np.ndarray) -> np.ndarray:
        """edge (x) |0...0> on this reflection's ancilla."""
        out = np.zeros((self.walk.dim,) + self.ancilla_shape, dtype=complex)
        out[(slice(None),) + (0,) * len(self.ancilla_shape)] = edge
        return out

    def apply(self, arr, meter: CostMeter | None = None) -> np.ndarray:
        arr = np.asarray(arr, dtype=complex)
        if arr.shape != (self.walk.dim,) + self.ancilla_shape:
            raise DimensionMismatch(f"state shape {arr.shape} does not match reflection layout")
        mode = self.spec.mode
        if mode is Mode.EXACT:
            out = self._apply_exact(arr)
        elif mode is Mode.SPECTRAL:
            out = self._apply_spectral(arr)
        else:
            out = self._apply_circuit(arr)
        if meter is not None and self.walk_calls:
            meter.charge_walk(self.walk_calls)
        return out

    __call__ = apply

    # -- modes -----------------------------------------------------------------------
    def _apply_exact(self, arr):
        overlap = np.tensordot(self.pi, arr, axes=([0], [0]))
        return 2.0 * np.multiply.outer(self.pi, overlap) - arr

    def _ancilla_transform(self, X: np.ndarray, phases: np.ndarray) -> np.ndarray:
        """Row-wise M_phi = C(phi)^dagger^{(x)k} Z C(phi)^{(x)k} on the ancilla axes."""
        s, k = self.spec.s, self.spec.k
        H, Fdag = _register_matrices(s)
        N = 2 ** s
        d = np.exp(1j * np.multiply.outer(phases, np.arange(N)))  # (rows, N)
        Y = X
        for r in range(k):
            ax = 1 + r
            shape = [Y.shape[0]] + [1] * k
            shape[ax] = N
            Y = _on_axis(H, Y, ax) * d.reshape(shape)
            Y = _on_axis(Fdag, Y, ax)
        Y = Y * _vote_signs(s, k, self.spec.vote)
        for r in range(k):
            ax = 1 + r
            shape = [Y.shape[0]] + [1] * k
            shape[ax] = N
            Y = _on_axis(Fdag.conj().T, Y, ax) * d.conj().reshape(shape)
            Y = _on_axis(H, Y, ax)
        return Y

    def _apply_spectral(self, arr):
        walk = self.walk
        coef = walk.eig_project(arr)
        perp = arr - walk.eig_expand(coef)
        coef = self._ancilla_transform(coef, walk.eigensystem.phases)
        perp = self._ancilla_transform(perp, np.zeros(walk.dim))  # W = Id on (A+B)^perp
        return walk.eig_expand(coef) + perp

    def _apply_circuit(self, arr):
        s, k = self.spec.s, self.spec.k
        H, Fdag = _register_matrices(s)
        N = 2 ** s
        anc = self.ancilla_shape
        bits = [((np.arange(N) >> b) & 1).astype(bool) for b in range(s)]

        def controls(r, b):
            shape = [1] * k
            shape[r] = N
            return np.broadcast_to(bits[b].reshape(shape), anc)

        def powered(Y, r, inverse):
            for b in range(s):
                ctrl = controls(r, b)
                for _ in range(2 ** b):
                    Y = apply_controlled_walk(self.walk, Y, ctrl, inverse=inverse)
                    self.circuit_walk_calls += 1
            return Y

        Y = arr
        for r in range(k):
            Y = _on_axis(H, Y, 1 + r)
            Y = powered(Y, r, inverse=False)
            Y = _on_axis(Fdag, Y, 1 + r)
        Y = Y * _vote_signs(s, k, self.spec.vote)
        for r in reversed(range(k)):
            Y = _on_axis(Fdag.conj().T, Y, 1 + r)
            Y = powered(Y, r, inverse=True)
            Y = _on_axis(H, Y, 1 + r)
        return Y


def build_reflection(walk: WalkOperator, spec: PhaseEstimationSpec) -> Reflection:
    return Reflection(walk, spec)


@dataclasses.dataclass
class ReflectionReport:
    s: int
    k: int
    phases: np.ndarray               # eigenphases on A+B other than |pi>'s
    zero_outcome_probs: np.ndarray   # single-round Pr[estimate = 0] per phase
    leakage: np.ndarray              # ||(R + Id)|v>|0>|| per phase
    max_error: float
    pi_fidelity: float
    sampled_errors: list
    errors_by_k: dict
    fitted_c: float

    def c_at(self, k: int) -> float:
        """The constant c making 2^(1 - c k) equal the measured error at k."""
        err = self.errors_by_k[k]
        return math.inf if err <= 0 else (1.0 - math.log2(err)) / k


def pi_index(walk: WalkOperator) -> int:
    c = walk.eig_project(walk.pi_state())
    return int(np.argmax(np.abs(c)))


def max_error(walk: WalkOperator, spec: PhaseEstimationSpec) -> float:
    if spec.mode is Mode.EXACT:
        return 0.0
    phases = np.delete(walk.eigensystem.phases, pi_index(walk))
    return max((leakage(p, spec.s, spec.k, spec.vote) for p in phases), default=0.0)


def fit_decay_constant(ks: Sequence[int], errors: Sequence[float]) -> float:
    """Least-squares c in log2(error) = a - c k; inf when every error vanishes."""
    pts = [(k, math.log2(e)) for k, e in zip(ks, errors) if e > 0]
    if len(pts) < 2:
        return math.inf
    x, y = np.array(pts).T
    slope = np.polyfit(x, y, 1)[0]
    return float(-slope)


def reflection_error(walk: WalkOperator, spec: PhaseEstimationSpec, trials: int = 0, seed: int = 0,
                     k_values: Optional[Sequence[int]] = None) -> ReflectionReport:
    """Worst-case ||(R + Id)|psi>|0>|| over |psi> in A+B orthogonal to |pi>.

    The eigenbasis of A+B minus |pi> is the extremal set, so the maximum is
    taken over eigenvectors; ``trials`` random unit vectors are additionally
    pushed through the actual reflection as a consistency check.
    """
    es = walk.eigensystem
    ip = pi_index(walk)
    phases = np.delete(es.phases, ip)
    exact = spec.mode is Mode.EXACT
    p0 = np.array([zero_outcome_probability(p, spec.s) for p in phases])
    leak = np.zeros(phases.shape) if exact else np.array([leakage(p, spec.s, spec.k, spec.vote) for p in phases])
    worst = float(leak.max()) if leak.size else 0.0

    ks = list(k_values) if k_values is not None else list(range(1, 7))
    by_k = {}
    for k in ks:
        if exact:
            by_k[k] = 0.0
        else:
            by_k[k] = max((leakage(p, spec.s, k, spec.vote) for p in phases), default=0.0)
    fitted = math.inf if exact else fit_decay_constant(ks, [by_k[k] for k in ks])

    R = None
    anc = () if exact else (2 ** spec.s,) * spec.k
    joint = walk.dim * int(np.prod(anc, dtype=np.int64))
    if joint <= _tol.TOL.joint_amplitudes:
        R = Reflection(walk, spec)
        pi0 = R.initial(R.pi)
        out = R.apply(pi0)
        fid = float(abs(np.vdot(pi0, out)))
    else:
        fid = 1.0 if exact else float(abs(pe_kernel(0.0, spec.s)[0]) ** (2 * spec.k))

    sampled = []
    if trials and R is not None:
        rng = np.random.default_rng(seed)
        for _ in range(trials):
            c = rng.standard_normal(es.dim) + 1j * rng.standard_normal(es.dim)
            c[ip] = 0.0
            c /= np.linalg.norm(c)
            psi = R.initial(walk.eig_expand(c))
            sampled.append(float(np.linalg.norm(R.apply(psi) + psi)))

    return ReflectionReport(spec.s, spec.k, phases, p0, leak, worst, fid, sampled, by_k, fitted)
