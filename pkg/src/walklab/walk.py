"""Quantum walk W(P) = ref(B) ref(A) on the edge space C^{X x X}.

Edge basis states |x>|y> are stored at flat index ``x * n + y`` (x major).
Arrays holding states have shape ``(n*n, *ancilla_shape)``; the walk acts on
the leading axis only.

A = span{|x>|p_x>} and B = span{|p*_y>|y>}.  Both reflections are applied in
factored form (two rank-n projections), so no n^2 x n^2 matrix is needed; the
dense matrices are still available for small n through :meth:`WalkOperator.dense`.
"""

from __future__ import annotations

import dataclasses
import functools
import math
from typing import Optional

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from . import tolerances as _tol
from .chain import MarkovChain, time_reversal
from .errors import CorrespondenceViolation, DimensionCap, DimensionMismatch
from .meter import CostMeter
from .spectral import Discriminant


@dataclasses.dataclass
class EdgeState:
    amplitudes: np.ndarray
    n: int

    @property
    def ancilla_shape(self) -> tuple:
        return self.amplitudes.shape[1:]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def edge_matrix(self) -> np.ndarray:
        """Amplitudes as an (n, n, *ancilla) array indexed [x, y, ...]."""
        return self.amplitudes.reshape((self.n, self.n) + self.ancilla_shape)

    def first_register_distribution(self) -> np.ndarray:
        p = np.abs(self.edge_matrix()) ** 2
        return p.reshape(self.n, -1).sum(axis=1)


def edge_vectors(chain: MarkovChain):
    """Rows ``p[x] = |p_x>`` and ``ps[y] = |p*_y>`` as (n, n) arrays."""
    rev = time_reversal(chain)
    return np.sqrt(chain.P), np.sqrt(rev.P)


@dataclasses.dataclass(frozen=True, eq=False)
class Eigensystem:
    """Eigen-decomposition of W restricted to A+B.

    Eigenvectors are kept either explicitly (``vectors``, n^2 x r) or as
    coordinates over the spanning set [|x>|p_x>..., |p*_y>|y>...] (``coords``,
    2n x r).
    """

    phases: np.ndarray
    vectors: Optional[np.ndarray]
    coords: Optional[np.ndarray]
    route: str

    @property
    def dim(self) -> int:
        return self.phases.shape[0]


class WalkOperator:
    """W(P) with projectors onto A and B and the eigenstructure on A+B."""

    def __init__(self, chain: MarkovChain):
        n = chain.n
        if n > _tol.TOL.max_states_quantum:
            raise DimensionCap(f"n = {n} exceeds quantum cap {_tol.TOL.max_states_quantum}")
        self.chain = chain
        self.n = n
        self.sq, self.sqs = edge_vectors(chain)

    @property
    def dim(self) -> int:
        return self.n * self.n

    # -- factored projectors -------------------------------------------------
    def _split(self, arr):
        arr = np.asarray(arr)
        if arr.shape[0] != self.dim:
            raise DimensionMismatch(f"state leading dimension {arr.shape[0]} != n^2 = {self.dim}")
        return arr.reshape((self.n, self.n, -1)), arr.shape

    def coords_A(self, arr) -> np.ndarray:
        """<x, p_x | arr> for every x: shape (n, *rest)."""
        v, shape = self._split(arr)
        return np.einsum("xy,xyk->xk", self.sq, v).reshape((self.n,) + shape[1:])

    def coords_B(self, arr) -> np.ndarray:
        """<p*_y, y | arr> for every y: shape (n, *rest)."""
        v, shape = self._split(arr)
        return np.einsum("yx,xyk->yk", self.sqs, v).reshape((self.n,) + shape[1:])

    def span(self, cA, cB=None) -> np.ndarray:
        """sum_x cA[x] |x>|p_x> + sum_y cB[y] |p*_y>|y>."""
        cA = np.asarray(cA)
        rest = cA.shape[1:]
        a = cA.reshape(self.n, -1)
        out = self.sq[:, :, None] * a[:, None, :]
        if cB is not None:
            b = np.asarray(cB).reshape(self.n, -1)
            out = out + self.sqs.T[:, :, None] * b[None, :, :]
        return out.reshape((self.dim,) + rest)

    def proj_A(self, arr) -> np.ndarray:
        return self.span(self.coords_A(arr))

    def proj_B(self, arr) -> np.ndarray:
        c = self.coords_B(arr)
        rest = c.shape[1:]
        b = c.reshape(self.n, -1)
        return (self.sqs.T[:, :, None] * b[None, :, :]).reshape((self.dim,) + rest)

    def ref_A(self, arr) -> np.ndarray:
        return 2.0 * self.proj_A(arr) - arr

    def ref_B(self, arr) -> np.ndarray:
        return 2.0 * self.proj_B(arr) - arr

    def apply(self, arr, inverse: bool = False) -> np.ndarray:
        """W arr (or W^dagger arr = ref(A) ref(B) arr)."""
        if inverse:
            return self.ref_A(self.ref_B(arr))
        return self.ref_B(self.ref_A(arr))

    # -- dense forms ----------------------------------------------------------
    def dense_projectors(self):
        n = self.n
        if n > _tol.TOL.dense_walk_states:
            raise DimensionCap(f"dense walk matrices capped at n = {_tol.TOL.dense_walk_states}")
        eye = np.eye(n)
        PA = np.einsum("xa,xy,xz->xyaz", eye, self.sq, self.sq).reshape(self.dim, self.dim)
        PB = np.einsum("yb,yx,yz->xyzb", eye, self.sqs, self.sqs).reshape(self.dim, self.dim)
        return PA, PB

    def dense(self) -> np.ndarray:
        PA, PB = self.dense_projectors()
        I = np.eye(self.dim)
        return (2 * PB - I) @ (2 * PA - I)

    def spanning_vectors(self) -> np.ndarray:
        """Explicit n^2 x 2n matrix [|x>|p_x> ..., |p*_y>|y> ...]."""
        eye = np.eye(self.n)
        return np.hstack([self.span(eye), self.span(np.zeros((self.n, self.n)), eye)])

    # -- states -----------------------------------------------------------------
    def pi_state(self) -> np.ndarray:
        return pi_state(self.chain, self)

    # -- eigenstructure on A+B ---------------------------------------------------
    @functools.cached_property
    def eigensystem(self) -> Eigensystem:
        if self.n <= _tol.TOL.dense_eigen_states:
            return self._eigen_dense()
        return self._eigen_coords()

    def _eigen_dense(self) -> Eigensystem:
        E = self.spanning_vectors()
        U, s, _ = np.linalg.svd(E, full_matrices=False)
        keep = s ** 2 > _tol.TOL.rank
        Q = U[:, keep]
        Wr = Q.T @ self.apply(Q)
        phases, Z = _schur_phases(Wr)
        return Eigensystem(phases, Q @ Z, None, "dense")

    def _eigen_coords(self) -> Eigensystem:
        X = self.coords_A(self.span(np.zeros((self.n, self.n)), np.eye(self.n)))  # <x p_x | p*_y y>
        n = self.n
        I = np.eye(n)
        G = np.block([[I, X], [X.T, I]])
        lam, Ug = np.linalg.eigh(G)
        keep = lam > _tol.TOL.rank
        T = Ug[:, keep] / np.sqrt(lam[keep])
        # W expressed on the spanning set, from ref(A) E_B = 2 E_A X - E_B and ref(B) E_A = 2 E_B X^T - E_A.
        Mc = np.block([[-I, -2.0 * X], [2.0 * X.T, 4.0 * X.T @ X - I]])
        Wr = T.T @ G @ Mc @ T
        phases, Z = _schur_phases(Wr)
        return Eigensystem(phases, None, T @ Z, "coords")

    def eig_project(self, arr) -> np.ndarray:
        """Coefficients <v_j | arr> over the A+B eigenbasis: shape (r, *rest)."""
        es = self.eigensystem
        arr = np.asarray(arr)
        rest = arr.shape[1:]
        flat = arr.reshape(self.dim, -1)
        if es.vectors is not None:
            c = es.vectors.conj().T @ flat
        else:
            ab = np.vstack([self.coords_A(flat), self.coords_B(flat)])
            c = es.coords.conj().T @ ab
        return c.reshape((es.dim,) + rest)

    def eig_expand(self, coef) -> np.ndarray:
        es = self.eigensystem
        coef = np.asarray(coef)
        rest = coef.shape[1:]
        flat = coef.reshape(es.dim, -1)
        if es.vectors is not None:
            out = es.vectors @ flat
        else:
            ab = es.coords @ flat
            out = self.span(ab[: self.n], ab[self.n:])
        return out.reshape((self.dim,) + rest)

    def eigenvector(self, j: int) -> np.ndarray:
        e = np.zeros(self.eigensystem.dim, dtype=complex)
        e[j] = 1.0
        return self.eig_expand(e)


def _schur_phases(Wr: np.ndarray):
    if Wr.shape[0] == 0:
        return np.zeros(0), np.zeros((0, 0), dtype=complex)
    T, Z = scipy.linalg.schur(Wr.astype(complex), output="complex")
    lam = np.diag(T)
    off = np.linalg.norm(T - np.diag(lam))
    if off > 1e-8:
        raise CorrespondenceViolation(f"restricted walk is not normal (Schur off-diagonal {off:.2e})")
    return np.angle(lam), Z


def build_walk(chain: MarkovChain) -> WalkOperator:
    if not chain.irreducible:
        raise ValueError("quantum walk requires an irreducible chain")
    return WalkOperator(chain)


def pi_state(chain: MarkovChain, walk: WalkOperator | None = None) -> np.ndarray:
    """|pi> = sum_x sqrt(pi_x)|x>|p_x>, checked against sum_y sqrt(pi_y)|p*_y>|y>."""
    sq, sqs = (walk.sq, walk.sqs) if walk is not None else edge_vectors(chain)
    r = np.sqrt(chain.pi)
    left = (r[:, None] * sq).ravel()
    right = (r[:, None] * sqs).T.ravel()
    if np.linalg.norm(left - right) > _tol.TOL.spectral:
        raise ArithmeticError("the two constructions of |pi> disagree")
    return left


def apply_walk(walk: WalkOperator, state, meter: CostMeter | None = None, inverse: bool = False):
    """W (or W^dagger) on the edge register; 4 update units per application."""
    arr = state.amplitudes if isinstance(state, EdgeState) else state
    out = walk.apply(arr, inverse=inverse)
    if meter is not None:
        meter.charge_walk(1)
    return EdgeState(out, walk.n) if isinstance(state, EdgeState) else out


def apply_controlled_walk(walk: WalkOperator, joint_state, control, meter: CostMeter | None = None,
                          inverse: bool = False):
    """Apply W to the components whose ancilla index satisfies ``control``.

    ``control`` is a boolean array over the ancilla shape.
    """
    arr = joint_state.amplitudes if isinstance(joint_state, EdgeState) else np.asarray(joint_state)
    anc = arr.shape[1:]
    control = np.asarray(control, dtype=bool)
    if control.shape != anc:
        raise DimensionMismatch(f"control mask shape {control.shape} != ancilla shape {anc}")
    flat = arr.reshape(walk.dim, -1).copy()
    cols = control.ravel()
    if cols.any():
        flat[:, cols] = walk.apply(flat[:, cols], inverse=inverse)
    if meter is not None:
        meter.charge_walk(1)
    out = flat.reshape(arr.shape)
    return EdgeState(out, walk.n) if isinstance(joint_state, EdgeState) else out


# -- spectral correspondence ---------------------------------------------------------

def predicted_phases(disc: Discriminant) -> tuple[np.ndarray, dict]:
    """Eigenphases of W on A+B implied by the singular values of D(P)."""
    t = _tol.TOL
    s = disc.singular_values
    unit = s >= 1.0 - t.unit_sv
    zero = s <= t.zero_sv
    mid = ~unit & ~zero
    theta = np.arccos(s[mid])
    phases = np.concatenate([2 * theta, -2 * theta, np.zeros(unit.sum()), np.full(2 * zero.sum(), math.pi)])
    return phases, {"unit": int(unit.sum()), "zero": int(zero.sum()), "rotating_pairs": int(mid.sum())}


def match_phases(a, b) -> float:
    """Largest circular distance after optimally pairing two phase multisets."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        return math.inf
    if a.size == 0:
        return 0.0
    d = np.abs(np.angle(np.exp(1j * (a[:, None] - b[None, :]))))
    r, c = linear_sum_assignment(d)
    return float(d[r, c].max())


def verify_walk_spectrum(walk: WalkOperator, disc: Discriminant, tol: float = 1e-8) -> dict:
    """Compare the walk spectrum on A+B with the singular values of D(P).

    Checks the rotating pairs, the dimension of A and B's intersection, the
    -Id action on the sigma = 0 sectors and the identity on (A+B)^perp.

    Raises
    ------
    CorrespondenceViolation
        on any mismatch larger than ``tol``.
    """
    op = _tol.TOL.operator
    es = walk.eigensystem
    predicted, counts = predicted_phases(disc)
    dist = match_phases(es.phases, predicted)
    if not dist <= tol:
        worst = _worst_phase(es.phases, predicted)
        raise CorrespondenceViolation(f"eigenphase multiset mismatch (distance {dist:.3e}); offending phase {worst}")

    # principal angles between A and B, from the explicit n^2-dimensional spans
    n = walk.n
    I = np.eye(n)
    QA = walk.span(I)
    QB = walk.span(np.zeros((n, n)), I)
    X = QA.T @ QB
    u, cosines, vt = np.linalg.svd(X)
    inter = cosines >= 1.0 - _tol.TOL.unit_sv
    zero = cosines <= _tol.TOL.zero_sv
    if int(inter.sum()) != counts["unit"]:
        raise CorrespondenceViolation(f"dim(A & B) = {int(inter.sum())} but D(P) has {counts['unit']} unit singular values")

    res_id = _residual(walk, QA @ u[:, inter], +1)
    res_left = _residual(walk, QA @ u[:, zero], -1)
    res_right = _residual(walk, QB @ vt.T[:, zero], -1)
    if max(res_id, res_left, res_right) > op:
        raise CorrespondenceViolation(
            f"sector action residuals: A&B {res_id:.2e}, A&B^perp {res_left:.2e}, A^perp&B {res_right:.2e}")

    perp_res = _perp_residual(walk)
    if perp_res > op:
        raise CorrespondenceViolation(f"W differs from Id on (A+B)^perp by {perp_res:.2e}")

    return {
        "phase_distance": dist,
        "rotating_pairs": counts["rotating_pairs"],
        "dim_A_and_B": int(inter.sum()),
        "dim_A_and_Bperp": int(zero.sum()),
        "dim_Aperp_and_B": int(zero.sum()),
        "dim_A_plus_B": es.dim,
        "identity_residual": res_id,
        "minus_identity_residual": max(res_left, res_right),
        "perp_residual": perp_res,
    }


def _worst_phase(found, predicted) -> float:
    found = np.asarray(found)
    if len(predicted) == 0:
        return float(found[0]) if found.size else float("nan")
    d = np.abs(np.angle(np.exp(1j * (found[:, None] - np.asarray(predicted)[None, :])))).min(axis=1)
    return float(found[int(np.argmax(d))])


def _residual(walk: WalkOperator, vecs: np.ndarray, sign: int) -> float:
    if vecs.shape[1] == 0:
        return 0.0
    return float(np.max(np.linalg.norm(walk.apply(vecs) - sign * vecs, axis=0)))


def _perp_residual(walk: WalkOperator, samples: int = 8, seed: int = 0) -> float:
    """W - Id on (A+B)^perp: full complement basis for small n, random probes otherwise."""
    E = walk.spanning_vectors()
    if walk.n <= _tol.TOL.dense_eigen_states:
        U, s, _ = np.linalg.svd(E, full_matrices=True)
        rank = int(np.sum(s ** 2 > _tol.TOL.rank))
        C = U[:, rank:]
    else:
        rng = np.random.default_rng(seed)
        Q, s, _ = np.linalg.svd(E, full_matrices=False)
        Q = Q[:, s ** 2 > _tol.TOL.rank]
        C = rng.standard_normal((walk.dim, samples))
        C -= Q @ (Q.T @ C)
        C /= np.linalg.norm(C, axis=0)
    if C.shape[1] == 0:
        return 0.0
    return float(np.max(np.linalg.norm(walk.apply(C) - C, axis=0)))
