"""Classical Markov chains: validation, stationary law, reversal, laziness and
the two classical search baselines (sample-then-walk and greedy check-per-step).
"""

from __future__ import annotations

import dataclasses
import functools
import math
from typing import Iterable, Optional

import networkx as nx
import numpy as np

from . import tolerances as _tol
from .errors import AlphaOutOfRange, ConvergenceFailure, NonStochasticRow, NotIrreducible


@dataclasses.dataclass(frozen=True, eq=False)
class MarkovChain:
    """Row-stochastic transition matrix plus structural flags.

    Instances are produced by :func:`validate_chain` and never mutated; the
    stationary distribution and derived quantities are computed lazily and
    cached.
    """

    P: np.ndarray
    irreducible: bool
    aperiodic: bool
    has_self_loops: bool

    @property
    def n(self) -> int:
        return self.P.shape[0]

    @functools.cached_property
    def pi(self) -> np.ndarray:
        pi = stationary_distribution(self)
        pi.setflags(write=False)
        return pi

    @functools.cached_property
    def reversible(self) -> bool:
        return is_reversible(self)

    @property
    def ergodic(self) -> bool:
        return self.irreducible and self.aperiodic

    @functools.cached_property
    def _cumulative(self):
        rows = np.cumsum(self.P, axis=1)
        rows[:, -1] = 1.0
        start = np.cumsum(self.pi)
        start[-1] = 1.0
        return rows, start

    def flags(self) -> dict:
        return {
            "irreducible": self.irreducible,
            "aperiodic": self.aperiodic,
            "reversible": self.reversible,
            "has_self_loops": self.has_self_loops,
        }


@dataclasses.dataclass(frozen=True)
class MarkedSet:
    members: frozenset
    epsilon: float

    def __contains__(self, x) -> bool:
        return x in self.members

    def __len__(self) -> int:
        return len(self.members)

    def mask(self, n: int) -> np.ndarray:
        m = np.zeros(n, dtype=bool)
        m[list(self.members)] = True
        return m


@dataclasses.dataclass
class ClassicalRunStats:
    steps_taken: int
    found: Optional[int]
    setup_count: int
    update_count: int
    check_count: int
    seed: Optional[int] = None


def _support_graph(P: np.ndarray) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(range(P.shape[0]))
    rows, cols = np.nonzero(P > 0)
    g.add_edges_from(zip(rows.tolist(), cols.tolist()))
    return g


def validate_chain(P, *, require_irreducible: bool = True, pi=None) -> MarkovChain:
    """Check ``P`` and wrap it in a :class:`MarkovChain`.

    Irreducibility is decided by strong connectivity of the support digraph
    and aperiodicity by the gcd of its cycle lengths, never spectrally.

    Raises
    ------
    NonStochasticRow
        a row sum is off by more than the row-sum tolerance, or an entry is negative.
    NotIrreducible
        the support digraph is not strongly connected (only if
        ``require_irreducible``).
    """
    P = np.array(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
        raise ValueError(f"transition matrix must be square and non-empty, got shape {P.shape}")
    if np.any(P < 0) or not np.all(np.isfinite(P)):
        raise NonStochasticRow("transition matrix has negative or non-finite entries")
    dev = np.abs(P.sum(axis=1) - 1.0)
    bad = int(np.argmax(dev))
    if dev[bad] > _tol.TOL.row_sum:
        raise NonStochasticRow(f"row {bad} sums to {P[bad].sum()!r}")
    P /= P.sum(axis=1, keepdims=True)

    g = _support_graph(P)
    irreducible = nx.is_strongly_connected(g)
    if require_irreducible and not irreducible:
        raise NotIrreducible("support digraph is not strongly connected")
    has_loops = bool(np.all(np.diag(P) > 0))
    if has_loops:
        aperiodic = irreducible
    else:
        aperiodic = irreducible and nx.is_aperiodic(g)
    P.setflags(write=False)
    chain = MarkovChain(P, irreducible, aperiodic, has_loops)
    if pi is not None:
        pi = np.array(pi, dtype=float)
        pi.setflags(write=False)
        chain.__dict__["pi"] = pi
    return chain


def stationary_distribution(chain: MarkovChain, max_iter: int = 200_000) -> np.ndarray:
    """Unique stationary law of an irreducible chain.

    Dense eigensolve of P^T first; if the residual misses the spectral
    tolerance, power iteration on the lazy chain (I + P)/2, which has the same
    fixed point and converges even for periodic chains.
    """
    if not chain.irreducible:
        raise NotIrreducible("stationary distribution is only unique for irreducible chains")
    P = chain.P
    tol = _tol.TOL.spectral
    w, v = np.linalg.eig(P.T)
    i = int(np.argmin(np.abs(w - 1.0)))
    pi = np.real(v[:, i])
    pi = pi / pi.sum()
    if np.all(pi > 0) and np.max(np.abs(pi @ P - pi)) <= tol:
        return pi

    pi = np.full(chain.n, 1.0 / chain.n)
    for _ in range(max_iter):
        nxt = 0.5 * (pi + pi @ P)
        if np.max(np.abs(nxt - pi)) < tol * 1e-2:
            pi = nxt / nxt.sum()
            break
        pi = nxt
    if np.max(np.abs(pi @ P - pi)) > tol or np.any(pi <= 0):
        raise ConvergenceFailure("stationary residual not met after power iteration")
    return pi


def time_reversal(chain: MarkovChain) -> MarkovChain:
    """The chain P* with pi_x p_xy = pi_y p*_yx; shares pi with ``chain``."""
    pi = chain.pi
    Ps = chain.P.T * pi[None, :] / pi[:, None]
    return validate_chain(Ps, pi=pi)


def is_reversible(chain: MarkovChain, tol: float | None = None) -> bool:
    tol = _tol.TOL.spectral if tol is None else tol
    flow = chain.pi[:, None] * chain.P
    return bool(np.max(np.abs(flow - flow.T)) <= tol)


def eigenvalue_gap(chain: MarkovChain) -> float:
    """1 - lambda*, lambda* the largest modulus among non-Perron eigenvalues."""
    if chain.n == 1:
        return 1.0
    w = np.linalg.eigvals(chain.P)
    i = int(np.argmin(np.abs(w - 1.0)))
    rest = np.delete(w, i)
    return max(0.0, float(1.0 - np.max(np.abs(rest))))  # rounding can push a zero gap slightly negative


def lazify(chain: MarkovChain, alpha: float) -> MarkovChain:
    """alpha * Id + (1 - alpha) * P. Same stationary distribution."""
    if not 0.0 < alpha < 1.0:
        raise AlphaOutOfRange(f"alpha must lie in (0, 1), got {alpha}")
    Q = alpha * np.eye(chain.n) + (1.0 - alpha) * chain.P
    pi = chain.__dict__.get("pi")
    return validate_chain(Q, require_irreducible=chain.irreducible, pi=pi)


def marked_set(chain: MarkovChain, members: Iterable[int]) -> MarkedSet:
    members = frozenset(int(x) for x in members)
    for x in members:
        if not 0 <= x < chain.n:
            raise ValueError(f"marked state {x} outside 0..{chain.n - 1}")
    eps = float(sum(chain.pi[x] for x in members))
    return MarkedSet(members, eps)


def _as_marked(chain: MarkovChain, marked) -> MarkedSet:
    if isinstance(marked, MarkedSet):
        return marked
    return marked_set(chain, marked)


def _draw(cum: np.ndarray, u: float) -> int:
    return min(int(np.searchsorted(cum, u, side="right")), cum.shape[0] - 1)


def classical_search_1(chain: MarkovChain, marked, t1: int, t2: int, rng_seed=None) -> ClassicalRunStats:
    """Sample from pi, then up to ``t2`` rounds of: check; walk ``t1`` steps."""
    if t1 < 1 or t2 < 1:
        raise ValueError("t1 and t2 must be >= 1")
    marked = _as_marked(chain, marked)
    rows, start = chain._cumulative
    rng = np.random.default_rng(rng_seed)
    x = _draw(start, rng.random())
    steps = checks = 0
    found = None
    for _ in range(t2):
        checks += 1
        if x in marked.members:
            found = x
            break
        for u in rng.random(t1):
            x = _draw(rows[x], u)
        steps += t1
    return ClassicalRunStats(steps, found, 1, steps, checks, rng_seed)


def classical_search_2(chain: MarkovChain, marked, t: int, rng_seed=None) -> ClassicalRunStats:
    """Sample from pi, then up to ``t`` rounds of: check; one walk step."""
    if t < 1:
        raise ValueError("t must be >= 1")
    marked = _as_marked(chain, marked)
    rows, start = chain._cumulative
    rng = np.random.default_rng(rng_seed)
    x = _draw(start, rng.random())
    steps = checks = 0
    found = None
    members = marked.members
    for _ in range(t):
        checks += 1
        if x in members:
            found = x
            break
        x = _draw(rows[x], rng.random())
        steps += 1
    return ClassicalRunStats(steps, found, 1, steps, checks, rng_seed)


def monte_carlo(search, chain: MarkovChain, marked, seeds: Iterable[int], **params) -> list[ClassicalRunStats]:
    """Run ``search`` once per seed; deterministic per (seed, params)."""
    marked = _as_marked(chain, marked)
    return [search(chain, marked, rng_seed=int(s), **params) for s in seeds]


def default_search_lengths(delta: float, epsilon: float) -> dict:
    """t1 = ceil(1/delta), t2 = ceil(2/eps), t = ceil(3/(delta eps))."""
    return {
        "t1": math.ceil(1.0 / delta),
        "t2": math.ceil(2.0 / epsilon),
        "t": math.ceil(3.0 / (delta * epsilon)),
    }
