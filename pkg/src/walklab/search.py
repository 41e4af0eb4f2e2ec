"""Grover-type searches driven by the walk.

Three schemas share one state layout, the edge axis of length n*n followed by
any ancilla axes:

* ``ideal_grover``: (2|pi><pi| - Id)(Id - 2 Pi_M) applied exactly.
* ``quantum_search``: the same loop with the reflection about |pi> replaced by
  the phase-estimation reflection R(P).
* ``recursive_search``: A_i = A_{i-1} G_i A_{i-1}^dagger F A_{i-1}, A_0 = Id,
  F the marked flip and G_i an approximate reflection about |pi>|0> with its
  own ancilla registers, sized so its error is at most beta_i.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Optional, Sequence

import numpy as np

from .chain import MarkedSet, MarkovChain, _as_marked
from .errors import DegenerateSpectrum, DepthCap, GammaOutOfRange, RecursionMismatch
from .meter import CostMeter
from .reflect import Mode, PhaseEstimationSpec, Reflection, auto_s, fit_decay_constant, max_error
from .spectral import build_discriminant
from .walk import WalkOperator, build_walk

__all__ = [
    "CostMeter", "SearchOutcome", "RecursionSchedule", "marked_flip", "ideal_grover",
    "grover_iterations", "default_k", "quantum_search", "make_schedule", "recursive_search",
    "cost_recursion_check",
]

# Slack added to bounds that may be exactly 0 (e.g. a reflection whose error
# vanishes because every eigenphase sits on the estimation grid).
FLOAT_FLOOR = 1e-12
MAX_DEPTH = 12


@dataclasses.dataclass
class SearchOutcome:
    success_probability: float
    element_distribution: np.ndarray
    deviation_trace: list
    meter: CostMeter
    angles: list
    epsilon: float
    iterations: int
    mode: str = "ideal"
    s: Optional[int] = None
    k: Optional[int] = None
    ideal_success: Optional[float] = None
    max_reflection_error: float = 0.0
    hybrid_bound_ok: bool = True
    levels: list = dataclasses.field(default_factory=list)
    level_meters: list = dataclasses.field(default_factory=list)
    norm_drift: float = 0.0
    schedule: object = None

    def summary(self) -> dict:
        out = {
            "success_probability": self.success_probability,
            "epsilon": self.epsilon,
            "iterations": self.iterations,
            "mode": self.mode,
            "s": self.s,
            "k": self.k,
            "ideal_success": self.ideal_success,
            "max_reflection_error": self.max_reflection_error,
            "hybrid_bound_ok": self.hybrid_bound_ok,
            "deviation_trace": [float(d) for d in self.deviation_trace],
            "angles": [float(a) for a in self.angles],
            "element_distribution": [float(p) for p in self.element_distribution],
            "meter": self.meter.as_dict(),
            "norm_drift": self.norm_drift,
        }
        if self.levels:
            out["levels"] = self.levels
            out["level_meters"] = [m.as_dict() for m in self.level_meters]
        return out


def _row_mask(marked: MarkedSet, n: int) -> np.ndarray:
    """Boolean mask over the edge axis selecting |x>|y> with x in M."""
    return np.repeat(marked.mask(n), n)


def marked_flip(state: np.ndarray, marked: MarkedSet, n: int, meter: CostMeter | None = None) -> np.ndarray:
    """Negate every amplitude whose first edge index is marked."""
    out = np.array(state, dtype=complex, copy=True)
    out[_row_mask(marked, n)] *= -1.0
    if meter is not None:
        meter.check_units += 1
    return out


def _marked_weight(state: np.ndarray, marked: MarkedSet, n: int) -> float:
    return float(np.sum(np.abs(state[_row_mask(marked, n)]) ** 2))


def _element_distribution(state: np.ndarray, n: int) -> np.ndarray:
    p = np.abs(state.reshape(n, -1)) ** 2
    return p.sum(axis=1)


def _pi_edge(chain: MarkovChain) -> np.ndarray:
    return (np.sqrt(chain.pi)[:, None] * np.sqrt(chain.P)).reshape(-1).astype(complex)


def grover_iterations(epsilon: float) -> int:
    """floor(pi / (4 arcsin sqrt(eps)))."""
    return math.floor(math.pi / (4.0 * math.asin(math.sqrt(epsilon))))


def default_k(epsilon: float) -> int:
    """ceil(log2(1/sqrt(eps))) + 2 phase-estimation rounds."""
    return math.ceil(math.log2(1.0 / math.sqrt(epsilon)) - 1e-12) + 2


def ideal_grover(chain: MarkovChain, marked, iterations: int) -> SearchOutcome:
    """Exact rotation by 2 arcsin(sqrt(eps)) per iteration, starting from |pi>."""
    marked = _as_marked(chain, marked)
    if not len(marked):
        raise ValueError("ideal_grover needs a nonempty marked set")
    n = chain.n
    pi = _pi_edge(chain)
    psi = pi.copy()
    meter = CostMeter(setup_units=1, update_units=1)
    angles = [math.sqrt(_marked_weight(psi, marked, n))]
    for _ in range(iterations):
        psi = marked_flip(psi, marked, n, meter)
        psi = 2.0 * pi * np.vdot(pi, psi) - psi
        angles.append(math.sqrt(_marked_weight(psi, marked, n)))
    p = _marked_weight(psi, marked, n)
    return SearchOutcome(p, _element_distribution(psi, n), [0.0] * (iterations + 1), meter, angles,
                         marked.epsilon, iterations, ideal_success=p,
                         norm_drift=abs(float(np.linalg.norm(psi)) - 1.0))


def _require_gap(chain: MarkovChain):
    disc = build_discriminant(chain)
    if disc.phase_gap is None or disc.unit_sv_multiplicity != 1:
        raise DegenerateSpectrum(
            f"search needs a single unit singular value and a phase gap "
            f"(unit multiplicity {disc.unit_sv_multiplicity})")
    return disc


def quantum_search(chain: MarkovChain, marked, spec: PhaseEstimationSpec | None = None,
                   iterations: int | None = None, *, mode: str = "spectral", k: int | None = None,
                   s: int | None = None, walk: WalkOperator | None = None) -> SearchOutcome:
    """Alternate the marked flip with R(P), tracking the distance to ideal Grover.

    An empty marked set runs the budget for eps = min_x pi_x and reports 0.
    """
    marked = _as_marked(chain, marked)
    disc = _require_gap(chain)
    n = chain.n
    eps = marked.epsilon if len(marked) else float(chain.pi.min())
    if spec is None:
        spec = PhaseEstimationSpec(s if s is not None else auto_s(disc.phase_gap),
                                   k if k is not None else default_k(eps), mode)
    if iterations is None:
        iterations = grover_iterations(eps)
    walk = walk if walk is not None else build_walk(chain)
    R = Reflection(walk, spec)
    worst = max_error(walk, spec)

    meter = CostMeter(setup_units=1, update_units=1)  # prepare |pi>
    pi = _pi_edge(chain)
    ideal = pi.copy()
    psi = R.initial(pi)
    lead = (slice(None),) + (0,) * len(R.ancilla_shape)
    trace = [0.0]
    angles = [math.sqrt(_marked_weight(psi, marked, n))]
    for _ in range(iterations):
        psi = marked_flip(psi, marked, n, meter)
        psi = R.apply(psi, meter)
        ideal = marked_flip(ideal, marked, n)
        ideal = 2.0 * pi * np.vdot(pi, ideal) - ideal
        embedded = np.zeros_like(psi)
        embedded[lead] = ideal
        trace.append(float(np.linalg.norm(psi - embedded)))
        angles.append(math.sqrt(_marked_weight(psi, marked, n)))

    hybrid = all(d <= i * worst + FLOAT_FLOOR for i, d in enumerate(trace))
    p = _marked_weight(psi, marked, n) if len(marked) else 0.0
    ideal_p = _marked_weight(ideal, marked, n) if len(marked) else 0.0
    return SearchOutcome(p, _element_distribution(psi, n), trace, meter, angles, marked.epsilon,
                         iterations, spec.mode.value, spec.s, spec.k, ideal_p, worst, hybrid,
                         norm_drift=abs(float(np.linalg.norm(psi)) - 1.0))


# -- recursive schema ---------------------------------------------------------------

BETA_CONSTANTS = {"pi3": 18.0 / (4.0 * math.pi ** 3), "pi2": 18.0 / (4.0 * math.pi ** 2)}


@dataclasses.dataclass
class RecursionSchedule:
    gamma: float
    t: int
    betas: list
    s_list: list
    k_list: list
    epsilon: float
    phi0: float
    beta_variant: str = "pi3"
    level_errors: list = dataclasses.field(default_factory=list)
    fitted_c: Optional[float] = None

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def recursion_depth(epsilon: float) -> int:
    """Smallest t >= 0 with 3^t arcsin(sqrt(eps)) in [pi/4, 3pi/4]."""
    phi = math.asin(math.sqrt(epsilon))
    t = 0
    while 3 ** t * phi < math.pi / 4:
        t += 1
    return t


def make_schedule(epsilon: float, gamma: float, *, walk: WalkOperator | None = None,
                  beta_variant: str = "pi3", k_max: int = 24, vote: str = "any") -> RecursionSchedule:
    """Depth, per-level error budgets and, given a walk, the ancilla sizes per level.

    k_i is the smallest round count whose measured worst-case reflection
    error is at most beta_i.
    """
    if not 0.0 < gamma <= 1.0 / math.sqrt(2.0) + 1e-15:
        raise GammaOutOfRange(f"gamma must lie in (0, 1/sqrt(2)], got {gamma}")
    if not 0.0 < epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon}")
    t = recursion_depth(epsilon)
    if t > MAX_DEPTH:
        raise DepthCap(f"recursion depth {t} exceeds {MAX_DEPTH}")
    const = BETA_CONSTANTS[beta_variant]
    betas = [const * gamma / i ** 2 for i in range(1, t + 1)]
    sched = RecursionSchedule(gamma, t, betas, [], [], epsilon, math.asin(math.sqrt(epsilon)), beta_variant)
    if walk is None or t == 0:
        return sched

    disc = build_discriminant(walk.chain)
    if disc.phase_gap is None:
        raise DegenerateSpectrum("recursive search needs a phase gap")
    s = auto_s(disc.phase_gap)
    errs = {}

    def err(k):
        if k not in errs:
            errs[k] = max_error(walk, PhaseEstimationSpec(s, k, Mode.SPECTRAL, vote))
        return errs[k]

    for beta in betas:
        k = 1
        while err(k) > beta:
            k += 1
            if k > k_max:
                raise DepthCap(f"no k <= {k_max} brings the reflection error below {beta:.3e}")
        sched.s_list.append(s)
        sched.k_list.append(k)
        sched.level_errors.append(err(k))
    ks = sorted(errs)
    sched.fitted_c = fit_decay_constant(ks, [errs[k] for k in ks])
    return sched


class _Recursion:
    """Applies A_i and A_i^dagger on the joint layout (edge, level-1 registers, ..., level-t registers)."""

    def __init__(self, walk: WalkOperator, marked: MarkedSet, sched: RecursionSchedule, mode: Mode, vote: str):
        self.walk = walk
        self.n = walk.n
        self.marked = marked
        self.refl = []
        for s, k in zip(sched.s_list, sched.k_list):
            self.refl.append(Reflection(walk, PhaseEstimationSpec(s, k, mode, vote)))
        self.offsets = []
        off = 1
        for R in self.refl:
            self.offsets.append(off)
            off += len(R.ancilla_shape)
        self.shape = (walk.dim,) + sum((R.ancilla_shape for R in self.refl), ())

    def gate(self, i: int, X: np.ndarray, meter: CostMeter) -> np.ndarray:
        """G_i: R(beta_i) where every other level's registers are 0, -Id elsewhere."""
        R = self.refl[i - 1]
        width = len(R.ancilla_shape)
        own = list(range(self.offsets[i - 1], self.offsets[i - 1] + width))
        Y = np.moveaxis(X, own, list(range(1, 1 + width)))
        moved = Y.shape
        Y = Y.reshape(moved[: 1 + width] + (-1,))
        out = -Y
        out[..., 0] = R.apply(np.ascontiguousarray(Y[..., 0]), meter)
        out = out.reshape(moved)
        return np.moveaxis(out, list(range(1, 1 + width)), own)

    def forward(self, i: int, X: np.ndarray, meter: CostMeter) -> np.ndarray:
        if i == 0:
            return X
        Y = self.forward(i - 1, X, meter)
        Y = marked_flip(Y, self.marked, self.n, meter)
        Y = self.backward(i - 1, Y, meter)
        Y = self.gate(i, Y, meter)
        return self.forward(i - 1, Y, meter)

    def backward(self, i: int, X: np.ndarray, meter: CostMeter) -> np.ndarray:
        # every factor is Hermitian, so the adjoint just reverses the order
        if i == 0:
            return X
        Y = self.backward(i - 1, X, meter)
        Y = self.gate(i, Y, meter)
        Y = self.forward(i - 1, Y, meter)
        Y = marked_flip(Y, self.marked, self.n, meter)
        return self.backward(i - 1, Y, meter)


def error_bounds(sched: RecursionSchedule) -> list:
    """e~_0 = 0, e~_{i+1} = 4 beta_{i+1} 3^i phi_0 + 3 e~_i."""
    bounds = [0.0]
    for i, beta in enumerate(sched.betas):
        bounds.append(4.0 * beta * 3 ** i * sched.phi0 + 3.0 * bounds[-1])
    return bounds


def recursive_search(chain: MarkovChain, marked, gamma: float, mode: str = "spectral", *,
                     schedule: RecursionSchedule | None = None, beta_variant: str = "pi3",
                     vote: str = "any", walk: WalkOperator | None = None) -> SearchOutcome:
    """Run A_1 .. A_t from |pi>|0>, each on its own meter, and check the per-level bounds."""
    marked = _as_marked(chain, marked)
    if not len(marked):
        raise ValueError("recursive search needs a nonempty marked set")
    _require_gap(chain)
    mode = Mode(mode)
    walk = walk if walk is not None else build_walk(chain)
    sched = schedule or make_schedule(marked.epsilon, gamma, walk=walk, beta_variant=beta_variant, vote=vote)
    rec = _Recursion(walk, marked, sched, mode, vote)
    n = chain.n

    start = np.zeros(rec.shape, dtype=complex)
    start[(slice(None),) + (0,) * (len(rec.shape) - 1)] = _pi_edge(chain)
    bounds = error_bounds(sched)
    angles = [math.sqrt(_marked_weight(start, marked, n))]
    meters = [CostMeter()]
    levels = []
    psi = start
    for i in range(1, sched.t + 1):
        m = CostMeter()
        psi = rec.forward(i, start, m)
        meters.append(m)
        sin_i = math.sqrt(_marked_weight(psi, marked, n))
        target = math.sin(3 ** i * sched.phi0)
        e_i = abs(sin_i - target)
        phibar = 3 ** i * sched.phi0
        levels.append({
            "level": i,
            "beta": sched.betas[i - 1],
            "s": sched.s_list[i - 1],
            "k": sched.k_list[i - 1],
            "reflection_error": 0.0 if mode is Mode.EXACT else sched.level_errors[i - 1],
            "sin_phi": sin_i,
            "sin_target": target,
            "e": e_i,
            "e_tilde": bounds[i],
            "gamma_bound": gamma * phibar / math.pi,
            "within_e_tilde": e_i <= bounds[i] + FLOAT_FLOOR,
            "within_gamma_bound": e_i <= gamma * phibar / math.pi + FLOAT_FLOOR,
        })
        angles.append(sin_i)

    total = meters[-1] + CostMeter(setup_units=1, update_units=1)
    p = _marked_weight(psi, marked, n)
    ok = all(l["within_e_tilde"] and l["within_gamma_bound"] for l in levels)
    out = SearchOutcome(p, _element_distribution(psi, n), [l["e"] for l in levels], total, angles,
                        marked.epsilon, sched.t, mode.value,
                        sched.s_list[0] if sched.s_list else None,
                        sched.k_list[-1] if sched.k_list else None,
                        math.sin(3 ** sched.t * sched.phi0) ** 2,
                        max(sched.level_errors, default=0.0) if mode is not Mode.EXACT else 0.0,
                        ok, levels, meters, abs(float(np.linalg.norm(psi)) - 1.0), sched)
    return out


def level_walk_calls(sched: RecursionSchedule, mode: str) -> list:
    """Controlled-walk calls charged by one application of G_i, per level."""
    if Mode(mode) is Mode.EXACT:
        return [0] * sched.t
    return [k * 2 ** (s + 1) for s, k in zip(sched.s_list, sched.k_list)]


def cost_recursion_check(sched: RecursionSchedule, meter_per_level: Sequence[CostMeter], mode: str = "spectral",
                         c1: float = 1.0, c2: float = 1.0) -> dict:
    """Verify Cost(i) = 3 Cost(i-1) + level cost exactly, for checks and walk calls.

    ``meter_per_level[i]`` is the meter of a run of A_i alone (index 0 is A_0 = Id).
    Also reports K = total U / ((1/sqrt(eps)) (c1 log2(1/gamma) + c2)).
    """
    calls = level_walk_calls(sched, mode)
    if len(meter_per_level) != sched.t + 1:
        raise RecursionMismatch(f"expected {sched.t + 1} level meters, got {len(meter_per_level)}")
    rows = []
    for i in range(1, sched.t + 1):
        prev, cur = meter_per_level[i - 1], meter_per_level[i]
        want_c = 3 * prev.check_units + 1
        want_w = 3 * prev.cwalk_calls + calls[i - 1]
        want_u = 3 * prev.update_units + 4 * calls[i - 1]
        if (cur.check_units, cur.cwalk_calls, cur.update_units) != (want_c, want_w, want_u):
            raise RecursionMismatch(
                f"level {i}: got C={cur.check_units}, cW={cur.cwalk_calls}, U={cur.update_units}; "
                f"recursion gives C={want_c}, cW={want_w}, U={want_u}")
        rows.append({"level": i, "check_units": cur.check_units, "cwalk_calls": cur.cwalk_calls,
                     "update_units": cur.update_units})
    total_u = meter_per_level[-1].update_units
    scale = (1.0 / math.sqrt(sched.epsilon)) * (c1 * math.log2(1.0 / sched.gamma) + c2)
    return {"levels": rows, "total_update_units": total_u,
            "total_check_units": meter_per_level[-1].check_units, "K": total_u / scale}
