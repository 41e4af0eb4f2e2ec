"""Config-driven runs: one JSON object per run, CSV tables for sweeps.

Config schema (JSON)::

    {
      "schema": "spectrum" | "classical1" | "classical2" | "grover" | "quantum"
                | "recursive" | "reflect_error",
      "chain": {"family": "johnson", "m": 8, "r": 4}  or  "johnson:8,4",
      "marked": [0, 3] | "none" | {"contains": [0, 1]} | {"first": 4},
      "mode": "exact" | "spectral" | "circuit",
      "gamma": 0.1, "k": null, "s": null, "iters": null,
      "seeds": 1000, "seed": 0, "t1": null, "t2": null, "t": null,
      "k_range": [1, 2, 3, 4, 5, 6], "trials": 0, "beta_variant": "pi3",
      "sweep": [{...overrides...}, ...],
      "output": "result.json", "csv": "table.csv"
    }
"""

from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
import datetime as _dt
import io
import json
import math
import os
from pathlib import Path
from typing import Any, Optional

import numpy as np

from ..chain import (classical_search_1, classical_search_2, default_search_lengths, eigenvalue_gap, marked_set,
                     monte_carlo)
from ..errors import DegenerateSpectrum, ParamError, WalklabError
from ..reflect import Mode, PhaseEstimationSpec, auto_s, reflection_error
from ..search import cost_recursion_check, grover_iterations, ideal_grover, quantum_search, recursive_search
from ..spectral import build_discriminant, check_unit_multiplicity, perron_residual, spectrum_summary
from ..walk import build_walk, verify_walk_spectrum
from .generators import ChainSpec, generate, resolve_marked

SCHEMAS = ("spectrum", "classical1", "classical2", "grover", "quantum", "recursive", "reflect_error")
SWEEP_COLUMNS = {
    "recursive": ("epsilon", "t", "total_U", "total_C", "success"),
    "quantum": ("epsilon", "iterations", "k", "total_U", "total_C", "success"),
    "grover": ("epsilon", "iterations", "success"),
    "classical1": ("epsilon", "trials", "success_rate", "mean_steps", "mean_checks"),
    "classical2": ("epsilon", "trials", "success_rate", "mean_steps", "mean_checks"),
    "spectrum": ("n", "sv_gap", "phase_gap", "eigenvalue_gap", "unit_multiplicity"),
    "reflect_error": ("k", "max_error", "fitted_c"),
}


@dataclasses.dataclass
class ExperimentConfig:
    chain: Any
    schema: str = "spectrum"
    marked: Any = "none"
    mode: str = "spectral"
    gamma: float = 0.1
    k: Optional[int] = None
    s: Optional[int] = None
    iters: Optional[int] = None
    seeds: int = 1000
    seed: int = 0
    t1: Optional[int] = None
    t2: Optional[int] = None
    t: Optional[int] = None
    k_range: list = dataclasses.field(default_factory=lambda: [1, 2, 3, 4, 5, 6])
    trials: int = 0
    beta_variant: str = "pi3"
    vote: str = "any"
    sweep: Optional[list] = None
    output: Optional[str] = None
    csv: Optional[str] = None

    def __post_init__(self):
        self.chain = ChainSpec.from_obj(self.chain)
        if self.schema not in SCHEMAS:
            raise ParamError(f"unknown schema {self.schema!r}; expected one of {SCHEMAS}")
        Mode(self.mode)
        if self.schema in ("recursive", "grover") and self.marked in ("none", None, []):
            raise ParamError(f"schema {self.schema!r} needs a nonempty marked set")
        if self.sweep is not None and not isinstance(self.sweep, list):
            raise ParamError("'sweep' must be a list of override objects")

    @classmethod
    def from_dict(cls, obj: dict, **overrides) -> "ExperimentConfig":
        fields = {f.name for f in dataclasses.fields(cls)}
        merged = {**obj, **{k: v for k, v in overrides.items() if v is not None}}
        unknown = set(merged) - fields
        if unknown:
            raise ParamError(f"unknown config keys {sorted(unknown)}")
        if "chain" not in merged:
            raise ParamError("config needs a 'chain'")
        return cls(**merged)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["chain"] = self.chain.as_dict()
        return d


def load_config(path, **overrides) -> ExperimentConfig:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return ExperimentConfig.from_dict(obj, **overrides)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _spectral_block(chain) -> dict:
    try:
        return spectrum_summary(chain)
    except WalklabError as exc:
        return {"error": {"type": type(exc).__name__, "message": str(exc)}}


def _run_spectrum(cfg, chain, marked, inv) -> dict:
    disc = build_discriminant(chain)
    out = {"flags": chain.flags(), "perron_residual": perron_residual(disc, chain)}
    inv["perron_residual"] = out["perron_residual"] <= 1e-9
    try:
        check_unit_multiplicity(disc, chain)
        inv["unit_multiplicity_rule"] = True
    except AssertionError as exc:
        inv["unit_multiplicity_rule"] = False
        out["violation"] = str(exc)
    if chain.n <= 64:
        report = verify_walk_spectrum(build_walk(chain), disc)
        out["walk_check"] = report
        inv["walk_spectrum"] = True  # verify_walk_spectrum raises on mismatch
    if disc.phase_gap is None:
        raise DegenerateSpectrum(f"all {disc.n} singular values equal 1; phase gap undefined")
    return out


def _run_classical(cfg, chain, marked, inv) -> dict:
    delta = eigenvalue_gap(chain)
    lens = default_search_lengths(delta, marked.epsilon) if marked.epsilon > 0 and delta > 0 else {}
    seeds = range(cfg.seed, cfg.seed + int(cfg.seeds))
    if cfg.schema == "classical1":
        t1 = cfg.t1 or lens.get("t1")
        t2 = cfg.t2 or lens.get("t2")
        if t1 is None or t2 is None:
            raise ParamError("classical1 needs t1 and t2 (no default without a gap and a marked set)")
        runs = monte_carlo(classical_search_1, chain, marked, seeds, t1=t1, t2=t2)
        params = {"t1": t1, "t2": t2}
    else:
        t = cfg.t or lens.get("t")
        if t is None:
            raise ParamError("classical2 needs t (no default without a gap and a marked set)")
        runs = monte_carlo(classical_search_2, chain, marked, seeds, t=t)
        params = {"t": t}
    found = [r.found is not None for r in runs]
    inv["found_are_marked"] = all(r.found in marked.members for r in runs if r.found is not None)
    return {
        **params,
        "delta": delta,
        "trials": len(runs),
        "success_rate": float(np.mean(found)),
        "mean_steps": float(np.mean([r.steps_taken for r in runs])),
        "mean_checks": float(np.mean([r.check_count for r in runs])),
        "total_setup": int(sum(r.setup_count for r in runs)),
        "total_update": int(sum(r.update_count for r in runs)),
        "total_check": int(sum(r.check_count for r in runs)),
    }


def _run_grover(cfg, chain, marked, inv) -> dict:
    iters = cfg.iters if cfg.iters is not None else grover_iterations(marked.epsilon)
    o = ideal_grover(chain, marked, iters)
    closed = math.sin((2 * iters + 1) * math.asin(math.sqrt(marked.epsilon))) ** 2
    inv["closed_form"] = abs(o.success_probability - closed) <= 1e-9
    inv["norm"] = o.norm_drift <= 1e-9
    return {**o.summary(), "closed_form_success": closed}


def _run_quantum(cfg, chain, marked, inv) -> dict:
    o = quantum_search(chain, marked, iterations=cfg.iters, mode=cfg.mode, k=cfg.k, s=cfg.s)
    inv["hybrid_bound"] = o.hybrid_bound_ok
    inv["norm"] = o.norm_drift <= 1e-9
    return o.summary()


def _run_recursive(cfg, chain, marked, inv) -> dict:
    o = recursive_search(chain, marked, cfg.gamma, cfg.mode, beta_variant=cfg.beta_variant, vote=cfg.vote)
    inv["level_bounds"] = o.hybrid_bound_ok
    inv["norm"] = o.norm_drift <= 1e-9
    inv["projection"] = math.sqrt(o.success_probability) >= 1 / math.sqrt(2) - cfg.gamma - 1e-12
    cost = cost_recursion_check(o.schedule, o.level_meters, cfg.mode)
    inv["cost_recursion"] = True
    return {**o.summary(), "schedule": o.schedule.as_dict(), "cost": cost,
            "final_projection": math.sqrt(o.success_probability)}


def _run_reflect(cfg, chain, marked, inv) -> dict:
    disc = build_discriminant(chain)
    if disc.phase_gap is None:
        raise DegenerateSpectrum("reflection error needs a phase gap")
    s = cfg.s or auto_s(disc.phase_gap)
    ks = [int(k) for k in cfg.k_range]
    spec = PhaseEstimationSpec(s, cfg.k or ks[0], cfg.mode, cfg.vote)
    rep = reflection_error(build_walk(chain), spec, trials=cfg.trials, seed=cfg.seed, k_values=ks)
    inv["pi_fidelity"] = rep.pi_fidelity >= 1 - 1e-9
    inv["sampled_within_max"] = all(e <= rep.max_error + 1e-9 for e in rep.sampled_errors)
    rows = [{"k": k, "max_error": rep.errors_by_k[k], "fitted_c": rep.fitted_c} for k in ks]
    return {"s": s, "k": spec.k, "max_error": rep.max_error, "pi_fidelity": rep.pi_fidelity,
            "phases": rep.phases, "zero_outcome_probs": rep.zero_outcome_probs, "leakage": rep.leakage,
            "sampled_errors": rep.sampled_errors, "fitted_c": rep.fitted_c, "rows": rows}


_RUNNERS = {
    "spectrum": _run_spectrum,
    "classical1": _run_classical,
    "classical2": _run_classical,
    "grover": _run_grover,
    "quantum": _run_quantum,
    "recursive": _run_recursive,
    "reflect_error": _run_reflect,
}


def run_single(cfg: ExperimentConfig) -> dict:
    """One run; module errors are captured into a structured ``error`` field."""
    record = {"schema": cfg.schema, "chain": cfg.chain.as_dict(), "mode": cfg.mode}
    inv = {}
    try:
        chain = generate(cfg.chain)
        members = resolve_marked(cfg.chain, chain, cfg.marked)
        marked = marked_set(chain, members)
        record.update(marked=members, epsilon=marked.epsilon, n=chain.n)
        record["spectral"] = _spectral_block(chain)
        record["outcome"] = _RUNNERS[cfg.schema](cfg, chain, marked, inv)
        record["error"] = None
    except (WalklabError, ValueError, ArithmeticError, MemoryError, AssertionError, RuntimeError) as exc:
        record["error"] = {"type": type(exc).__name__, "message": str(exc)}
    record["invariants"] = inv
    record["ok"] = record["error"] is None and all(inv.values())
    return record


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("WALKLAB_THREADS", "1")))
    except ValueError:
        return 1


def sweep_row(record: dict) -> dict:
    out = record.get("outcome") or {}
    schema = record["schema"]
    row = {"epsilon": record.get("epsilon"), "success": out.get("success_probability"),
           "iterations": out.get("iterations"), "k": out.get("k")}
    meter = out.get("meter") or {}
    row["total_U"] = meter.get("update_units")
    row["total_C"] = meter.get("check_units")
    if schema == "recursive":
        row["t"] = out.get("iterations")
    if schema.startswith("classical"):
        row.update({k: out.get(k) for k in ("trials", "success_rate", "mean_steps", "mean_checks")})
    if schema == "spectrum":
        spec = record.get("spectral") or {}
        row.update({k: spec.get(k) for k in ("n", "sv_gap", "phase_gap", "eigenvalue_gap")})
        row["unit_multiplicity"] = spec.get("unit_multiplicity")
    return {c: row.get(c) for c in SWEEP_COLUMNS[schema]}


def to_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(["" if r.get(c) is None else repr(float(r[c])) if isinstance(r[c], float) else r[c]
                    for c in columns])
    return buf.getvalue()


def run_experiment(cfg: ExperimentConfig, *, timestamp: bool = True) -> tuple[dict, Optional[str]]:
    """Execute ``cfg`` (and its sweep, if any); write the requested files.

    Returns the JSON document and the CSV text (None when there is no table).
    """
    if cfg.sweep:
        variants = [cfg.replace(sweep=None, **o) for o in cfg.sweep]
        with concurrent.futures.ThreadPoolExecutor(max_workers=_threads()) as pool:
            runs = list(pool.map(run_single, variants))
        doc = {"runs": runs, "ok": all(r["ok"] for r in runs)}
        table = to_csv(SWEEP_COLUMNS[cfg.schema], [sweep_row(r) for r in runs])
    else:
        doc = run_single(cfg)
        table = None
        if cfg.schema == "reflect_error" and doc.get("outcome"):
            table = to_csv(SWEEP_COLUMNS["reflect_error"], doc["outcome"]["rows"])
    doc["config"] = cfg.as_dict()
    if timestamp:
        doc["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    if cfg.output:
        Path(cfg.output).write_text(dumps(doc), encoding="utf-8")
    if cfg.csv and table is not None:
        Path(cfg.csv).write_text(table, encoding="utf-8")
    return doc, table
