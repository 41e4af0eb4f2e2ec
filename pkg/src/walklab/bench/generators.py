"""Chain families used by the experiments."""

from __future__ import annotations

import dataclasses
import itertools
import json
from pathlib import Path
from typing import Optional

import numpy as np

from ..chain import MarkovChain, lazify, validate_chain
from ..errors import ParamError

FAMILIES = ("complete", "cycle_directed", "cycle_lazy", "torus2d", "johnson",
            "random_reversible", "random_irreducible", "file")

# positional order of parameters in the "family:a,b" shorthand
_POSITIONAL = {
    "complete": ("n",),
    "cycle_directed": ("n",),
    "cycle_lazy": ("n", "alpha"),
    "torus2d": ("n",),
    "johnson": ("m", "r"),
    "random_reversible": ("n", "seed", "alpha"),
    "random_irreducible": ("n", "seed"),
    "file": ("path",),
}


@dataclasses.dataclass(frozen=True)
class ChainSpec:
    family: str
    n: Optional[int] = None      # side length L for torus2d
    m: Optional[int] = None
    r: Optional[int] = None
    alpha: Optional[float] = None
    seed: Optional[int] = None
    path: Optional[str] = None

    @classmethod
    def from_obj(cls, obj) -> "ChainSpec":
        if isinstance(obj, ChainSpec):
            return obj
        if isinstance(obj, str):
            return cls.parse(obj)
        if not isinstance(obj, dict) or "family" not in obj:
            raise ParamError(f"chain spec needs a 'family' field: {obj!r}")
        fields = {f.name for f in dataclasses.fields(cls)}
        unknown = set(obj) - fields
        if unknown:
            raise ParamError(f"unknown chain parameters {sorted(unknown)}")
        return cls(**obj)

    @classmethod
    def parse(cls, text: str) -> "ChainSpec":
        """'complete:16', 'johnson:8,4', 'cycle_lazy:8,0.5', 'random_reversible:10,seed=3'."""
        family, _, rest = text.partition(":")
        family = family.strip()
        if family not in _POSITIONAL:
            raise ParamError(f"unknown chain family {family!r}; expected one of {FAMILIES}")
        kw = {}
        if family == "file":
            kw["path"] = rest
        elif rest:
            names = iter(_POSITIONAL[family])
            for tok in rest.split(","):
                key, eq, val = tok.partition("=")
                if not eq:
                    key, val = next(names, None), tok
                    if key is None:
                        raise ParamError(f"too many parameters in {text!r}")
                kw[key.strip()] = _number(val.strip())
        return cls.from_obj({"family": family, **kw})

    def as_dict(self) -> dict:
        return {k: v for k, v in dataclasses.asdict(self).items() if v is not None}


def _number(text: str):
    try:
        return int(text)
    except ValueError:
        try:
            return float(text)
        except ValueError:
            raise ParamError(f"not a number: {text!r}") from None


def _need_int(value, name, low):
    if value is None or int(value) != value or value < low:
        raise ParamError(f"{name} must be an integer >= {low}, got {value!r}")
    return int(value)


def _need_alpha(alpha):
    if alpha is None or not 0.0 < alpha < 1.0:
        raise ParamError(f"alpha must lie in (0, 1), got {alpha!r}")
    return float(alpha)


def complete(n: int) -> MarkovChain:
    """p_xy = 1/n for every y, self-loop included."""
    n = _need_int(n, "n", 1)
    return validate_chain(np.full((n, n), 1.0 / n))


def cycle_directed(n: int) -> MarkovChain:
    n = _need_int(n, "n", 2)
    return validate_chain(np.roll(np.eye(n), 1, axis=1))


def cycle_lazy(n: int, alpha: float = 0.5) -> MarkovChain:
    return lazify(cycle_directed(n), _need_alpha(alpha))


def torus2d(L: int) -> MarkovChain:
    """Uniform nearest-neighbour walk on the L x L torus (n = L^2)."""
    L = _need_int(L, "side length", 2)
    P = np.zeros((L * L, L * L))
    for i, j in itertools.product(range(L), repeat=2):
        x = i * L + j
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            P[x, ((i + di) % L) * L + (j + dj) % L] += 0.25
    return validate_chain(P)


def johnson_states(m: int, r: int) -> list:
    return list(itertools.combinations(range(m), r))


def johnson(m: int, r: int) -> MarkovChain:
    """Uniform swap of one element in / one out of an r-subset of {0..m-1}.

    States are the r-subsets in lexicographic order (see :func:`johnson_states`).
    """
    m = _need_int(m, "m", 2)
    r = _need_int(r, "r", 1)
    if r >= m:
        raise ParamError(f"johnson needs 1 <= r < m, got m={m}, r={r}")
    states = johnson_states(m, r)
    index = {s: i for i, s in enumerate(states)}
    moves = r * (m - r)
    P = np.zeros((len(states), len(states)))
    for s in states:
        inside = set(s)
        for a in s:
            for b in range(m):
                if b not in inside:
                    P[index[s], index[tuple(sorted(inside - {a} | {b}))]] += 1.0 / moves
    return validate_chain(P)


def random_reversible(n: int, seed: int = 0, alpha: float = 0.5, density: float = 0.5) -> MarkovChain:
    """Random symmetric weights (support includes a ring), row-normalized, then lazified."""
    n = _need_int(n, "n", 2)
    rng = np.random.default_rng(seed)
    W = rng.random((n, n)) * (rng.random((n, n)) < density)
    ring = np.roll(np.eye(n), 1, axis=1) * (0.5 + rng.random(n))[:, None]
    W = W + ring
    np.fill_diagonal(W, 0.0)
    W = W + W.T
    chain = validate_chain(W / W.sum(axis=1, keepdims=True), pi=W.sum(axis=1) / W.sum())
    return lazify(chain, _need_alpha(alpha))


def random_irreducible(n: int, seed: int = 0, density: float = 0.5, lazy: bool = False) -> MarkovChain:
    """Random non-reversible chain on a support containing a directed ring."""
    n = _need_int(n, "n", 2)
    rng = np.random.default_rng(seed)
    W = rng.random((n, n)) * (rng.random((n, n)) < density)
    W += np.roll(np.eye(n), 1, axis=1) * (0.5 + rng.random(n))[:, None]
    if lazy:
        W += np.diag(0.5 + rng.random(n))
    return validate_chain(W / W.sum(axis=1, keepdims=True))


def load_matrix(path) -> np.ndarray:
    """CSV of rows, or JSON {"n": n, "rows": [[...], ...]}."""
    path = Path(path)
    if not path.exists():
        raise ParamError(f"chain file {path} not found")
    if path.suffix.lower() == ".json":
        obj = json.loads(path.read_text(encoding="utf-8"))
        P = np.array(obj["rows"], dtype=float)
        if "n" in obj and P.shape != (obj["n"], obj["n"]):
            raise ParamError(f"{path}: declared n={obj['n']} but rows have shape {P.shape}")
        return P
    return np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=float))


def generate(spec) -> MarkovChain:
    spec = ChainSpec.from_obj(spec)
    f = spec.family
    if f == "complete":
        return complete(spec.n)
    if f == "cycle_directed":
        return cycle_directed(spec.n)
    if f == "cycle_lazy":
        return cycle_lazy(spec.n, 0.5 if spec.alpha is None else spec.alpha)
    if f == "torus2d":
        return torus2d(spec.n)
    if f == "johnson":
        return johnson(spec.m, spec.r)
    if f == "random_reversible":
        return random_reversible(spec.n, spec.seed or 0, 0.5 if spec.alpha is None else spec.alpha)
    if f == "random_irreducible":
        return random_irreducible(spec.n, spec.seed or 0)
    if f == "file":
        if not spec.path:
            raise ParamError("file family needs a path")
        return validate_chain(load_matrix(spec.path))
    raise ParamError(f"unknown chain family {f!r}; expected one of {FAMILIES}")


def resolve_marked(spec, chain: MarkovChain, rule) -> list:
    """Marked states from an explicit list, "none", or {"contains": [..]} on Johnson chains."""
    spec = ChainSpec.from_obj(spec)
    if rule is None or rule == "none":
        return []
    if isinstance(rule, dict):
        if set(rule) == {"contains"}:
            if spec.family != "johnson":
                raise ParamError("the 'contains' rule applies to johnson chains only")
            need = set(rule["contains"])
            return [i for i, s in enumerate(johnson_states(spec.m, spec.r)) if need <= set(s)]
        if set(rule) == {"first"}:
            return list(range(_need_int(rule["first"], "first", 0)))
        raise ParamError(f"unknown marked rule {rule!r}")
    out = sorted({int(x) for x in rule})
    if out and not (0 <= out[0] and out[-1] < chain.n):
        raise ParamError(f"marked states must lie in 0..{chain.n - 1}")
    return out


def parse_marked(text: str):
    """CLI form: '0,3,5', 'none', 'contains:0,1' or 'first:4'."""
    text = text.strip()
    if text == "none" or text == "":
        return "none"
    for key in ("contains", "first"):
        if text.startswith(key + ":"):
            body = text[len(key) + 1:]
            return {key: [int(v) for v in body.split(",")]} if key == "contains" else {key: int(body)}
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise ParamError(f"cannot parse marked set {text!r}") from None


def describe(spec) -> str:
    spec = ChainSpec.from_obj(spec)
    args = ",".join(f"{k}={v}" for k, v in spec.as_dict().items() if k != "family")
    return f"{spec.family}({args})"

