"""walklab command line.

    walklab spectrum --chain cycle_directed:8
    walklab search --config run.json --mode exact
    walklab reflect-error --chain random_reversible:6,seed=2 --k-range 1,2,3,4,5,6
    walklab sweep --config sweep.json --csv table.csv

Flags override the matching config keys.  Exit status is 0 iff every run
finished without error and all of its invariant checks passed.
"""

from __future__ import annotations

import argparse
import sys

from .bench.experiment import ExperimentConfig, dumps, load_config, run_experiment
from .bench.generators import parse_marked
from .errors import WalklabError

# subcommand -> schema used when the config does not name a compatible one
_DEFAULT_SCHEMA = {
    "spectrum": ("spectrum", ("spectrum",)),
    "classical": ("classical2", ("classical1", "classical2")),
    "search": ("quantum", ("quantum", "grover")),
    "recursive-search": ("recursive", ("recursive",)),
    "reflect-error": ("reflect_error", ("reflect_error",)),
    "sweep": (None, None),
}


def _ints(text):
    return [int(v) for v in text.split(",")]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="walklab", description="Quantum walk search experiments.")
    p.add_argument("command", choices=sorted(_DEFAULT_SCHEMA))
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--chain", help="chain spec, e.g. complete:16, johnson:8,4, file:P.csv")
    p.add_argument("--marked", type=parse_marked, help="'0,3', 'none', 'contains:0,1' or 'first:4'")
    p.add_argument("--schema", help="override the schema (classical1, classical2, grover, ...)")
    p.add_argument("--mode", choices=["exact", "spectral", "circuit"])
    p.add_argument("--gamma", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--seeds", type=int, help="number of Monte Carlo trials")
    p.add_argument("--t1", type=int)
    p.add_argument("--t2", type=int)
    p.add_argument("--t", type=int)
    p.add_argument("--k-range", type=_ints, dest="k_range")
    p.add_argument("--trials", type=int)
    p.add_argument("--beta-variant", choices=["pi3", "pi2"], dest="beta_variant")
    p.add_argument("--vote", choices=["any", "majority"])
    p.add_argument("--output", help="write the JSON document here instead of stdout")
    p.add_argument("--csv", help="write the CSV table here")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")
    return p


def make_config(args) -> ExperimentConfig:
    keys = ("chain", "marked", "schema", "mode", "gamma", "k", "s", "iters", "seed", "seeds", "t1", "t2", "t",
            "k_range", "trials", "beta_variant", "vote", "output", "csv")
    overrides = {k: getattr(args, k) for k in keys}
    if args.config:
        cfg = load_config(args.config, **overrides)
    else:
        if not args.chain:
            raise WalklabError("give --config or --chain")
        cfg = ExperimentConfig.from_dict({}, **overrides)
    default, allowed = _DEFAULT_SCHEMA[args.command]
    if args.command == "sweep":
        if not cfg.sweep:
            raise WalklabError("sweep needs a config with a non-empty 'sweep' list")
    elif cfg.schema not in allowed:
        cfg = cfg.replace(schema=default)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = make_config(args)
        doc, table = run_experiment(cfg, timestamp=not args.no_timestamp)
    except (WalklabError, ValueError, OSError) as exc:
        sys.stdout.write(dumps({"ok": False, "error": {"type": type(exc).__name__, "message": str(exc)}}))
        return 2
    if not cfg.output:
        if table is not None and not cfg.csv:
            sys.stdout.write(table)
        else:
            sys.stdout.write(dumps(doc))
    return 0 if doc.get("ok") else 1


if __name__ == "__main__":
    sys.exit(main())
