"""Command line entry point: ``visolve {run,compare,validate,list}``.

Settings come from (lowest to highest priority) built-in defaults, a
``--config`` file, and command line flags.  The seed additionally falls back
to the ``VI_SOLVE_SEED`` environment variable when neither flag nor file sets
it.

Config files are flat ``key = value`` text, one setting per line, ``#``
starting a comment.  Recognised keys::

    example, n, points, seed, algorithms, max_iter, tol, start, preset,
    xi, psi1, phi, sigma, armijo_alpha, armijo_ell, armijo_phi, hsegm_factor
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .harness import (
    DEFAULT_POINTS,
    EXAMPLES,
    NAMED_STARTS,
    PARAM_KEYS,
    BenchConfig,
    compare,
    emit_csv,
    validate,
    write_csv,
)
from .solvers import AlgorithmId
from .stepsize import ConfigurationError

SEED_ENV = "VI_SOLVE_SEED"
CONFIG_KEYS = {"example", "n", "points", "seed", "algorithms", "max_iter", "tol", "start", "preset",
               *PARAM_KEYS}


def read_config(path) -> dict:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in CONFIG_KEYS:
            raise ConfigurationError(f"{path}:{lineno}: expected 'key = value' with a known key, got {raw!r}")
        out[key] = value.strip()
    return out


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value settings file")
    common.add_argument("--preset", choices=["paper"], default=None, help="parameter preset (default: paper)")
    common.add_argument("--example", choices=EXAMPLES)
    common.add_argument("--n", type=int, help="dimension for ex2")
    common.add_argument("--points", type=int, help=f"grid points for ex3 (default {DEFAULT_POINTS})")
    common.add_argument("--seed", type=int)
    common.add_argument("--max-iter", dest="max_iter", type=int)
    common.add_argument("--tol", type=float, help="stop once D_k <= tol")
    common.add_argument("--start", help="random:<scale> | t2 | pow2t | expt | tcos")
    common.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                        help=f"override a solver parameter ({', '.join(PARAM_KEYS)})")
    common.add_argument("--out", help="CSV output path (default: stdout)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="visolve", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="run one algorithm")
    r.add_argument("--algorithm", "--algorithms", dest="algorithms", help="default ISEGM")
    c = sub.add_parser("compare", parents=[common], help="run several algorithms on a shared start")
    c.add_argument("--algorithms", help="comma list (default: all)")
    sub.add_parser("validate", parents=[common], help="run the invariant suite")
    sub.add_parser("list", help="list algorithms and examples")
    return p


def build_config(args) -> BenchConfig:
    settings = read_config(args.config) if args.config else {}
    for key in ("example", "n", "points", "seed", "max_iter", "tol", "start", "preset", "algorithms"):
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    if args.command == "run":
        settings.setdefault("algorithms", AlgorithmId.ISEGM.value)
    for item in args.param:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigurationError(f"--param expects KEY=VALUE, got {item!r}")
        key = key.strip().replace("-", "_")
        if key not in PARAM_KEYS:
            raise ConfigurationError(f"unknown parameter {key!r}; choose from {', '.join(PARAM_KEYS)}")
        settings[key] = value

    if "seed" not in settings and os.environ.get(SEED_ENV):
        settings["seed"] = os.environ[SEED_ENV]
    if settings.get("preset", "paper") != "paper":
        raise ConfigurationError(f"unknown preset {settings['preset']!r}")
    example = settings.get("example")
    if example is None:
        raise ConfigurationError("no example given (--example or config 'example')")
    points = settings.get("points")
    if example == "ex3" and points is None:
        points = DEFAULT_POINTS
    algorithms = tuple(AlgorithmId.parse(a) for a in str(settings.get("algorithms", "")).split(",") if a.strip())
    if args.command == "run" and len(algorithms) != 1:
        raise ConfigurationError("run takes exactly one algorithm")
    params = {k: float(settings[k]) for k in PARAM_KEYS if k in settings}
    return BenchConfig(
        example=example,
        n=None if settings.get("n") is None else int(settings["n"]),
        points=None if points is None else int(points),
        seed=int(settings.get("seed", 0)),
        algorithms=algorithms or tuple(AlgorithmId),
        max_iter=None if settings.get("max_iter") is None else int(settings["max_iter"]),
        tol=None if settings.get("tol") is None else float(settings["tol"]),
        start=str(settings.get("start", "")),
        params=params,
    )


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "list":
        print("algorithms:", " ".join(a.value for a in AlgorithmId))
        print("examples:  ", " ".join(EXAMPLES))
        print("starts:     random:<scale>", " ".join(sorted(NAMED_STARTS)), "tcos")
        return 0
    try:
        cfg = build_config(args)
        if args.command == "validate":
            report = validate(cfg)
            print(report.format())
            return 0 if report.passed else 1
        records = compare(cfg)
        if args.out:
            emit_csv(records, args.out)
        else:
            write_csv(records, sys.stdout)
    except (ConfigurationError, ValueError, OSError) as exc:
        print(f"visolve: error: {exc}", file=sys.stderr)
        return 2
    return 0 if all(r.complete for r in records) else 1


if __name__ == "__main__":
    sys.exit(main())
