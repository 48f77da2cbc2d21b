"""Command line entry point: ``foxann {run,compare,list-datasets,sphere-check}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import fox
from .data import BUNDLED, load_dataset
from .harness import (
    MODELS,
    ExperimentConfig,
    export_report,
    load_result,
    parse_bounds,
    read_config_file,
    render_table,
    run_experiment,
)

# seed whose sphere run (dim 5, pop 30, 100 iterations, [-5, 5]) is the committed reference
SPHERE_REFERENCE_SEED = 20240601


def _bounds(text):
    try:
        return parse_bounds(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="foxann", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="cross-validate models on datasets and export reports")
    run.add_argument("--dataset", action="append",
                     help=f"bundled name ({', '.join(BUNDLED)}) or CSV path; repeatable, "
                          "comma lists allowed (default: all bundled)")
    run.add_argument("--model", action="append",
                     help=f"one of {', '.join(MODELS)}; repeatable (default: all)")
    run.add_argument("--folds", type=int)
    run.add_argument("--epochs", type=int)
    run.add_argument("--pop", type=int, dest="population_size", help="FOX population size")
    run.add_argument("--lr", type=float, dest="learning_rate", help="backprop/logreg step size")
    run.add_argument("--seed", type=int)
    run.add_argument("--bounds", type=_bounds, metavar="LO:HI", help="weight range, e.g. -3:3")
    run.add_argument("--norm-scope", dest="normalization_scope",
                     choices=["whole_dataset", "per_fold"])
    run.add_argument("--a-schedule", dest="a_schedule", choices=list(fox.A_SCHEDULES))
    run.add_argument("--exploration", choices=list(fox.EXPLORATION_MODES))
    run.add_argument("--repeats", type=int)
    run.add_argument("--jobs", type=int, dest="n_jobs", help="worker processes")
    run.add_argument("--out", help="output directory (default: results)")
    run.add_argument("--config", metavar="FILE", help="key = value config file; flags override it")

    cmp_ = sub.add_parser("compare", help="print the aggregate table of a saved run")
    cmp_.add_argument("path", help="metrics.json or the run directory containing it")

    sub.add_parser("list-datasets", help="list the bundled datasets")

    sph = sub.add_parser("sphere-check", help="run FOX on the sphere function")
    sph.add_argument("--dim", type=int, default=5)
    sph.add_argument("--pop", type=int, default=30)
    sph.add_argument("--iters", type=int, default=100)
    sph.add_argument("--seed", type=int, default=SPHERE_REFERENCE_SEED)
    sph.add_argument("--bounds", type=_bounds, default=(-5.0, 5.0), metavar="LO:HI")
    sph.add_argument("--a-schedule", dest="a_schedule", default="decreasing",
                     choices=list(fox.A_SCHEDULES))
    return p


def _split_list(values):
    out = []
    for v in values:
        out.extend(s.strip() for s in v.split(",") if s.strip())
    return out


def _cmd_run(args) -> int:
    settings = read_config_file(args.config) if args.config else {}
    out_dir = settings.pop("out", None)
    for key in ("folds", "epochs", "population_size", "learning_rate", "seed",
                "normalization_scope", "a_schedule", "exploration", "repeats", "n_jobs"):
        value = getattr(args, key)
        if value is not None:
            settings[key] = value
    if args.bounds is not None:
        settings["weight_low"], settings["weight_high"] = args.bounds
    if args.dataset:
        settings["datasets"] = _split_list(args.dataset)
    if args.model:
        settings["models"] = _split_list(args.model)
    out_dir = args.out or out_dir or "results"

    cfg = ExperimentConfig(**settings)
    result = run_experiment(cfg)
    export_report(result, out_dir)
    print(render_table(result))
    print(f"\nwrote {Path(out_dir) / 'metrics.json'}")
    return 0


def _cmd_compare(args) -> int:
    print(render_table(load_result(args.path)))
    return 0


def _cmd_list(args) -> int:
    print(f"{'name':<15}{'samples':>8}{'features':>10}{'classes':>9}  file")
    for name, fname in BUNDLED.items():
        ds = load_dataset(name)
        print(f"{name:<15}{ds.n_samples:>8}{ds.n_features:>10}{ds.n_classes:>9}  {fname}")
    return 0


def _cmd_sphere(args) -> int:
    params = fox.FoxParams(population_size=args.pop, max_iterations=args.iters,
                           a_schedule=args.a_schedule)
    bounds = fox.SearchBounds(args.bounds[0], args.bounds[1], args.dim)
    res = fox.optimize(fox.sphere, bounds, params, seed=args.seed)
    print("iteration,best_fitness")
    for i, v in enumerate(res.fitness_history, start=1):
        print(f"{i},{float(v)!r}")
    print(f"# best_fitness={float(res.best_fitness)!r} seed={args.seed}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "compare": _cmd_compare,
    "list-datasets": _cmd_list,
    "sphere-check": _cmd_sphere,
}


def _join_negative_bounds(argv):
    # let "--bounds -3:3" through; argparse would read "-3:3" as an option
    out = list(argv)
    for i, a in enumerate(out[:-1]):
        if a == "--bounds" and out[i + 1].startswith("-"):
            out[i:i + 2] = [f"--bounds={out[i + 1]}"]
            break
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_join_negative_bounds(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"foxann {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
