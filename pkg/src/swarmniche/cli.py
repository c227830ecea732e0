"""Command-line front end: single runs, benchmark sweeps, registry inspection.

Exit codes: 0 success, 1 runtime failure, 2 usage error.  Every subcommand is
deterministic given its flags; NICHE_SEED provides a fallback seed and a flat
``key = value`` config file can pre-set any flag (flags > file > env > defaults).
"""
from __future__ import annotations

import argparse
import importlib.util
import json
import os
import sys

import numpy as np

from . import __version__
from .errors import ConfigurationError
from .harness import (
    ACCURACY_LEVELS,
    BUILTIN_FUNCTIONS,
    DEFAULT_ALGORITHMS,
    ExperimentConfig,
    execute_run,
    run_experiment,
    write_reports,
)
from .niching import ALGORITHMS, AlgoConfig
from .objective import (
    ObjectiveSpec,
    get_objective,
    peak_registry,
    register_function,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swarmniche",
        description="Multi-swarm PSO niching toolkit and benchmark harness.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute one optimization run")
    run.add_argument("--algo", default=None, help=f"one of {','.join(sorted(ALGORITHMS))}")
    run.add_argument("--function", default=None, help="built-in function id (f1..f10)")
    run.add_argument("--plugin", default=None, help="path to a plug-in objective module")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--pop", type=int, default=None, help="population size")
    run.add_argument("--budget", type=int, default=None, help="evaluation budget")
    run.add_argument("--json", action="store_true", help="machine-readable output")
    run.add_argument("--config", default=None, help="key=value config file")

    bench = sub.add_parser("bench", help="run the benchmark experiment grid")
    bench.add_argument("--algos", default=None, help="comma-separated algorithm list")
    bench.add_argument("--functions", default=None, help="comma-separated function list")
    bench.add_argument("--runs", type=int, default=None)
    bench.add_argument("--pop", type=int, default=None)
    bench.add_argument("--budget", type=int, default=None)
    bench.add_argument("--seed", type=int, default=None, help="base seed")
    bench.add_argument("--out", default=None, help="output directory")
    bench.add_argument("--format", default=None, choices=["csv", "json", "both"])
    bench.add_argument("--post-optimize", action="store_true", default=None)
    bench.add_argument("--reference", default=None, help="reference algorithm for Wilcoxon marks")
    bench.add_argument("--jobs", type=int, default=None, help="parallel workers")
    bench.add_argument("--config", default=None, help="key=value config file")

    peaks = sub.add_parser("peaks", help="print the known-optima registry")
    peaks.add_argument("--function", required=True)
    peaks.add_argument("--plugin", default=None)

    sub.add_parser("selftest", help="quick internal consistency checks")
    return parser


def _load_config_file(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    if not os.path.isfile(path):
        raise ConfigurationError(f"config file not found: {path}")
    values: dict[str, str] = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigurationError(f"bad config line (need key=value): {line!r}")
            key, value = line.split("=", 1)
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _setting(args, name: str, file_cfg: dict, default, cast=str):
    flag = getattr(args, name, None)
    if flag is not None:
        return flag
    if name in file_cfg:
        raw = file_cfg[name]
        if cast is bool:
            return raw.lower() in ("1", "true", "yes", "on")
        return cast(raw)
    return default


def _fallback_seed(default: int = 1) -> int:
    raw = os.environ.get("NICHE_SEED")
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigurationError(f"NICHE_SEED must be an integer, got {raw!r}")


def _load_plugin(path: str) -> str:
    """Import a plug-in module and register the objective it builds.

    The module must expose ``build()`` returning either an ObjectiveSpec or a
    (ObjectiveSpec, PeakRegistry) pair.  Returns the objective id.
    """
    if not os.path.isfile(path):
        raise ConfigurationError(f"plugin file not found: {path}")
    spec = importlib.util.spec_from_file_location("swarmniche_plugin", path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    if not hasattr(module, "build"):
        raise ConfigurationError(f"plugin {path} must define build()")
    built = module.build()
    if isinstance(built, tuple):
        objective, registry = built
    else:
        objective, registry = built, None
    if not isinstance(objective, ObjectiveSpec):
        raise ConfigurationError("plugin build() must return an ObjectiveSpec")
    register_function(objective, registry)
    return objective.id


def _format_position(position) -> str:
    return "(" + ", ".join(f"{float(c):.8f}" for c in position) + ")"


def _cmd_run(args) -> int:
    file_cfg = _load_config_file(args.config)
    algo = _setting(args, "algo", file_cfg, "timpso")
    function = _setting(args, "function", file_cfg, None)
    seed = _setting(args, "seed", file_cfg, _fallback_seed(), int)
    pop = _setting(args, "pop", file_cfg, 30, int)
    budget = _setting(args, "budget", file_cfg, 30_000, int)

    if args.plugin:
        function = _load_plugin(args.plugin)
    if algo not in ALGORITHMS:
        print(f"error: unknown algorithm {algo!r}", file=sys.stderr)
        return 2
    if function is None:
        print("error: --function or --plugin is required", file=sys.stderr)
        return 2
    try:
        spec = get_objective(function)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    cfg = AlgoConfig(population=pop, budget=budget, seed=seed)
    result = ALGORITHMS[algo](spec, cfg)
    try:
        registry = peak_registry(function)
    except ConfigurationError:
        registry = None

    def matched_peak(position, fitness):
        if registry is None:
            return None
        dists = np.linalg.norm(registry.positions - np.asarray(position), axis=1)
        nearest = int(np.argmin(dists))
        if dists[nearest] <= registry.niche_radius:
            return nearest
        return None

    if args.json:
        payload = {
            "algorithm": algo, "function": function, "seed": seed,
            "population": pop, "budget": budget,
            "evaluations": result.evaluations,
            "iterations": result.iterations,
            "status": result.status,
            "heads": [
                {"position": [round(float(c), 10) for c in pos],
                 "fitness": round(float(fit), 10),
                 "peak": matched_peak(pos, fit)}
                for pos, fit in result.heads
            ],
        }
        print(json.dumps(payload, sort_keys=True))
    else:
        print(f"{algo} on {function}: {len(result.heads)} head(s), "
              f"{result.evaluations} evaluations, status={result.status}")
        for i, (pos, fit) in enumerate(result.heads):
            peak = matched_peak(pos, fit)
            tag = f"peak={peak}" if peak is not None else "peak=-"
            print(f"  head {i}: x={_format_position(pos)} fitness={fit:.8f} {tag}")
    return 0


def _cmd_bench(args) -> int:
    file_cfg = _load_config_file(args.config)
    algos = _setting(args, "algos", file_cfg, ",".join(DEFAULT_ALGORITHMS))
    functions = _setting(args, "functions", file_cfg, ",".join(BUILTIN_FUNCTIONS))
    runs = _setting(args, "runs", file_cfg, 30, int)
    pop = _setting(args, "pop", file_cfg, 30, int)
    budget = _setting(args, "budget", file_cfg, 30_000, int)
    seed = _setting(args, "seed", file_cfg, _fallback_seed(), int)
    out = _setting(args, "out", file_cfg, "reports")
    fmt = _setting(args, "format", file_cfg, "both")
    reference = _setting(args, "reference", file_cfg, "timpso")
    jobs = _setting(args, "jobs", file_cfg, os.cpu_count() or 1, int)
    post = _setting(args, "post_optimize", file_cfg, False, bool)

    algo_list = tuple(a.strip() for a in algos.split(",") if a.strip())
    fn_list = tuple(f.strip() for f in functions.split(",") if f.strip())
    for name in algo_list:
        if name not in ALGORITHMS:
            print(f"error: unknown algorithm {name!r}", file=sys.stderr)
            return 2
    for fn in fn_list:
        try:
            get_objective(fn)
        except ConfigurationError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2

    try:
        os.makedirs(out, exist_ok=True)
        probe = os.path.join(out, ".write_probe")
        with open(probe, "w") as fh:
            fh.write("ok")
        os.remove(probe)
    except OSError as exc:
        print(f"error: output directory not writable: {exc}", file=sys.stderr)
        return 1

    cfg = ExperimentConfig(
        algorithms=algo_list, functions=fn_list, runs=runs,
        population=pop, budget=budget, accuracy_levels=ACCURACY_LEVELS,
        post_optimize=bool(post), base_seed=seed, reference=reference,
        jobs=jobs,
    )
    result = run_experiment(cfg)
    written = write_reports(result, out, fmt)
    failed = [row for row in result.rows if row.error]
    for row in failed:
        print(f"warning: {row.algorithm}/{row.function}: {row.error}", file=sys.stderr)
    for path in written:
        print(path)
    return 0


def _cmd_peaks(args) -> int:
    function = args.function
    if args.plugin:
        function = _load_plugin(args.plugin)
    try:
        registry = peak_registry(function)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"{function}: {len(registry)} known optima, "
          f"niche radius {registry.niche_radius:.8f}")
    for i in range(len(registry)):
        print(f"  peak {i}: x={_format_position(registry.positions[i])} "
              f"fitness={registry.fitnesses[i]:.8f}")
    return 0


def _cmd_selftest(args) -> int:
    from .lds import HaltonState
    from .clustering import kmeans
    from .niching import run_timpso

    checks: list[tuple[str, bool]] = []

    state = HaltonState.for_dimension(1)
    values = [state.next_unit()[0] for _ in range(64)]
    bins = sorted(int(v * 64) for v in values)
    checks.append(("halton 64-point stratification", bins == list(range(64))))

    rng = np.random.default_rng(7)
    points = np.concatenate([rng.normal(0, .05, (10, 2)), rng.normal(5, .05, (10, 2))])
    model = kmeans(points, 2, restarts=5, rng=rng)
    checks.append(("kmeans separates two blobs", model.mean_silhouette > 0.9))

    for fn in ("f1", "f2", "f4"):
        registry = peak_registry(fn)
        spec = get_objective(fn)
        checks.append((f"{fn} registry size", len(registry) == spec.peak_count))

    spec = get_objective("f2")
    cfg = AlgoConfig(population=10, budget=2_000, seed=3)
    a = run_timpso(spec, cfg)
    b = run_timpso(spec, cfg)
    checks.append(("driver budget respected", a.evaluations <= cfg.budget))
    same = len(a.heads) == len(b.heads) and all(
        np.array_equal(p1, p2) and f1 == f2
        for (p1, f1), (p2, f2) in zip(a.heads, b.heads)
    )
    checks.append(("driver determinism", same))

    ok = True
    for name, passed in checks:
        print(f"{'PASS' if passed else 'FAIL'}  {name}")
        ok &= passed
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "bench": _cmd_bench,
        "peaks": _cmd_peaks,
        "selftest": _cmd_selftest,
    }
    try:
        return handlers[args.command](args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:              # noqa: BLE001 - CLI boundary
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
