"""Experiment orchestration: multi-run execution, peak ratios, Wilcoxon tests.

The benchmark protocol: run every algorithm x function combination for N_r
seeded runs, count the known global optima recovered at each accuracy level,
and report the peak ratio

    PR = sum_over_runs(N_gf) / (N_g * N_r)

averaged across the accuracy levels.  Runs are paired by seed across
algorithms so signed-rank comparisons are meaningful.  Reports are fully
deterministic given the configuration, independent of worker count.
"""
from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .errors import ConfigurationError
from .localsearch import PatternSearchConfig, pattern_search
from .niching import ALGORITHMS, AlgoConfig
from .objective import (
    EvalCounter,
    PeakRegistry,
    count_peaks_found,
    get_objective,
    peak_registry,
)

ACCURACY_LEVELS: tuple[float, ...] = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5)

BUILTIN_FUNCTIONS: tuple[str, ...] = tuple(f"f{i}" for i in range(1, 11))
DEFAULT_ALGORITHMS: tuple[str, ...] = ("timpso", "kpso", "edhcpso", "nichepso")


def level_label(level: float) -> str:
    """1e-05 -> '1e-5', matching the report column names."""
    return f"{level:.0e}".replace("e-0", "e-")


@dataclass(frozen=True)
class ExperimentConfig:
    algorithms: tuple[str, ...] = DEFAULT_ALGORITHMS
    functions: tuple[str, ...] = BUILTIN_FUNCTIONS
    runs: int = 30
    population: int = 30
    budget: int = 30_000
    accuracy_levels: tuple[float, ...] = ACCURACY_LEVELS
    post_optimize: bool = False
    base_seed: int = 1
    reference: str = "timpso"
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.runs < 1:
            raise ConfigurationError("runs must be >= 1")
        levels = self.accuracy_levels
        if not levels or any(l <= 0 for l in levels):
            raise ConfigurationError("accuracy levels must be positive")
        if any(a <= b for a, b in zip(levels, levels[1:])):
            raise ConfigurationError("accuracy levels must be strictly decreasing")
        for name in self.algorithms:
            if name not in ALGORITHMS:
                raise ConfigurationError(f"unknown algorithm {name!r}")
        if self.jobs < 1:
            raise ConfigurationError("jobs must be >= 1")


@dataclass
class RunRecord:
    algorithm: str
    function: str
    seed: int
    evaluations: int
    heads: list[tuple[np.ndarray, float]]
    peaks_found: dict[float, int]
    pr: float                              # mean over levels of N_gf / N_g
    status: str = "ok"


@dataclass
class ReportRow:
    algorithm: str
    function: str
    pr_mean: float
    pr_std: float
    pr_by_level: dict[float, float]
    wilcoxon_mark: str
    evals_mean: float
    error: Optional[str] = None


@dataclass
class WilcoxonResult:
    verdict: str                           # better | worse | similar
    statistic: float                       # W = W+ - W-
    p_value: float
    n_effective: int


@dataclass
class ExperimentResult:
    rows: list[ReportRow]
    records: list[RunRecord]
    config: ExperimentConfig
    wall_time_s: float = 0.0


# ---------------------------------------------------------------------------
# scoring

def score_run(
    heads: Sequence[tuple[np.ndarray, float]],
    registry: PeakRegistry,
    levels: Sequence[float] = ACCURACY_LEVELS,
) -> tuple[dict[float, int], float]:
    """Per-level peak counts for one run plus its averaged PR contribution."""
    found = {lvl: count_peaks_found(heads, registry, lvl) for lvl in levels}
    contribution = float(np.mean([found[lvl] / len(registry) for lvl in levels]))
    return found, contribution


def peak_ratio(records: Sequence[RunRecord], n_peaks: int, accuracy: float) -> float:
    """PR at one accuracy level over a batch of same-function runs."""
    if not records:
        raise ConfigurationError("peak ratio needs at least one run")
    functions = {r.function for r in records}
    if len(functions) > 1:
        raise ConfigurationError(f"records mix functions: {sorted(functions)}")
    total = sum(r.peaks_found[accuracy] for r in records)
    return total / (n_peaks * len(records))


def post_optimize_heads(
    heads: Sequence[tuple[np.ndarray, float]],
    function_id: str,
    evals_per_dim: int = 100,
    step_frac: float = 0.01,
) -> list[tuple[np.ndarray, float]]:
    """Refine every head with a budgeted pattern search (its own counter).

    Mirrors the post-optimization experiment: refinement evaluations are not
    charged to the run budget, and fitness never decreases.
    """
    spec = get_objective(function_id)
    cap = evals_per_dim * spec.dimension
    cfg = PatternSearchConfig(initial_step=step_frac, max_evals=cap)
    refined = []
    for position, fitness in heads:
        counter = EvalCounter(cap)
        x, f = pattern_search(spec, np.asarray(position, dtype=float), cfg,
                              counter, f0=fitness)
        refined.append((x, f))
    return refined


# ---------------------------------------------------------------------------
# Wilcoxon signed-rank test

def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _exact_two_sided_p(doubled_ranks: np.ndarray, doubled_w_plus: int) -> float:
    """Exact p over the 2^n equiprobable sign assignments (ranks doubled to ints)."""
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1)
    counts[0] = 1.0
    for r in doubled_ranks:
        r = int(r)
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:total + 1 - r]
        counts = counts + shifted
    counts /= counts.sum()
    lo = counts[: doubled_w_plus + 1].sum()
    hi = counts[doubled_w_plus:].sum()
    return float(min(1.0, 2.0 * min(lo, hi)))


def wilcoxon_signed_rank(
    sample_a: Sequence[float],
    sample_b: Sequence[float],
    alpha: float = 0.05,
) -> WilcoxonResult:
    """Two-sided paired signed-rank test.

    Zero differences are dropped, tied magnitudes get mid-ranks.  Up to 25
    effective pairs the decision uses the exact null distribution of the
    rank sum; beyond that, a normal approximation with tie correction.
    Returns 'better' when sample_a significantly exceeds sample_b.
    """
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ConfigurationError("samples must be equal-length 1D sequences")
    d = a - b
    d = d[d != 0.0]
    n = len(d)
    if n == 0:
        return WilcoxonResult("similar", 0.0, 1.0, 0)

    ranks = _midranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    statistic = w_plus - w_minus

    if n <= 25:
        doubled = np.rint(2.0 * ranks).astype(int)
        p = _exact_two_sided_p(doubled, int(round(2.0 * w_plus)))
    else:
        mean = n * (n + 1) / 4.0
        var = n * (n + 1) * (2 * n + 1) / 24.0
        _, tie_counts = np.unique(np.abs(d), return_counts=True)
        var -= float(np.sum(tie_counts ** 3 - tie_counts)) / 48.0
        if var <= 0:
            return WilcoxonResult("similar", statistic, 1.0, n)
        z = (w_plus - mean - 0.5 * np.sign(w_plus - mean)) / math.sqrt(var)
        p = math.erfc(abs(z) / math.sqrt(2.0))

    if p > alpha:
        return WilcoxonResult("similar", statistic, p, n)
    median = float(np.median(a - b))
    if median > 0 or (median == 0 and statistic > 0):
        return WilcoxonResult("better", statistic, p, n)
    return WilcoxonResult("worse", statistic, p, n)


# ---------------------------------------------------------------------------
# experiment execution

def execute_run(
    algorithm: str,
    function_id: str,
    seed: int,
    population: int,
    budget: int,
    accuracy_levels: Sequence[float] = ACCURACY_LEVELS,
    post_optimize: bool = False,
) -> RunRecord:
    """One seeded optimization run scored against the function's registry."""
    spec = get_objective(function_id)
    registry = peak_registry(function_id)
    cfg = AlgoConfig(population=population, budget=budget, seed=seed)
    result = ALGORITHMS[algorithm](spec, cfg)
    heads = result.heads
    if post_optimize:
        heads = post_optimize_heads(heads, function_id)
    found, pr = score_run(heads, registry, accuracy_levels)
    return RunRecord(
        algorithm=algorithm, function=function_id, seed=seed,
        evaluations=result.evaluations, heads=heads,
        peaks_found=found, pr=pr, status=result.status,
    )


def _execute_run_safe(args):
    """Worker wrapper: never raises, so one bad run cannot sink the batch."""
    try:
        return execute_run(*args), None
    except Exception as exc:              # noqa: BLE001 - per-row error reporting
        return None, f"{type(exc).__name__}: {exc}"


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Execute the full benchmark grid and aggregate report rows.

    Individual run failures are recorded on their row; the remaining rows
    are still produced.
    """
    start = time.perf_counter()
    jobs = [
        (algo, fn, cfg.base_seed + i, cfg.population, cfg.budget,
         cfg.accuracy_levels, cfg.post_optimize)
        for algo in cfg.algorithms
        for fn in cfg.functions
        for i in range(cfg.runs)
    ]
    failures: dict[tuple[str, str], str] = {}
    records: list[RunRecord] = []
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            outcomes = list(pool.map(_execute_run_safe, jobs, chunksize=1))
    else:
        outcomes = [_execute_run_safe(job) for job in jobs]
    for job, (record, error) in zip(jobs, outcomes):
        if record is not None:
            records.append(record)
        else:
            failures[(job[0], job[1])] = error
    records.sort(key=lambda r: (r.algorithm, r.function, r.seed))

    by_combo: dict[tuple[str, str], list[RunRecord]] = {}
    for r in records:
        by_combo.setdefault((r.algorithm, r.function), []).append(r)

    rows: list[ReportRow] = []
    for algo in cfg.algorithms:
        for fn in cfg.functions:
            combo = by_combo.get((algo, fn), [])
            error = failures.get((algo, fn))
            if not combo:
                rows.append(ReportRow(algo, fn, math.nan, math.nan, {},
                                      "similar", math.nan, error or "no runs"))
                continue
            registry = peak_registry(fn)
            prs = np.array([r.pr for r in combo])
            by_level = {
                lvl: peak_ratio(combo, len(registry), lvl)
                for lvl in cfg.accuracy_levels
            }
            reference_runs = by_combo.get((cfg.reference, fn), [])
            if cfg.reference in cfg.algorithms and reference_runs:
                ref_prs = [r.pr for r in reference_runs]
                mark = wilcoxon_signed_rank(prs, np.array(ref_prs)).verdict
            else:
                mark = "similar"
            rows.append(ReportRow(
                algorithm=algo, function=fn,
                pr_mean=float(prs.mean()),
                pr_std=float(prs.std(ddof=1)) if len(prs) > 1 else 0.0,
                pr_by_level=by_level,
                wilcoxon_mark=mark,
                evals_mean=float(np.mean([r.evaluations for r in combo])),
                error=error,
            ))
    return ExperimentResult(rows=rows, records=records, config=cfg,
                            wall_time_s=time.perf_counter() - start)


# ---------------------------------------------------------------------------
# report emission

def report_csv(rows: Sequence[ReportRow], levels: Sequence[float]) -> str:
    header = ["algorithm", "function", "pr_mean", "pr_std"]
    header += [f"pr_at_{level_label(lvl)}" for lvl in levels]
    header += ["wilcoxon_mark", "evals_mean"]
    lines = [",".join(header)]
    for row in rows:
        cells = [row.algorithm, row.function,
                 f"{row.pr_mean:.6f}", f"{row.pr_std:.6f}"]
        cells += [f"{row.pr_by_level.get(lvl, math.nan):.6f}" for lvl in levels]
        cells += [row.wilcoxon_mark, f"{row.evals_mean:.1f}"]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def report_json(rows: Sequence[ReportRow], levels: Sequence[float]) -> str:
    tree: dict[str, dict] = {}
    for row in rows:
        tree.setdefault(row.algorithm, {})[row.function] = {
            "pr_mean": round(row.pr_mean, 6) if not math.isnan(row.pr_mean) else None,
            "pr_std": round(row.pr_std, 6) if not math.isnan(row.pr_std) else None,
            "pr_by_level": {
                level_label(lvl): round(row.pr_by_level.get(lvl, math.nan), 6)
                for lvl in levels
            } if row.pr_by_level else {},
            "wilcoxon_mark": row.wilcoxon_mark,
            "evals_mean": round(row.evals_mean, 1) if not math.isnan(row.evals_mean) else None,
            "error": row.error,
        }
    return json.dumps(tree, indent=2, sort_keys=True) + "\n"


def records_jsonl(records: Sequence[RunRecord]) -> str:
    lines = []
    for r in records:
        lines.append(json.dumps({
            "algorithm": r.algorithm,
            "function": r.function,
            "seed": r.seed,
            "evaluations": r.evaluations,
            "status": r.status,
            "heads": [
                {"position": [round(float(c), 12) for c in pos],
                 "fitness": round(float(fit), 12)}
                for pos, fit in r.heads
            ],
            "peaks_found": {level_label(lvl): n for lvl, n in r.peaks_found.items()},
            "pr": round(r.pr, 8),
        }, sort_keys=True))
    return "\n".join(lines) + "\n"


def write_reports(result: ExperimentResult, out_dir: str,
                  fmt: str = "both") -> list[str]:
    """Write report.csv / report.json, records.jsonl, and manifest.json.

    The manifest echoes the configuration and records wall time; the report
    and record files are byte-identical across reruns of the same config.
    """
    os.makedirs(out_dir, exist_ok=True)
    levels = result.config.accuracy_levels
    written = []
    if fmt in ("csv", "both"):
        path = os.path.join(out_dir, "report.csv")
        with open(path, "w") as fh:
            fh.write(report_csv(result.rows, levels))
        written.append(path)
    if fmt in ("json", "both"):
        path = os.path.join(out_dir, "report.json")
        with open(path, "w") as fh:
            fh.write(report_json(result.rows, levels))
        written.append(path)
    path = os.path.join(out_dir, "records.jsonl")
    with open(path, "w") as fh:
        fh.write(records_jsonl(result.records))
    written.append(path)
    manifest = {
        "config": {
            "algorithms": list(result.config.algorithms),
            "functions": list(result.config.functions),
            "runs": result.config.runs,
            "population": result.config.population,
            "budget": result.config.budget,
            "accuracy_levels": [level_label(l) for l in levels],
            "post_optimize": result.config.post_optimize,
            "base_seed": result.config.base_seed,
            "reference": result.config.reference,
        },
        "version": __version__,
        "wall_time_s": round(result.wall_time_s, 3),
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        fh.write(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    written.append(path)
    return written
