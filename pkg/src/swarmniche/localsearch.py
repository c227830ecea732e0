"""Derivative-free coordinate pattern search for local refinement.

Used for the optional dives inside sub-clustering and for post-optimizing
niche heads.  Polls x +/- step along every axis, moves to the best improving
probe, and halves the step after a full failed poll.  Fitness never ends
below the starting value and every probe stays inside bounds.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BudgetExhausted, ConfigurationError
from .objective import EvalCounter, ObjectiveSpec, evaluate


@dataclass(frozen=True)
class PatternSearchConfig:
    """Steps are fractions of the per-dimension domain width."""

    initial_step: float = 0.05
    contraction: float = 0.5
    min_step: float = 1e-9
    max_evals: int = 1000

    def __post_init__(self) -> None:
        if not 0.0 < self.contraction < 1.0:
            raise ConfigurationError("contraction must lie in (0, 1)")
        if self.min_step <= 0 or self.initial_step <= self.min_step:
            raise ConfigurationError("need 0 < min_step < initial_step")
        if self.max_evals < 1:
            raise ConfigurationError("max_evals must be positive")


def pattern_search(
    spec: ObjectiveSpec,
    x0: np.ndarray,
    cfg: PatternSearchConfig,
    counter: EvalCounter,
    f0: float | None = None,
) -> tuple[np.ndarray, float]:
    """Refine x0 by coordinate polling.  Returns (x_refined, fitness).

    Passing the known fitness of x0 as f0 saves one evaluation.  The search
    stops at the step floor, at the eval cap, or when the shared budget runs
    out, in which case the best point found so far is returned.
    """
    x = np.clip(np.asarray(x0, dtype=float), spec.lower, spec.upper)
    used = 0

    def probe(point):
        nonlocal used
        if used >= cfg.max_evals:
            raise _PollBudgetOut
        used += 1
        return evaluate(spec, point, counter)

    best_f: float | None = None
    try:
        best_f = probe(x) if f0 is None else float(f0)
        step = cfg.initial_step
        while step >= cfg.min_step and used < cfg.max_evals:
            best_probe = None
            for axis in range(spec.dimension):
                delta = step * float(spec.width[axis])
                for direction in (1.0, -1.0):
                    candidate = x.copy()
                    candidate[axis] = min(max(candidate[axis] + direction * delta,
                                              spec.lower[axis]), spec.upper[axis])
                    if candidate[axis] == x[axis]:
                        continue
                    f = probe(candidate)
                    if f > best_f and (best_probe is None or f > best_probe[1]):
                        best_probe = (candidate, f)
            if best_probe is None:
                step *= cfg.contraction
            else:
                x, best_f = best_probe
    except (BudgetExhausted, _PollBudgetOut):
        if best_f is None:
            raise BudgetExhausted("no budget left to evaluate the start point") from None
    return x, best_f


class _PollBudgetOut(Exception):
    """Internal: per-call eval cap reached."""
