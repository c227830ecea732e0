"""Bounded maximization problems with budgeted evaluation and peak registries.

Everything here uses the maximization convention: larger fitness is better.
Out-of-bounds queries are rejected rather than clamped; boundary handling is
the caller's job.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import BudgetExhausted, ConfigurationError
from .functions import BUILTINS, builtin_def

_BOUNDS_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class ObjectiveSpec:
    """A bounded maximization problem.

    `fitness` maps a point of shape (dimension,) to a float; built-ins also
    accept (m, dimension) batches, which the registry oracles rely on.
    """

    id: str
    dimension: int
    lower: np.ndarray
    upper: np.ndarray
    fitness: Callable
    peak_count: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float))
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=float))
        if self.lower.shape != (self.dimension,) or self.upper.shape != (self.dimension,):
            raise ConfigurationError(f"bounds shape must be ({self.dimension},)")
        if np.any(self.lower >= self.upper):
            raise ConfigurationError("lower bounds must be strictly below upper bounds")
        if self.peak_count < 1:
            raise ConfigurationError("peak_count must be positive")

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower


@dataclass(frozen=True, eq=False)
class PeakRegistry:
    """All known global optima of a problem plus the scoring radius.

    niche_radius is half the minimum pairwise inter-peak distance (half the
    bounds diagonal for single-peak problems), so basins never overlap.
    """

    positions: np.ndarray          # (n_peaks, dimension)
    fitnesses: np.ndarray          # (n_peaks,)
    niche_radius: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "positions", np.asarray(self.positions, dtype=float))
        object.__setattr__(self, "fitnesses", np.asarray(self.fitnesses, dtype=float))
        if self.positions.ndim != 2 or len(self.positions) != len(self.fitnesses):
            raise ConfigurationError("registry positions/fitnesses are inconsistent")
        if self.niche_radius <= 0:
            raise ConfigurationError("niche_radius must be positive")
        spread = float(self.fitnesses.max() - self.fitnesses.min())
        if spread > 1e-6:
            raise ConfigurationError(
                f"registry peaks must share one global fitness (spread {spread:.2e})"
            )
        if len(self.positions) > 1:
            d = _pairwise_min_distance(self.positions)
            if d < 2.0 * self.niche_radius - 1e-12:
                raise ConfigurationError("peaks closer than twice the niche radius")

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def peak_fitness(self) -> float:
        return float(self.fitnesses[0])


class EvalCounter:
    """Budgeted evaluation tally: every fitness call consumes exactly one unit."""

    __slots__ = ("used", "budget")

    def __init__(self, budget: int, used: int = 0):
        if budget < 1:
            raise ConfigurationError(f"budget must be positive, got {budget}")
        if used < 0 or used > budget:
            raise ConfigurationError("used must lie in [0, budget]")
        self.budget = int(budget)
        self.used = int(used)

    @property
    def remaining(self) -> int:
        return self.budget - self.used

    def consume(self) -> None:
        if self.used >= self.budget:
            raise BudgetExhausted(f"evaluation budget of {self.budget} exhausted")
        self.used += 1

    def __repr__(self) -> str:
        return f"EvalCounter(used={self.used}, budget={self.budget})"


def evaluate(spec: ObjectiveSpec, x: np.ndarray, counter: EvalCounter) -> float:
    """Budgeted fitness query.  Raises BudgetExhausted before touching f."""
    if x.shape != (spec.dimension,):
        raise ConfigurationError(f"point shape {x.shape} != ({spec.dimension},)")
    slack = _BOUNDS_SLACK * float(np.max(spec.width))
    if np.any(x < spec.lower - slack) or np.any(x > spec.upper + slack):
        raise ConfigurationError(f"point {x} outside bounds; clamp before evaluating")
    counter.consume()
    return float(spec.fitness(x))


def _pairwise_min_distance(points: np.ndarray) -> float:
    diff = points[:, None, :] - points[None, :, :]
    d = np.sqrt(np.sum(diff * diff, axis=-1))
    d[np.diag_indices(len(points))] = np.inf
    return float(d.min())


# ---------------------------------------------------------------------------
# built-in and plug-in lookup

_PLUGINS: dict[str, tuple[ObjectiveSpec, Optional[PeakRegistry]]] = {}
_REGISTRY_CACHE: dict[str, PeakRegistry] = {}


def builtin(function_id: str) -> ObjectiveSpec:
    """ObjectiveSpec for one of the built-in test functions f1..f10."""
    d = builtin_def(function_id)
    return ObjectiveSpec(
        id=d.id, dimension=d.dimension,
        lower=np.array(d.lower), upper=np.array(d.upper),
        fitness=d.fitness, peak_count=d.peak_count,
    )


def register_function(
    spec: ObjectiveSpec, registry: Optional[PeakRegistry] = None
) -> None:
    """Register a plug-in objective.

    Plug-ins without a registry can be optimized but not peak-ratio scored.
    Built-in ids cannot be shadowed.
    """
    if spec.id in BUILTINS:
        raise ConfigurationError(f"cannot shadow built-in function {spec.id!r}")
    _PLUGINS[spec.id] = (spec, registry)


def registered_ids() -> list[str]:
    return list(BUILTINS) + list(_PLUGINS)


def get_objective(function_id: str) -> ObjectiveSpec:
    """Resolve a built-in or previously registered plug-in by id."""
    if function_id in BUILTINS:
        return builtin(function_id)
    if function_id in _PLUGINS:
        return _PLUGINS[function_id][0]
    raise ConfigurationError(f"unknown function {function_id!r}")


def peak_registry(function_id: str) -> PeakRegistry:
    """Registry of known global optima for scoring (cached per function)."""
    if function_id in _REGISTRY_CACHE:
        return _REGISTRY_CACHE[function_id]
    if function_id in _PLUGINS:
        registry = _PLUGINS[function_id][1]
        if registry is None:
            raise ConfigurationError(
                f"plug-in {function_id!r} has no peak registry; it cannot be scored"
            )
        return registry
    d = builtin_def(function_id)
    positions, fitnesses = d.find_peaks()
    if len(positions) != d.peak_count:
        raise ConfigurationError(
            f"{function_id}: found {len(positions)} peaks, expected {d.peak_count}"
        )
    if len(positions) > 1:
        radius = 0.5 * _pairwise_min_distance(positions)
    else:
        width = np.asarray(d.upper) - np.asarray(d.lower)
        radius = 0.5 * float(np.sqrt(np.sum(width * width)))
    registry = PeakRegistry(positions=positions, fitnesses=fitnesses, niche_radius=radius)
    _REGISTRY_CACHE[function_id] = registry
    return registry


def count_peaks_found(
    candidates: Sequence[tuple[np.ndarray, float]],
    registry: PeakRegistry,
    accuracy: float,
) -> int:
    """Number of registry peaks claimed by at least one candidate.

    A candidate claims its nearest peak only, and only when it sits within
    the niche radius and its fitness is within `accuracy` of the peak
    fitness.  Each peak counts once no matter how many candidates hit it.
    """
    if accuracy <= 0:
        raise ConfigurationError(f"accuracy must be positive, got {accuracy}")
    if not len(candidates):
        return 0
    pos = np.asarray([np.asarray(c[0], dtype=float) for c in candidates])
    fit = np.asarray([float(c[1]) for c in candidates])
    finite = np.isfinite(fit)
    if not finite.any():
        return 0
    pos, fit = pos[finite], fit[finite]
    diff = pos[:, None, :] - registry.positions[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))     # (n_candidates, n_peaks)
    nearest = np.argmin(dist, axis=1)
    found: set[int] = set()
    for i, peak in enumerate(nearest):
        if dist[i, peak] <= registry.niche_radius and \
                fit[i] >= registry.fitnesses[peak] - accuracy:
            found.add(int(peak))
    return len(found)
