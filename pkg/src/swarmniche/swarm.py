"""Particle kinematics: velocity policies, inertia schedules, bounding, stalls.

Velocity policies cover every topology the drivers use:

* ``Cognitive``            -- pbest attraction only.
* ``GBest``                -- pbest plus swarm/niche best attraction.
* ``EuclideanLBest``       -- pbest plus best pbest among the k nearest particles.
* ``PervasiveCognitive``   -- Halton scouting inside a ball around the particle's
  anchor until its pbest stops improving, then a permanent flip to Cognitive.

Positions are clamped into bounds after every step and the velocity component
that hit a wall is zeroed, which keeps particles from pinning against bounds.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ConfigurationError
from .lds import HaltonState
from .objective import EvalCounter, ObjectiveSpec, evaluate

SCOUTING = "scouting"
COGNITIVE = "cognitive"


# ---------------------------------------------------------------------------
# parameter bundles

@dataclass(frozen=True)
class ConstantInertia:
    w: float


@dataclass(frozen=True)
class LinearInertia:
    w_max: float = 0.9
    w_min: float = 0.4

    def __post_init__(self) -> None:
        if self.w_max < self.w_min:
            raise ConfigurationError("w_max must be >= w_min")


InertiaSchedule = Union[ConstantInertia, LinearInertia]


def inertia_at(schedule: InertiaSchedule, k: int, max_iter: int) -> float:
    """Inertia weight at iteration k of max_iter."""
    if isinstance(schedule, ConstantInertia):
        return schedule.w
    if max_iter <= 0:
        raise ConfigurationError("linear inertia needs max_iter > 0")
    k = min(max(k, 0), max_iter)
    return schedule.w_max - (schedule.w_max - schedule.w_min) * k / max_iter


@dataclass(frozen=True)
class VelocityParams:
    c1: float = 2.0
    c2: float = 2.0
    inertia: InertiaSchedule = ConstantInertia(0.7290)
    v_max: np.ndarray = None

    def __post_init__(self) -> None:
        if self.c1 < 0 or self.c2 < 0:
            raise ConfigurationError("acceleration coefficients must be >= 0")
        if self.v_max is None:
            raise ConfigurationError("v_max is required")
        object.__setattr__(self, "v_max", np.asarray(self.v_max, dtype=float))


@dataclass(frozen=True)
class PervasiveCognitiveParams:
    """Scouting ball scale, switch threshold and window for the scout model."""

    radius: float
    eps_g: float = 1e-4
    window: int = 3
    gamma: float = 1.0

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ConfigurationError("scout radius must be positive")
        if self.eps_g <= 0:
            raise ConfigurationError("switch threshold eps_g must be positive")
        if self.window < 1:
            raise ConfigurationError("switch window must be >= 1")


@dataclass(frozen=True)
class StallCriterion:
    """A particle stalls when its fitness changes by less than eps across a
    window of `window` iterations.

    The history holds the fitness at each visited position, so an oscillating
    particle stays active until it actually settles; its pbest alone would go
    quiet long before that.
    """

    window: int = 3
    eps: float = 1e-4

    def __post_init__(self) -> None:
        if self.window < 1:
            raise ConfigurationError("stall window must be >= 1")


# ---------------------------------------------------------------------------
# particle state

@dataclass(eq=False)
class Particle:
    """Kinematic state plus the two fitness trails the policies consume.

    fitness_history records the fitness of each visited position (stall
    detection); pbest_history records the pbest trajectory (the scouting
    switch watches it for improvement drying up).
    """

    position: np.ndarray
    velocity: np.ndarray
    pbest_position: np.ndarray
    pbest_fitness: float
    anchor: np.ndarray                       # scout ball center
    scout_state: str = COGNITIVE
    stall_count: int = 0
    fitness_history: deque = field(default_factory=lambda: deque(maxlen=8))
    pbest_history: deque = field(default_factory=lambda: deque(maxlen=8))
    scout_stream: Optional[HaltonState] = None

    @classmethod
    def spawn(cls, position, velocity, fitness, history_len=8, switch_len=8,
              scout_stream=None, scouting=False):
        p = cls(
            position=np.array(position, dtype=float),
            velocity=np.array(velocity, dtype=float),
            pbest_position=np.array(position, dtype=float),
            pbest_fitness=float(fitness),
            anchor=np.array(position, dtype=float),
            scout_state=SCOUTING if scouting else COGNITIVE,
            fitness_history=deque(maxlen=history_len),
            pbest_history=deque(maxlen=switch_len),
            scout_stream=scout_stream,
        )
        p.fitness_history.append(float(fitness))
        p.pbest_history.append(float(fitness))
        return p


# velocity policies ----------------------------------------------------------

@dataclass(frozen=True)
class Cognitive:
    pass


@dataclass(frozen=True)
class GBest:
    gbest: np.ndarray


@dataclass(frozen=True)
class EuclideanLBest:
    neighbors: Sequence[Particle]


@dataclass(frozen=True)
class PervasiveCognitive:
    params: PervasiveCognitiveParams


Policy = Union[Cognitive, GBest, EuclideanLBest, PervasiveCognitive]


def scout_radius(lower: np.ndarray, upper: np.ndarray, population: int,
                 gamma: float = 1.0) -> float:
    """Half-diagonal of one of `population` equal hypercubes tiling the box.

    r = gamma * (sqrt(2)/2) * (volume / population)^(1/d)
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if population < 1:
        raise ConfigurationError("population must be >= 1")
    width = upper - lower
    if np.any(width <= 0):
        raise ConfigurationError("degenerate bounds: zero-volume search box")
    if gamma <= 0:
        raise ConfigurationError("gamma must be positive (r must stay > 0)")
    volume = float(np.prod(width))
    return gamma * (math.sqrt(2.0) / 2.0) * (volume / population) ** (1.0 / len(width))


def _switch_due(particle: Particle, params: PervasiveCognitiveParams) -> bool:
    h = particle.pbest_history
    if len(h) < params.window + 1:
        return False
    return abs(h[-1] - h[-1 - params.window]) < params.eps_g


def step_velocity(
    particle: Particle,
    policy: Policy,
    vp: VelocityParams,
    rng: np.random.Generator,
    k: int = 0,
    max_iter: int = 1,
) -> np.ndarray:
    """New clamped velocity for one particle under the given policy.

    The pervasive-cognitive policy mutates the particle's scout state: once the
    pbest improvement over the switch window drops below eps_g, the particle
    flips to the cognitive model for good and its history restarts so stall
    detection needs fresh evidence.
    """
    x = particle.position
    w = inertia_at(vp.inertia, k, max_iter)

    if isinstance(policy, PervasiveCognitive):
        if particle.scout_state == SCOUTING and _switch_due(particle, policy.params):
            particle.scout_state = COGNITIVE
            particle.fitness_history.clear()
            particle.pbest_history.clear()
        if particle.scout_state == SCOUTING:
            if particle.scout_stream is None:
                raise ConfigurationError("scouting particle has no Halton stream")
            r = policy.params.radius
            e_k = particle.scout_stream.next_unit()
            velocity = particle.anchor - x - r + 2.0 * r * e_k
            return np.clip(velocity, -vp.v_max, vp.v_max)
        policy = Cognitive()

    r1 = rng.random(x.shape[0])
    velocity = w * particle.velocity + vp.c1 * r1 * (particle.pbest_position - x)
    if isinstance(policy, GBest):
        r2 = rng.random(x.shape[0])
        velocity = velocity + vp.c2 * r2 * (policy.gbest - x)
    elif isinstance(policy, EuclideanLBest):
        if not policy.neighbors:
            raise ConfigurationError("euclidean lbest needs a non-empty neighbor set")
        best = max(policy.neighbors, key=lambda p: p.pbest_fitness)
        r2 = rng.random(x.shape[0])
        velocity = velocity + vp.c2 * r2 * (best.pbest_position - x)
    return np.clip(velocity, -vp.v_max, vp.v_max)


def nearest_neighbors(particles: Sequence[Particle], index: int, k: int = 1) -> list[Particle]:
    """The k nearest other particles by current position."""
    me = particles[index].position
    dists = [
        (float(np.linalg.norm(p.position - me)), j)
        for j, p in enumerate(particles) if j != index
    ]
    dists.sort()
    return [particles[j] for _, j in dists[:k]]


def apply_step(
    particle: Particle,
    velocity: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    spec: ObjectiveSpec,
    counter: EvalCounter,
) -> float:
    """Move, bound, evaluate, and update pbest.  Returns the new fitness.

    On budget exhaustion the particle is left untouched and the stop signal
    propagates to the driver.
    """
    proposed = particle.position + velocity
    new_position = np.clip(proposed, lower, upper)
    fitness = evaluate(spec, new_position, counter)

    clipped = new_position != proposed
    if clipped.any():
        velocity = velocity.copy()
        velocity[clipped] = 0.0
    particle.position = new_position
    particle.velocity = velocity
    if fitness > particle.pbest_fitness:
        particle.pbest_fitness = fitness
        particle.pbest_position = new_position.copy()
        particle.stall_count = 0
    else:
        particle.stall_count += 1
    particle.fitness_history.append(fitness)
    particle.pbest_history.append(particle.pbest_fitness)
    return fitness


def is_stalled(particle: Particle, crit: StallCriterion) -> bool:
    """True when the visited-position fitness barely moved across the window."""
    h = particle.fitness_history
    if len(h) < crit.window + 1:
        return False
    return abs(h[-1] - h[-1 - crit.window]) < crit.eps


# ---------------------------------------------------------------------------
# guaranteed-convergence step for a sub-swarm's best particle

@dataclass
class RhoState:
    """Adaptive sampling radius for the GCPSO best-particle resample."""

    rho: float = 1.0
    success_threshold: int = 15
    failure_threshold: int = 5
    successes: int = 0
    failures: int = 0

    def update(self, success: bool) -> None:
        if success:
            self.successes += 1
            self.failures = 0
            if self.successes >= self.success_threshold:
                self.rho *= 2.0
                self.successes = 0
        else:
            self.failures += 1
            self.successes = 0
            if self.failures >= self.failure_threshold:
                self.rho *= 0.5
                self.failures = 0


def gcpso_best_step(
    particle: Particle,
    gbest: np.ndarray,
    rho_state: RhoState,
    vp: VelocityParams,
    lower: np.ndarray,
    upper: np.ndarray,
    spec: ObjectiveSpec,
    counter: EvalCounter,
    rng: np.random.Generator,
    k: int = 0,
    max_iter: int = 1,
) -> float:
    """Resample the sub-swarm best around gbest: x <- g + w*v + rho*(1 - 2r).

    Keeps the best particle searching even when its pbest, gbest and position
    coincide.  rho adaptation is the caller's job via RhoState.update.
    """
    w = inertia_at(vp.inertia, k, max_iter)
    r = rng.random(particle.position.shape[0])
    velocity = gbest + w * particle.velocity + rho_state.rho * (1.0 - 2.0 * r) \
        - particle.position
    return apply_step(particle, velocity, lower, upper, spec, counter)
