"""Hill-valley basin analysis, elitist sub-clustering, and niching drivers.

Four drivers share one swarm engine:

* ``run_timpso``    -- Halton scouting, k-means + silhouette clustering,
  hill-valley sub-clustering with optional local dives, equitable particle
  allocation, then per-niche gBest fine search.
* ``run_kpso``      -- cognitive free particles re-clustered every fixed
  interval; overcrowded clusters shed their worst members for re-seeding.
* ``run_edhcpso``   -- one stall-gated clustering pass between a cognitive
  preliminary phase and per-cluster gBest fine search.
* ``run_nichepso``  -- stalled cognitive particles spawn two-particle
  sub-swarms driven by GCPSO, absorbing passers-by; merging disabled.

Variants with alternative preliminary topologies (``npsohc``, ``npsoc``,
``npsoe``) reuse the single-pass driver and exist for topology comparisons.

Every driver is deterministic given (seed, config, objective) and never
consumes more fitness evaluations than its budget.
"""
from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .clustering import select_k
from .errors import BudgetExhausted, ConfigurationError
from .lds import HaltonState, next_point
from .localsearch import PatternSearchConfig, pattern_search
from .objective import EvalCounter, ObjectiveSpec, evaluate
from .swarm import (
    COGNITIVE,
    SCOUTING,
    Cognitive,
    ConstantInertia,
    EuclideanLBest,
    GBest,
    LinearInertia,
    Particle,
    PervasiveCognitive,
    PervasiveCognitiveParams,
    RhoState,
    StallCriterion,
    VelocityParams,
    apply_step,
    gcpso_best_step,
    is_stalled,
    nearest_neighbors,
    scout_radius,
    step_velocity,
)


class BasinRelation(enum.Enum):
    SAME_BASIN = "same_basin"
    DIFFERENT_BASINS = "different_basins"


@dataclass(frozen=True)
class HillValleyParams:
    """Interior sample offsets along the test segment, strictly inside (0, 1)."""

    lambdas: tuple[float, ...] = (0.02, 0.25, 0.5, 0.75, 0.98)

    def __post_init__(self) -> None:
        lams = self.lambdas
        if not lams or any(not 0.0 < l < 1.0 for l in lams):
            raise ConfigurationError("lambdas must lie strictly inside (0, 1)")
        if any(a >= b for a, b in zip(lams, lams[1:])):
            raise ConfigurationError("lambdas must be strictly increasing")


@dataclass
class Niche:
    """A sub-swarm: best point found (head), members, and a radius.

    Niches formed by sub-clustering carry a containment box (the allocated
    ball around the head intersected with the domain); their members exploit
    only that region so equal-fitness neighbour basins cannot steal the head.
    """

    head_position: np.ndarray
    head_fitness: float
    members: list[Particle]
    radius: float = 0.0
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None

    @property
    def head(self) -> tuple[np.ndarray, float]:
        return self.head_position, self.head_fitness

    def absorb_best(self) -> None:
        """Promote the best member pbest to head."""
        for p in self.members:
            if p.pbest_fitness > self.head_fitness:
                self.head_fitness = p.pbest_fitness
                self.head_position = p.pbest_position.copy()


@dataclass(frozen=True)
class AlgoConfig:
    """Shared driver configuration; fields unused by a driver are ignored."""

    population: int = 30
    budget: int = 30_000
    seed: int = 0
    # velocity model
    c1: float = 2.0
    c2: float = 2.0
    prelim_inertia: float = 0.7290
    fine_w_max: float = 0.9
    fine_w_min: float = 0.4
    v_max_frac: float = 0.5
    # pervasive-cognitive scouting
    gamma: float = 1.0
    eps_g: float = 1e-4
    switch_window: int = 3
    # stall detection (particle level, preliminary phase and sub-swarm spawning)
    stall_eps: float = 1e-4
    stall_window: int = 3
    # stall detection (niche-head level, fine phase); eps 0 disables the exit
    # so the fine search spends the whole budget and can reach the tightest
    # accuracy levels instead of quitting at the first plateau
    fine_stall_eps: float = 0.0
    fine_stall_window: int = 25
    # phase control
    prelim_budget_frac: float = 0.3
    recluster_interval: int = 50
    # clustering / sub-clustering
    kmeans_restarts: int = 10
    subcluster_eps: float = 0.1
    hv_lambdas: tuple[float, ...] = (0.02, 0.25, 0.5, 0.75, 0.98)
    local_dives: bool = True
    dive_step_frac: float = 0.5          # fraction of the scout radius
    dive_evals_per_dim: int = 20
    # euclidean lbest neighborhood
    neighborhood_size: int = 1
    # GCPSO
    rho0: float = 1.0
    rho_success_threshold: int = 15
    rho_failure_threshold: int = 5

    def __post_init__(self) -> None:
        if self.population < 2:
            raise ConfigurationError("population must be >= 2")
        if self.budget < self.population:
            raise ConfigurationError("budget must cover at least one evaluation per particle")


@dataclass
class RunResult:
    """Driver output: niche heads plus accounting and phase telemetry."""

    heads: list[tuple[np.ndarray, float]]
    evaluations: int
    iterations: int
    telemetry: dict
    status: str = "ok"


# ---------------------------------------------------------------------------
# hill-valley test

def hill_valley(
    x1: np.ndarray,
    x2: np.ndarray,
    spec: ObjectiveSpec,
    params: HillValleyParams,
    counter: EvalCounter,
    f1: Optional[float] = None,
    f2: Optional[float] = None,
) -> BasinRelation:
    """Concavity test between two points (maximization form).

    The segment between x1 and x2 is sampled at the lambda offsets; a sample
    strictly below min(f(x1), f(x2)) is a valley, so the points belong to
    different basins.  Short-circuits on the first valley found.  Endpoint
    fitnesses may be passed in to avoid re-evaluation.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if np.array_equal(x1, x2):
        raise ConfigurationError("hill-valley needs two distinct points")
    if f1 is None:
        f1 = evaluate(spec, x1, counter)
    if f2 is None:
        f2 = evaluate(spec, x2, counter)
    floor = min(f1, f2)
    for lam in params.lambdas:
        z = x1 + lam * (x2 - x1)
        if evaluate(spec, z, counter) < floor:
            return BasinRelation.DIFFERENT_BASINS
    return BasinRelation.SAME_BASIN


# ---------------------------------------------------------------------------
# elitist sub-clustering

def _uniform_in_ball(center: np.ndarray, radius: float, lower: np.ndarray,
                     upper: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from ball(center, radius) intersected with the bounds."""
    d = len(center)
    for _ in range(100):
        direction = rng.standard_normal(d)
        norm = np.linalg.norm(direction)
        if norm == 0.0:
            continue
        point = center + direction / norm * radius * rng.random() ** (1.0 / d)
        if np.all(point >= lower) and np.all(point <= upper):
            return point
    return np.clip(center + rng.uniform(-radius, radius, size=d), lower, upper)


def sub_cluster(
    cluster: Sequence[Particle],
    spec: ObjectiveSpec,
    eps_threshold: float,
    local_search: Optional[Callable[[np.ndarray, float], tuple[np.ndarray, float]]],
    counter: EvalCounter,
    params: HillValleyParams,
    rng: np.random.Generator,
) -> list[Niche]:
    """Split one proximity cluster into basin-consistent niches.

    Optionally dives every particle with `local_search`, keeps the elites
    within `eps_threshold` of the cluster-best fitness, merges same-basin
    elite heads via the hill-valley test, then re-allocates all cluster
    particles equitably within the peak radius of their niche head.  On
    budget exhaustion the niches formed so far are returned.
    """
    if not cluster:
        raise ConfigurationError("sub_cluster needs a non-empty cluster")
    particles = list(cluster)
    try:
        if local_search is not None:
            for p in particles:
                x, fit = local_search(p.pbest_position, p.pbest_fitness)
                if fit > p.pbest_fitness:
                    p.pbest_position = np.asarray(x, dtype=float)
                    p.pbest_fitness = float(fit)
    except BudgetExhausted:
        best = max(particles, key=lambda p: p.pbest_fitness)
        return [Niche(best.pbest_position.copy(), best.pbest_fitness, particles)]

    best_fit = max(p.pbest_fitness for p in particles)
    elites = [p for p in particles if best_fit - p.pbest_fitness < eps_threshold]
    if not elites:                       # eps_threshold == 0 keeps only the best
        elites = [max(particles, key=lambda p: p.pbest_fitness)]
    # fittest first; index breaks exact ties deterministically
    order = sorted(range(len(elites)),
                   key=lambda i: (-elites[i].pbest_fitness, i))
    stack = [elites[i] for i in order]

    survivors: list[Particle] = []
    aborted = False
    while stack:
        candidate = stack.pop()          # least fit remaining head
        merged = False
        for head in stack:               # every remaining head is at least as fit
            if np.array_equal(candidate.pbest_position, head.pbest_position):
                merged = True
                break
            try:
                relation = hill_valley(
                    candidate.pbest_position, head.pbest_position, spec, params,
                    counter, f1=candidate.pbest_fitness, f2=head.pbest_fitness,
                )
            except BudgetExhausted:
                aborted = True
                break
            if relation is BasinRelation.SAME_BASIN:
                merged = True
                break
        if aborted:
            if not merged:
                survivors.append(candidate)
            survivors.extend(stack)
            break
        if not merged:
            survivors.append(candidate)

    survivors.sort(key=lambda p: -p.pbest_fitness)
    heads = [(p.pbest_position.copy(), p.pbest_fitness) for p in survivors]
    m = len(heads)
    if m > 1:
        radius = min(
            float(np.linalg.norm(heads[i][0] - heads[j][0]))
            for i in range(m) for j in range(i + 1, m)
        ) / 2.0
    else:
        radius = math.inf
    niches = []
    for pos, fit in heads:
        if math.isfinite(radius):
            box_lo = np.maximum(pos - radius, spec.lower)
            box_hi = np.minimum(pos + radius, spec.upper)
        else:
            box_lo, box_hi = spec.lower, spec.upper
        niches.append(Niche(pos, fit, [], radius=radius,
                            lower=box_lo, upper=box_hi))

    # nearest-head assignment, then equitable rebalancing
    head_matrix = np.array([pos for pos, _ in heads])
    for p in particles:
        j = int(np.argmin(np.linalg.norm(head_matrix - p.pbest_position, axis=1)))
        niches[j].members.append(p)

    q = len(particles)
    base = q // m
    targets = [base + (1 if j < q - base * m else 0) for j in range(m)]
    overfull = [j for j in range(m) if len(niches[j].members) > targets[j]]
    underfull = deque(j for j in range(m) if len(niches[j].members) < targets[j])
    try:
        for j in overfull:
            movable = sorted(niches[j].members, key=lambda p: p.pbest_fitness)
            while len(niches[j].members) > targets[j] and underfull:
                mover = movable.pop(0)
                dest = underfull[0]
                niches[j].members.remove(mover)
                _reseed_member(mover, niches[dest], spec, counter, rng)
                niches[dest].members.append(mover)
                if len(niches[dest].members) >= targets[dest]:
                    underfull.popleft()
        for niche in niches:             # contract: members sit within the radius
            if not math.isfinite(niche.radius):
                continue
            for p in niche.members:
                d = float(np.linalg.norm(p.pbest_position - niche.head_position))
                if d > niche.radius:
                    _reseed_member(p, niche, spec, counter, rng)
    except BudgetExhausted:
        pass
    for niche in niches:
        niche.absorb_best()
    return niches


def _reseed_member(p: Particle, niche: Niche, spec: ObjectiveSpec,
                   counter: EvalCounter, rng: np.random.Generator) -> None:
    """Fresh position inside the niche ball; pbest restarts there."""
    radius = niche.radius if math.isfinite(niche.radius) else float(np.max(spec.width))
    position = _uniform_in_ball(niche.head_position, radius, spec.lower, spec.upper, rng)
    fitness = evaluate(spec, position, counter)
    p.position = position
    p.velocity = np.zeros_like(position)
    p.pbest_position = position.copy()
    p.pbest_fitness = fitness
    p.anchor = position.copy()
    p.scout_state = COGNITIVE
    p.stall_count = 0
    p.fitness_history.clear()
    p.fitness_history.append(fitness)
    p.pbest_history.clear()
    p.pbest_history.append(fitness)


# ---------------------------------------------------------------------------
# shared driver machinery

def _v_max(spec: ObjectiveSpec, cfg: AlgoConfig) -> np.ndarray:
    return cfg.v_max_frac * spec.width


def _init_particles(spec: ObjectiveSpec, cfg: AlgoConfig, counter: EvalCounter,
                    rng: np.random.Generator, scouting: bool) -> list[Particle]:
    """Halton-seeded population with uniform random velocities."""
    v_max = _v_max(spec, cfg)
    seeder = HaltonState.for_dimension(spec.dimension)
    particles = []
    for i in range(cfg.population):
        position = next_point(seeder, spec.lower, spec.upper)
        velocity = rng.uniform(-v_max, v_max)
        fitness = evaluate(spec, position, counter)
        stream = HaltonState.for_dimension(spec.dimension, start=1 + i) if scouting else None
        particles.append(Particle.spawn(
            position, velocity, fitness,
            history_len=cfg.stall_window + 1,
            switch_len=cfg.switch_window + 1,
            scout_stream=stream, scouting=scouting,
        ))
    return particles


def _best_pbests(particles: Sequence[Particle]) -> list[tuple[np.ndarray, float]]:
    ranked = sorted(particles, key=lambda p: -p.pbest_fitness)
    return [(p.pbest_position.copy(), p.pbest_fitness) for p in ranked]


def _preliminary_phase(
    particles: list[Particle],
    spec: ObjectiveSpec,
    cfg: AlgoConfig,
    counter: EvalCounter,
    rng: np.random.Generator,
    topology: str,
    cap: int,
) -> int:
    """Advance particles independently until all stall or the cap is hit.

    Stalled particles are skipped and consume no evaluations.  Particles that
    are still scouting never count as stalled; the improvement switch is
    their exit.  Returns the number of sweeps performed.
    """
    vp = VelocityParams(cfg.c1, cfg.c2, ConstantInertia(cfg.prelim_inertia),
                        _v_max(spec, cfg))
    stall = StallCriterion(cfg.stall_window, cfg.stall_eps)
    scout = None
    if topology == "pervasive":
        scout = PervasiveCognitive(PervasiveCognitiveParams(
            radius=scout_radius(spec.lower, spec.upper, cfg.population, cfg.gamma),
            eps_g=cfg.eps_g, window=cfg.switch_window, gamma=cfg.gamma,
        ))

    def parked(p: Particle) -> bool:
        return p.scout_state != SCOUTING and is_stalled(p, stall)

    sweeps = 0
    while counter.used < cap:
        if all(parked(p) for p in particles):
            break
        for i, p in enumerate(particles):
            if counter.used >= cap:
                break
            if parked(p):
                continue
            if topology == "pervasive":
                policy = scout
            elif topology == "cognitive":
                policy = Cognitive()
            elif topology == "euclidean":
                policy = EuclideanLBest(
                    nearest_neighbors(particles, i, cfg.neighborhood_size))
            else:
                raise ConfigurationError(f"unknown preliminary topology {topology!r}")
            velocity = step_velocity(p, policy, vp, rng)
            apply_step(p, velocity, spec.lower, spec.upper, spec, counter)
        sweeps += 1
    return sweeps


def _cluster_into_niches(particles: list[Particle], cfg: AlgoConfig,
                         rng: np.random.Generator) -> list[Niche]:
    """k-means + silhouette over pbests; each cluster becomes one niche."""
    groups = _cluster_groups(particles, cfg, rng)
    niches = []
    for group in groups:
        head = max(group, key=lambda p: p.pbest_fitness)
        radius = max(
            float(np.linalg.norm(p.pbest_position - head.pbest_position))
            for p in group
        )
        niches.append(Niche(head.pbest_position.copy(), head.pbest_fitness,
                            list(group), radius=radius))
    return niches


def _cluster_groups(particles: list[Particle], cfg: AlgoConfig,
                    rng: np.random.Generator) -> list[list[Particle]]:
    pbests = np.array([p.pbest_position for p in particles])
    if len(particles) < 4 or len(np.unique(pbests, axis=0)) < 2:
        return [list(particles)]
    model = select_k(pbests, restarts=cfg.kmeans_restarts, rng=rng)
    return [
        [particles[i] for i in np.where(model.labels == j)[0]]
        for j in range(model.k)
    ]


def _fine_phase(
    niches: list[Niche],
    spec: ObjectiveSpec,
    cfg: AlgoConfig,
    counter: EvalCounter,
    rng: np.random.Generator,
) -> int:
    """Per-niche gBest search with linearly decaying inertia.

    Runs until the budget is gone or every niche head has stalled.  Returns
    the number of sweeps performed.
    """
    members = sum(len(n.members) for n in niches)
    if members == 0:
        return 0
    vp = VelocityParams(cfg.c1, cfg.c2,
                        LinearInertia(cfg.fine_w_max, cfg.fine_w_min),
                        _v_max(spec, cfg))
    horizon = max(1, counter.remaining // members)
    window = cfg.fine_stall_window
    histories = [deque([n.head_fitness], maxlen=window + 1) for n in niches]
    sweeps = 0
    while counter.remaining > 0:
        if sweeps > 0 and all(
            len(h) == window + 1 and abs(h[-1] - h[0]) < cfg.fine_stall_eps
            for h in histories
        ):
            break
        stop = False
        for niche, history in zip(niches, histories):
            lo = niche.lower if niche.lower is not None else spec.lower
            hi = niche.upper if niche.upper is not None else spec.upper
            for p in niche.members:
                if counter.remaining == 0:
                    stop = True
                    break
                velocity = step_velocity(p, GBest(niche.head_position), vp, rng,
                                         k=sweeps, max_iter=horizon)
                apply_step(p, velocity, lo, hi, spec, counter)
                if p.pbest_fitness > niche.head_fitness:
                    niche.head_fitness = p.pbest_fitness
                    niche.head_position = p.pbest_position.copy()
            history.append(niche.head_fitness)
            if stop:
                break
        sweeps += 1
        if stop:
            break
    return sweeps


def _heads_of(niches: Sequence[Niche]) -> list[tuple[np.ndarray, float]]:
    ranked = sorted(niches, key=lambda n: -n.head_fitness)
    return [(n.head_position.copy(), n.head_fitness) for n in ranked]


def _set_containment(niches: list[Niche], spec: ObjectiveSpec) -> None:
    """Confine each niche to a ball around its head for the fine search.

    Per-cluster peak radii leave single-niche clusters unbounded, so the
    effective radius also respects the global minimum head separation;
    without this, members drift into equal-fitness neighbour basins and
    steal the head.
    """
    if len(niches) < 2:
        return
    global_r = min(
        float(np.linalg.norm(niches[i].head_position - niches[j].head_position))
        for i in range(len(niches)) for j in range(i + 1, len(niches))
    ) / 2.0
    if global_r <= 0.0:
        return
    for niche in niches:
        r = min(niche.radius, global_r)
        niche.lower = np.maximum(niche.head_position - r, spec.lower)
        niche.upper = np.minimum(niche.head_position + r, spec.upper)


# ---------------------------------------------------------------------------
# drivers

def _run_single_pass(
    spec: ObjectiveSpec,
    cfg: AlgoConfig,
    prelim_topology: str,
    use_subclustering: bool,
    use_dives: bool,
) -> RunResult:
    """Common skeleton: preliminary phase, one clustering pass, fine search."""
    rng = np.random.default_rng(cfg.seed)
    counter = EvalCounter(cfg.budget)
    telemetry = {"prelim_topology": prelim_topology}
    try:
        particles = _init_particles(spec, cfg, counter, rng,
                                    scouting=prelim_topology == "pervasive")
    except BudgetExhausted:
        return RunResult([], counter.used, 0, telemetry, status="budget_exhausted_init")

    cap = int(cfg.prelim_budget_frac * cfg.budget)
    prelim_sweeps = _preliminary_phase(particles, spec, cfg, counter, rng,
                                       prelim_topology, cap)
    telemetry["prelim_sweeps"] = prelim_sweeps
    telemetry["prelim_evals"] = counter.used

    if counter.remaining == 0:
        return RunResult(_best_pbests(particles), counter.used, prelim_sweeps,
                         telemetry, status="budget_exhausted_preliminary")

    if use_subclustering:
        hv = HillValleyParams(cfg.hv_lambdas)
        dive = None
        if use_dives:
            # dive steps scale with the scouting ball, the natural local scale
            r_scout = scout_radius(spec.lower, spec.upper, cfg.population, cfg.gamma)
            gmean_width = float(np.exp(np.mean(np.log(spec.width))))
            step_frac = min(0.25, cfg.dive_step_frac * r_scout / gmean_width)
            dive_cfg = PatternSearchConfig(
                initial_step=step_frac,
                max_evals=cfg.dive_evals_per_dim * spec.dimension,
            )
            dive = lambda x0, f0: pattern_search(spec, x0, dive_cfg, counter, f0=f0)
        niches = []
        for group in _cluster_groups(particles, cfg, rng):
            if len(group) == 1:          # lone particle: niche without basin tests
                p = group[0]
                niches.append(Niche(p.pbest_position.copy(), p.pbest_fitness,
                                    [p], radius=math.inf))
                continue
            niches.extend(sub_cluster(group, spec, cfg.subcluster_eps, dive,
                                      counter, hv, rng))
        _set_containment(niches, spec)
    else:
        niches = _cluster_into_niches(particles, cfg, rng)
    telemetry["n_niches"] = len(niches)
    telemetry["clustering_evals"] = counter.used - telemetry["prelim_evals"]

    fine_sweeps = _fine_phase(niches, spec, cfg, counter, rng)
    telemetry["fine_sweeps"] = fine_sweeps
    return RunResult(_heads_of(niches), counter.used, prelim_sweeps + fine_sweeps,
                     telemetry)


def run_timpso(spec: ObjectiveSpec, cfg: AlgoConfig) -> RunResult:
    """Topology-informed multi-swarm PSO: scouting, sub-clustering, gBest."""
    return _run_single_pass(spec, cfg, "pervasive", use_subclustering=True,
                            use_dives=cfg.local_dives)


def run_edhcpso(spec: ObjectiveSpec, cfg: AlgoConfig) -> RunResult:
    """Single-clustering-pass driver with a cognitive preliminary phase."""
    return _run_single_pass(spec, cfg, "cognitive", use_subclustering=False,
                            use_dives=False)


def run_npsohc(spec: ObjectiveSpec, cfg: AlgoConfig) -> RunResult:
    """Topology-comparison variant: scouting preliminary, plain clustering."""
    return _run_single_pass(spec, cfg, "pervasive", use_subclustering=False,
                            use_dives=False)


def run_npsoc(spec: ObjectiveSpec, cfg: AlgoConfig) -> RunResult:
    """Topology-comparison variant: cognitive preliminary, plain clustering."""
    return _run_single_pass(spec, cfg, "cognitive", use_subclustering=False,
                            use_dives=False)


def run_npsoe(spec: ObjectiveSpec, cfg: AlgoConfig) -> RunResult:
    """Topology-comparison variant: euclidean-lbest preliminary."""
    return _run_single_pass(spec, cfg, "euclidean", use_subclustering=False,
                            use_dives=False)


def run_kpso(spec: ObjectiveSpec, cfg: AlgoConfig) -> RunResult:
    """Cyclically re-clustered multi-swarm PSO.

    Every `recluster_interval` sweeps the pbests are re-clustered; clusters
    act as gBest niches, and overcrowded clusters shed their worst members,
    which restart as free cognitive particles at random positions.
    """
    rng = np.random.default_rng(cfg.seed)
    counter = EvalCounter(cfg.budget)
    telemetry = {"clustering_passes": 0}
    try:
        particles = _init_particles(spec, cfg, counter, rng, scouting=False)
    except BudgetExhausted:
        return RunResult([], counter.used, 0, telemetry, status="budget_exhausted_init")

    v_max = _v_max(spec, cfg)
    vp_free = VelocityParams(cfg.c1, cfg.c2, ConstantInertia(cfg.prelim_inertia), v_max)
    vp_niche = VelocityParams(cfg.c1, cfg.c2,
                              LinearInertia(cfg.fine_w_max, cfg.fine_w_min), v_max)
    horizon = max(1, cfg.budget // cfg.population)
    niche_of: dict[int, Niche] = {}
    niches: list[Niche] = []
    sweep = 0
    try:
        while counter.remaining > 0:
            if sweep > 0 and sweep % cfg.recluster_interval == 0:
                niches = _recluster_kpso(particles, spec, cfg, counter, rng, niche_of)
                telemetry["clustering_passes"] += 1
            for i, p in enumerate(particles):
                if counter.remaining == 0:
                    break
                niche = niche_of.get(i)
                if niche is None:
                    velocity = step_velocity(p, Cognitive(), vp_free, rng)
                else:
                    velocity = step_velocity(p, GBest(niche.head_position), vp_niche,
                                             rng, k=sweep, max_iter=horizon)
                apply_step(p, velocity, spec.lower, spec.upper, spec, counter)
                if niche is not None and p.pbest_fitness > niche.head_fitness:
                    niche.head_fitness = p.pbest_fitness
                    niche.head_position = p.pbest_position.copy()
            sweep += 1
    except BudgetExhausted:
        pass
    if not niches:                       # budget ended before the first pass
        niches = _cluster_into_niches(particles, cfg, rng)
    return RunResult(_heads_of(niches), counter.used, sweep, telemetry)


def _recluster_kpso(particles, spec, cfg, counter, rng, niche_of):
    """One kPSO niche-identification pass; mutates niche_of in place."""
    groups = _cluster_groups(particles, cfg, rng)
    index_of = {id(p): i for i, p in enumerate(particles)}
    n_avg = len(particles) / len(groups)
    niche_of.clear()
    niches = []
    for group in groups:
        group = sorted(group, key=lambda p: -p.pbest_fitness)
        shed = group[math.ceil(n_avg):] if len(group) > n_avg else []
        kept = group[:len(group) - len(shed)]
        head = kept[0]
        niche = Niche(head.pbest_position.copy(), head.pbest_fitness, kept)
        niche.radius = max(
            float(np.linalg.norm(p.pbest_position - niche.head_position))
            for p in kept
        )
        niches.append(niche)
        for p in kept:
            niche_of[index_of[id(p)]] = niche
        for p in shed:                   # restart as free cognitive particles
            position = rng.uniform(spec.lower, spec.upper)
            fitness = evaluate(spec, position, counter)
            p.position = position
            p.velocity = rng.uniform(-_v_max(spec, cfg), _v_max(spec, cfg))
            p.pbest_position = position.copy()
            p.pbest_fitness = fitness
            p.anchor = position.copy()
            p.stall_count = 0
            p.fitness_history.clear()
            p.fitness_history.append(fitness)
            p.pbest_history.clear()
            p.pbest_history.append(fitness)
    return niches


def run_nichepso(spec: ObjectiveSpec, cfg: AlgoConfig) -> RunResult:
    """Sub-swarm spawning PSO with GCPSO heads and no merging.

    Free particles move cognitively; one whose pbest barely changes over the
    stall window spawns a two-particle sub-swarm with its closest neighbour.
    Free particles entering a sub-swarm radius are absorbed.
    """
    rng = np.random.default_rng(cfg.seed)
    counter = EvalCounter(cfg.budget)
    telemetry = {"spawned": 0, "absorbed": 0}
    try:
        particles = _init_particles(spec, cfg, counter, rng, scouting=False)
    except BudgetExhausted:
        return RunResult([], counter.used, 0, telemetry, status="budget_exhausted_init")

    v_max = _v_max(spec, cfg)
    vp = VelocityParams(cfg.c1, cfg.c2, ConstantInertia(cfg.prelim_inertia), v_max)
    stall = StallCriterion(cfg.stall_window, cfg.stall_eps)
    main: list[Particle] = list(particles)
    swarms: list[dict] = []
    sweep = 0
    try:
        while counter.remaining > 0:
            for p in main:
                if counter.remaining == 0:
                    break
                velocity = step_velocity(p, Cognitive(), vp, rng)
                apply_step(p, velocity, spec.lower, spec.upper, spec, counter)
            for swarm in swarms:
                if counter.remaining == 0:
                    break
                _nichepso_swarm_step(swarm, spec, cfg, vp, counter, rng)
            _absorb(main, swarms, telemetry)
            _spawn(main, swarms, stall, cfg, telemetry)
            sweep += 1
    except BudgetExhausted:
        pass

    heads = []
    for swarm in swarms:
        best = max(swarm["members"], key=lambda p: p.pbest_fitness)
        heads.append((best.pbest_position.copy(), best.pbest_fitness))
    if not heads and particles:
        best = max(particles, key=lambda p: p.pbest_fitness)
        heads = [(best.pbest_position.copy(), best.pbest_fitness)]
    heads.sort(key=lambda h: -h[1])
    telemetry["n_subswarms"] = len(swarms)
    return RunResult(heads, counter.used, sweep, telemetry)


def _nichepso_swarm_step(swarm: dict, spec: ObjectiveSpec, cfg: AlgoConfig,
                         vp: VelocityParams, counter: EvalCounter,
                         rng: np.random.Generator) -> None:
    members: list[Particle] = swarm["members"]
    best = max(members, key=lambda p: p.pbest_fitness)
    before = best.pbest_fitness
    for p in members:
        if counter.remaining == 0:
            raise BudgetExhausted("sub-swarm step out of budget")
        if p is best:
            gcpso_best_step(p, best.pbest_position.copy(), swarm["rho"], vp,
                            spec.lower, spec.upper, spec, counter, rng)
        else:
            velocity = step_velocity(p, GBest(best.pbest_position), vp, rng)
            apply_step(p, velocity, spec.lower, spec.upper, spec, counter)
    new_best = max(members, key=lambda p: p.pbest_fitness)
    swarm["rho"].update(new_best.pbest_fitness > before)
    swarm["radius"] = max(
        float(np.linalg.norm(p.pbest_position - new_best.pbest_position))
        for p in members
    )
    swarm["head"] = new_best


def _absorb(main: list[Particle], swarms: list[dict], telemetry: dict) -> None:
    for p in list(main):
        for swarm in swarms:
            head: Particle = swarm["head"]
            if np.linalg.norm(p.position - head.pbest_position) <= swarm["radius"]:
                main.remove(p)
                swarm["members"].append(p)
                telemetry["absorbed"] += 1
                break


def _spawn(main: list[Particle], swarms: list[dict], stall: StallCriterion,
           cfg: AlgoConfig, telemetry: dict) -> None:
    for p in list(main):
        if p not in main:
            continue
        if not is_stalled(p, stall):
            continue
        main.remove(p)
        members = [p]
        others = [(float(np.linalg.norm(q.position - p.position)), i, q)
                  for i, q in enumerate(main)]
        if others:
            _, _, mate = min(others)
            main.remove(mate)
            members.append(mate)
        for q in members:
            q.fitness_history.clear()
            q.fitness_history.append(q.pbest_fitness)
        head = max(members, key=lambda q: q.pbest_fitness)
        radius = max(float(np.linalg.norm(q.pbest_position - head.pbest_position))
                     for q in members)
        swarms.append({
            "members": members, "head": head, "radius": radius,
            "rho": RhoState(cfg.rho0, cfg.rho_success_threshold,
                            cfg.rho_failure_threshold),
        })
        telemetry["spawned"] += 1


ALGORITHMS: dict[str, Callable[[ObjectiveSpec, AlgoConfig], RunResult]] = {
    "timpso": run_timpso,
    "kpso": run_kpso,
    "edhcpso": run_edhcpso,
    "nichepso": run_nichepso,
    "npsohc": run_npsohc,
    "npsoc": run_npsoc,
    "npsoe": run_npsoe,
}
