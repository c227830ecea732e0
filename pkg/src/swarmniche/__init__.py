"""swarmniche: multi-swarm PSO niching toolkit with a peak-ratio benchmark harness."""

__version__ = "0.1.0"

from .errors import BudgetExhausted, ConfigurationError
from .lds import HaltonState, first_primes, next_point, radical_inverse
from .objective import (
    EvalCounter,
    ObjectiveSpec,
    PeakRegistry,
    builtin,
    count_peaks_found,
    evaluate,
    get_objective,
    peak_registry,
    register_function,
    registered_ids,
)
from .swarm import (
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
    inertia_at,
    is_stalled,
    scout_radius,
    step_velocity,
)
from .clustering import ClusterModel, kmeans, select_k, silhouette
from .localsearch import PatternSearchConfig, pattern_search
from .niching import (
    ALGORITHMS,
    AlgoConfig,
    BasinRelation,
    HillValleyParams,
    Niche,
    RunResult,
    hill_valley,
    run_edhcpso,
    run_kpso,
    run_nichepso,
    run_timpso,
    sub_cluster,
)
from .harness import (
    ACCURACY_LEVELS,
    ExperimentConfig,
    ExperimentResult,
    ReportRow,
    RunRecord,
    WilcoxonResult,
    execute_run,
    peak_ratio,
    post_optimize_heads,
    run_experiment,
    score_run,
    wilcoxon_signed_rank,
    write_reports,
)

__all__ = [
    "__version__",
    "BudgetExhausted", "ConfigurationError",
    "HaltonState", "first_primes", "next_point", "radical_inverse",
    "EvalCounter", "ObjectiveSpec", "PeakRegistry", "builtin",
    "count_peaks_found", "evaluate", "get_objective", "peak_registry",
    "register_function", "registered_ids",
    "Cognitive", "ConstantInertia", "EuclideanLBest", "GBest", "LinearInertia",
    "Particle", "PervasiveCognitive", "PervasiveCognitiveParams", "RhoState",
    "StallCriterion", "VelocityParams", "apply_step", "gcpso_best_step",
    "inertia_at", "is_stalled", "scout_radius", "step_velocity",
    "ClusterModel", "kmeans", "select_k", "silhouette",
    "PatternSearchConfig", "pattern_search",
    "ALGORITHMS", "AlgoConfig", "BasinRelation", "HillValleyParams", "Niche",
    "RunResult", "hill_valley", "run_edhcpso", "run_kpso", "run_nichepso",
    "run_timpso", "sub_cluster",
    "ACCURACY_LEVELS", "ExperimentConfig", "ExperimentResult", "ReportRow",
    "RunRecord", "WilcoxonResult", "execute_run", "peak_ratio",
    "post_optimize_heads", "run_experiment", "score_run",
    "wilcoxon_signed_rank", "write_reports",
]
