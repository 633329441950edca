"""driftlab: a verification lab for the (1+1) EA on sums of two transformed linear functions.

Builds the objective class (separable, overlapping and chance-constrained
forms), runs the elitist EA with standard bit mutation, constructs the
drift-certifying potential, measures drift exactly on small instances and
statistically on large ones, and reproduces the n*log(n) runtime scaling.
"""

from .version import __version__
from .rng import RandomSource
from .transforms import (
    MonotoneTransform,
    affine,
    compose,
    identity,
    power,
    scale,
    square,
    square_root,
)
from .objectives import (
    BitString,
    ChanceInstance,
    CompositeObjective,
    DomainEmbedding,
    LinearFunction,
    MultimodalInstance,
    as_bits,
    build_chance,
    build_separable,
    chance_level_check,
    eval_extended,
    generate_instance,
    load_chance_instance,
    load_instance,
    normal_quantile,
    onemax,
    save_chance_instance,
    save_instance,
)
from .potential import (
    CombinedPotential,
    PotentialFunction,
    build_combined_potential,
    build_potential,
    combine_potentials,
    single_flip_drift_value,
    zero_gain_series,
)
from .ea import (
    EAConfig,
    MutationEvent,
    RunTrace,
    default_budget,
    elitist_step,
    run_ea,
    standard_bit_mutation,
)
from .drift import (
    DriftReport,
    DriftSample,
    DriftTimeBound,
    EventClassification,
    StateSpace,
    classify_event,
    drift_rate_reference,
    drift_time_bounds,
    exact_drift,
    exhaustive_drift_check,
    monte_carlo_drift,
)
from .experiments import (
    ExperimentConfig,
    FitResult,
    ReportBundle,
    chance_demo,
    escape_study,
    fit_nlogn,
    run_study,
    scaling_study,
    tail_study,
)

__all__ = [
    "__version__",
    "RandomSource",
    "MonotoneTransform",
    "identity",
    "square",
    "square_root",
    "power",
    "scale",
    "affine",
    "compose",
    "BitString",
    "as_bits",
    "LinearFunction",
    "DomainEmbedding",
    "CompositeObjective",
    "ChanceInstance",
    "MultimodalInstance",
    "eval_extended",
    "build_separable",
    "build_chance",
    "onemax",
    "normal_quantile",
    "chance_level_check",
    "generate_instance",
    "save_instance",
    "load_instance",
    "save_chance_instance",
    "load_chance_instance",
    "PotentialFunction",
    "CombinedPotential",
    "build_potential",
    "build_combined_potential",
    "combine_potentials",
    "zero_gain_series",
    "single_flip_drift_value",
    "EAConfig",
    "MutationEvent",
    "RunTrace",
    "standard_bit_mutation",
    "elitist_step",
    "run_ea",
    "default_budget",
    "StateSpace",
    "DriftSample",
    "DriftReport",
    "DriftTimeBound",
    "EventClassification",
    "classify_event",
    "drift_rate_reference",
    "drift_time_bounds",
    "exact_drift",
    "exhaustive_drift_check",
    "monte_carlo_drift",
    "ExperimentConfig",
    "FitResult",
    "ReportBundle",
    "scaling_study",
    "escape_study",
    "tail_study",
    "chance_demo",
    "run_study",
    "fit_nlogn",
]
