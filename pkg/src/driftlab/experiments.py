"""Experiment drivers: runtime scaling, drift sweeps, tail checks, demos.

Every study consumes an :class:`ExperimentConfig`, spends replicate runs that
are independently seeded by (master seed, size index, replicate index), and
returns a :class:`ReportBundle` whose config echo is complete enough to re-run
the experiment.  Outputs are deterministic byte-for-byte for a fixed config:
aggregation happens in replicate-index order and reports carry no timestamps.
"""

from __future__ import annotations

import csv
import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .version import __version__
from .drift import exhaustive_drift_check
from .ea import EAConfig, RunTrace, default_budget, run_ea
from .objectives import (
    ChanceInstance,
    CompositeObjective,
    MultimodalInstance,
    build_chance,
    build_separable,
    chance_level_check,
    generate_instance,
    load_chance_instance,
    load_instance,
    onemax,
)
from .potential import build_combined_potential
from .rng import RandomSource

KINDS = ("scale", "drift", "escape", "tail", "chance", "run")
PRESETS = ("onemax", "separable", "chance")


@dataclass
class ExperimentConfig:
    """Complete description of one experiment; round-trips through to_dict."""

    kind: str
    n_values: tuple = ()
    s: int = 0
    alpha: Fraction = Fraction(1, 2)
    preset: Optional[str] = None
    weight_scheme: str = "uniform-int"
    weight_low: int = 1
    weight_high: int = 100
    transforms: tuple = ("square", "square_root")
    embedding: str = "canonical"
    replicates: int = 200
    seed: int = 1
    budget_multiplier: float = 20.0
    budget: Optional[int] = None
    workers: int = 1
    fresh_instances: bool = False
    r_values: tuple = (1.0, 2.0, 3.0)
    delta: Optional[float] = None
    confidence: float = 0.9
    level_samples: int = 1_000_000
    probes: int = 3
    exponent: Optional[int] = None
    trace_stride: int = 0
    instance_file: Optional[str] = None
    out_csv: Optional[str] = None
    out_json: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}; choose from {KINDS}")
        self.n_values = tuple(int(n) for n in self.n_values)
        if not self.n_values:
            raise ValueError("at least one problem size n is required")
        if any(n < 1 for n in self.n_values):
            raise ValueError("problem sizes must be positive")
        self.alpha = Fraction(self.alpha)
        self.transforms = tuple(self.transforms)
        self.r_values = tuple(float(r) for r in self.r_values)
        if self.replicates < 1:
            raise ValueError("replicate count must be at least 1")
        if self.workers < 1:
            raise ValueError("worker count must be at least 1")
        if self.preset is not None and self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; choose from {PRESETS}")
        if not 0.0 < self.confidence < 1.0:
            raise ValueError("confidence must lie in (0, 1)")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["alpha"] = f"{self.alpha.numerator}/{self.alpha.denominator}"
        d["n_values"] = list(self.n_values)
        d["transforms"] = list(self.transforms)
        d["r_values"] = list(self.r_values)
        return d

    @staticmethod
    def from_dict(d: dict) -> "ExperimentConfig":
        kwargs = dict(d)
        if "alpha" in kwargs:
            kwargs["alpha"] = Fraction(kwargs["alpha"])
        return ExperimentConfig(**kwargs)


@dataclass
class ScalingRow:
    n: int
    s: int
    alpha: str
    reps: int
    censored: int
    mean_T: float
    sd_T: float
    median_T: float
    ratio_nlogn: float


@dataclass
class EscapeRow:
    n: int
    reps: int
    censored: int
    mean_T: float
    sd_T: float


@dataclass
class TailRow:
    r: float
    threshold: float
    exceed_freq: float
    bound: float
    violation: bool


@dataclass
class ChanceRow:
    probe: str
    g_value: float
    empirical_level: float
    alpha_c: float


@dataclass
class RunRow:
    replicate: int
    hitting_time: Optional[int]
    accepted_steps: int
    budget_exhausted: bool


@dataclass
class FitResult:
    """Least-squares fits of mean runtimes against c*n*ln(n) and c*n^q."""

    nlogn_coefficient: float
    nlogn_rms_residual: float
    power_coefficient: float
    power_exponent: float
    power_rms_log_residual: float


@dataclass
class ReportBundle:
    """Everything one study produced, sufficient to reproduce it."""

    kind: str
    config: dict
    rows: list
    fits: Optional[dict]
    environment: dict
    checks: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "config": self.config,
            "rows": [asdict(r) for r in self.rows],
            "fits": self.fits,
            "environment": self.environment,
            "checks": self.checks,
            "notes": self.notes,
            "extras": self.extras,
        }

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_csv(self, path) -> None:
        columns = CSV_COLUMNS[self.kind]
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in self.rows:
                d = asdict(row)
                writer.writerow([d[c] for c in columns])


CSV_COLUMNS = {
    "scale": ["n", "s", "alpha", "reps", "censored", "mean_T", "sd_T", "median_T", "ratio_nlogn"],
    "escape": ["n", "reps", "mean_T", "sd_T"],
    "tail": ["r", "threshold", "exceed_freq", "bound"],
    "chance": ["probe", "g_value", "empirical_level", "alpha_c"],
    "run": ["replicate", "hitting_time", "accepted_steps", "budget_exhausted"],
}


def _environment(cfg: ExperimentConfig) -> dict:
    return {"artifact": "driftlab", "version": __version__, "seed": cfg.seed}


def build_objective(cfg: ExperimentConfig, n: int, rng: RandomSource):
    """Instance factory shared by all studies."""
    if cfg.instance_file:
        return load_instance(cfg.instance_file)
    if cfg.preset == "onemax":
        return onemax(n)
    if cfg.preset == "separable":
        if n < 2 or n % 2:
            raise ValueError("separable preset needs an even n >= 2")
        gen = rng.generator
        half = n // 2
        lo, hi = cfg.weight_low, cfg.weight_high
        return build_separable(
            gen.integers(lo, hi + 1, size=half).astype(float),
            gen.integers(lo, hi + 1, size=half).astype(float),
        )
    if cfg.preset == "chance":
        if n < 2 or n % 2:
            raise ValueError("chance preset needs an even nominal n >= 2 (n = 2m)")
        m = n // 2
        return build_chance(
            ChanceInstance(np.arange(1, m + 1, dtype=float), np.ones(m), cfg.confidence)
        )
    return generate_instance(
        n,
        cfg.s,
        cfg.alpha,
        weight_scheme=cfg.weight_scheme,
        weight_range=(cfg.weight_low, cfg.weight_high),
        transforms=cfg.transforms,
        embedding_scheme=cfg.embedding,
        rng=rng,
    )


def _hitting_time_job(args):
    instance, budget, seed, spawn_key, initial = args
    trace = run_ea(
        instance, EAConfig(max_iterations=budget), RandomSource(seed, spawn_key), initial=initial
    )
    return trace.hitting_time


def _run_replicates(jobs: list, workers: int) -> list:
    """Execute hitting-time jobs; results come back in replicate order."""
    if workers <= 1 or len(jobs) <= 1:
        return [_hitting_time_job(j) for j in jobs]
    chunk = max(1, len(jobs) // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_hitting_time_job, jobs, chunksize=chunk))


def _time_stats(times: list) -> tuple[int, float, float, float]:
    """(censored count, mean, sd, median) over the completed runs only."""
    completed = [t for t in times if t is not None]
    censored = len(times) - len(completed)
    if not completed:
        return censored, math.nan, math.nan, math.nan
    mean = statistics.fmean(completed)
    sd = statistics.stdev(completed) if len(completed) > 1 else 0.0
    median = float(statistics.median(completed))
    return censored, mean, sd, float(median)


def fit_nlogn(rows: Sequence) -> FitResult:
    """Fit mean runtimes to c*n*ln(n), and to c*n^q in log space."""
    points = []
    for row in rows:
        if hasattr(row, "n"):
            points.append((float(row.n), float(row.mean_T)))
        else:
            n, t = row
            points.append((float(n), float(t)))
    if len({n for n, _ in points}) < 3:
        raise ValueError("need at least 3 distinct sizes to fit")
    if any(not t > 0 or math.isnan(t) for _, t in points):
        raise ValueError("all mean runtimes must be positive to fit")
    ns = np.array([n for n, _ in points])
    ts = np.array([t for _, t in points])
    g = ns * np.log(ns)
    c = float((ts @ g) / (g @ g))
    rms = float(np.sqrt(np.mean((ts - c * g) ** 2)))
    slope, intercept = np.polyfit(np.log(ns), np.log(ts), 1)
    log_resid = np.log(ts) - (slope * np.log(ns) + intercept)
    return FitResult(
        nlogn_coefficient=c,
        nlogn_rms_residual=rms,
        power_coefficient=float(math.exp(intercept)),
        power_exponent=float(slope),
        power_rms_log_residual=float(np.sqrt(np.mean(log_resid**2))),
    )


def _fit_dict(rows) -> Optional[dict]:
    try:
        return asdict(fit_nlogn(rows))
    except ValueError:
        return None


def scaling_study(cfg: ExperimentConfig) -> ReportBundle:
    """Mean hitting times across a size grid, normalized by n*ln(n)."""
    if cfg.kind != "scale":
        raise ValueError(f"expected kind 'scale', got {cfg.kind!r}")
    root = RandomSource(cfg.seed)
    rows = []
    for idx, n in enumerate(cfg.n_values):
        source = root.spawn(idx)
        budget = cfg.budget if cfg.budget else default_budget(n, cfg.budget_multiplier)
        if cfg.fresh_instances:
            jobs = []
            for rep in range(cfg.replicates):
                rep_source = source.spawn(rep + 1)
                instance = build_objective(cfg, n, rep_source.spawn(0))
                run_source = rep_source.spawn(1)
                jobs.append((instance, budget, run_source.seed, run_source.spawn_key, None))
            shared = jobs[0][0]
        else:
            shared = build_objective(cfg, n, source.spawn(0))
            jobs = [
                (shared, budget, source.seed, source.spawn_key + (rep + 1,), None)
                for rep in range(cfg.replicates)
            ]
        times = _run_replicates(jobs, cfg.workers)
        censored, mean, sd, median = _time_stats(times)
        ratio = mean / (n * math.log(n)) if n > 1 else math.nan
        rows.append(
            ScalingRow(
                n=n,
                s=shared.s if isinstance(shared, CompositeObjective) else 0,
                alpha=f"{cfg.alpha.numerator}/{cfg.alpha.denominator}",
                reps=cfg.replicates,
                censored=censored,
                mean_T=mean,
                sd_T=sd,
                median_T=median,
                ratio_nlogn=ratio,
            )
        )
    checks = {"censoring_at_most_1pct": all(r.censored <= 0.01 * r.reps for r in rows)}
    ratios = [r.ratio_nlogn for r in rows if not math.isnan(r.ratio_nlogn)]
    if len(ratios) >= 2:
        checks["ratio_stability_1.4"] = max(ratios) / min(ratios) <= 1.4
    return ReportBundle(
        kind="scale",
        config=cfg.to_dict(),
        rows=rows,
        fits=_fit_dict(rows),
        environment=_environment(cfg),
        checks=checks,
    )


def escape_study(cfg: ExperimentConfig) -> ReportBundle:
    """Time to reach the global optimum from a planted local optimum."""
    if cfg.kind != "escape":
        raise ValueError(f"expected kind 'escape', got {cfg.kind!r}")
    root = RandomSource(cfg.seed)
    rows = []
    for idx, n in enumerate(cfg.n_values):
        instance = MultimodalInstance(n, cfg.exponent or 0)
        budget = cfg.budget if cfg.budget else max(100, math.ceil(cfg.budget_multiplier * math.e * n * n))
        source = root.spawn(idx)
        start = instance.local_optimum(1)
        jobs = [
            (instance, budget, source.seed, source.spawn_key + (rep + 1,), start)
            for rep in range(cfg.replicates)
        ]
        times = _run_replicates(jobs, cfg.workers)
        censored, mean, sd, _ = _time_stats(times)
        rows.append(EscapeRow(n=n, reps=cfg.replicates, censored=censored, mean_T=mean, sd_T=sd))
    checks = {"censoring_at_most_1pct": all(r.censored <= 0.01 * r.reps for r in rows)}
    return ReportBundle(
        kind="escape",
        config=cfg.to_dict(),
        rows=rows,
        fits=_fit_dict(rows),
        environment=_environment(cfg),
        checks=checks,
    )


def tail_study(cfg: ExperimentConfig) -> ReportBundle:
    """Empirical exceedance of the drift-theorem tail thresholds.

    The drift rate is either supplied (cfg.delta) or certified by exhaustive
    enumeration on the instance (needs domain size <= 12).  Each replicate
    uses its own start potential; thresholds are per-run and the reported
    threshold column is the across-run mean for each r.
    """
    if cfg.kind != "tail":
        raise ValueError(f"expected kind 'tail', got {cfg.kind!r}")
    n = cfg.n_values[0]
    root = RandomSource(cfg.seed)
    instance = build_objective(cfg, n, root.spawn(0))
    if not isinstance(instance, CompositeObjective):
        raise ValueError("tail study needs a composite objective")
    notes = []
    if cfg.delta is not None:
        delta = float(cfg.delta)
        notes.append(f"using supplied drift rate delta={delta}")
    else:
        if instance.domain_size > 12:
            raise ValueError("no certified drift rate: domain size > 12 and no --delta supplied")
        report = exhaustive_drift_check(instance)
        if not report.passed:
            raise ValueError("exhaustive drift check failed; no certified drift rate")
        delta = report.delta_reference
        notes.append(
            f"certified delta={delta} (min observed ratio {report.min_ratio})"
        )
    if not 0.0 < delta < 1.0:
        raise ValueError("drift rate must lie in (0, 1)")

    potential = build_combined_potential(instance)
    floor = 1.0  # every nonzero state carries a coefficient >= 1
    r_values = cfg.r_values
    exceed = {r: 0 for r in r_values}
    threshold_sums = {r: 0.0 for r in r_values}
    counted = 0
    for rep in range(cfg.replicates):
        source = root.spawn(rep + 1)
        x0 = source.generator.integers(0, 2, instance.domain_size, dtype=np.uint8)
        start = potential.value(x0)
        if instance.is_optimal(x0):
            # T = 0 never exceeds a positive threshold; no threshold is defined
            # for a zero start potential.
            continue
        counted += 1
        thresholds = {r: (math.log(start / floor) + r) / delta for r in r_values}
        budget = max(1, math.ceil(max(thresholds.values())))
        trace = run_ea(instance, EAConfig(max_iterations=budget), source, initial=x0)
        for r in r_values:
            threshold_sums[r] += thresholds[r]
            if trace.hitting_time is None or trace.hitting_time > thresholds[r]:
                exceed[r] += 1
    rows = []
    for r in r_values:
        freq = exceed[r] / cfg.replicates
        bound = math.exp(-r)
        se = math.sqrt(freq * (1.0 - freq) / cfg.replicates)
        rows.append(
            TailRow(
                r=r,
                threshold=threshold_sums[r] / counted if counted else math.nan,
                exceed_freq=freq,
                bound=bound,
                violation=freq - bound > 3.0 * se,
            )
        )
    return ReportBundle(
        kind="tail",
        config=cfg.to_dict(),
        rows=rows,
        fits=None,
        environment=_environment(cfg),
        checks={"no_tail_violation": not any(r.violation for r in rows)},
        notes=notes,
        extras={"delta": delta, "replicates_counted": counted},
    )


def chance_demo(cfg: ExperimentConfig) -> ReportBundle:
    """Optimize the chance fitness, then verify guarantee levels at probes."""
    if cfg.kind != "chance":
        raise ValueError(f"expected kind 'chance', got {cfg.kind!r}")
    if cfg.instance_file:
        chance = load_chance_instance(cfg.instance_file)
        m = chance.item_count
    else:
        m = cfg.n_values[0]
        chance = ChanceInstance(np.arange(1, m + 1, dtype=float), np.ones(m), cfg.confidence)
    composite = build_chance(chance)
    root = RandomSource(cfg.seed)
    budget = cfg.budget if cfg.budget else default_budget(composite.n, cfg.budget_multiplier)
    best_state = None
    best_value = math.inf
    for rep in range(cfg.replicates):
        trace = run_ea(composite, EAConfig(max_iterations=budget), root.spawn(rep + 1))
        value = composite.value(trace.final_state)
        if value < best_value:
            best_value = value
            best_state = trace.final_state
    notes = []
    probes = [("best_found", best_state), ("all_ones", np.ones(m, dtype=np.uint8))]
    probe_gen = root.spawn(0)
    for k in range(cfg.probes):
        candidate = probe_gen.generator.integers(0, 2, m, dtype=np.uint8)
        if candidate.sum() == 0:
            candidate[int(probe_gen.generator.integers(0, m))] = 1
        probes.append((f"random_{k}", candidate))
    rows = []
    level_source = root.spawn(10**6)
    for name, probe in probes:
        if chance.std_value(probe) == 0.0:
            notes.append(f"probe {name} skipped: zero variance (all-zeros selection)")
            continue
        level = chance_level_check(chance, probe, cfg.level_samples, level_source.spawn(len(rows)))
        rows.append(
            ChanceRow(
                probe="".join(str(int(b)) for b in probe),
                g_value=chance.fitness_value(probe),
                empirical_level=level,
                alpha_c=chance.confidence,
            )
        )
    se = math.sqrt(chance.confidence * (1.0 - chance.confidence) / cfg.level_samples)
    checks = {
        "levels_within_4se": all(abs(r.empirical_level - r.alpha_c) <= 4.0 * se for r in rows)
    }
    return ReportBundle(
        kind="chance",
        config=cfg.to_dict(),
        rows=rows,
        fits=None,
        environment=_environment(cfg),
        checks=checks,
        notes=notes,
        extras={"best_fitness": best_value, "fractile": chance.fractile},
    )


def run_study(cfg: ExperimentConfig) -> tuple[ReportBundle, list[RunTrace]]:
    """Plain EA runs on one instance; returns the bundle and the raw traces."""
    if cfg.kind != "run":
        raise ValueError(f"expected kind 'run', got {cfg.kind!r}")
    n = cfg.n_values[0]
    root = RandomSource(cfg.seed)
    instance = build_objective(cfg, n, root.spawn(0))
    budget = cfg.budget if cfg.budget else default_budget(
        instance.n if isinstance(instance, CompositeObjective) else n, cfg.budget_multiplier
    )
    potential = None
    if isinstance(instance, CompositeObjective):
        potential = build_combined_potential(instance).value
    traces = []
    rows = []
    for rep in range(cfg.replicates):
        trace = run_ea(
            instance,
            EAConfig(max_iterations=budget, trace_stride=cfg.trace_stride),
            root.spawn(rep + 1),
            potential=potential,
        )
        traces.append(trace)
        rows.append(
            RunRow(
                replicate=rep,
                hitting_time=trace.hitting_time,
                accepted_steps=trace.accepted_steps,
                budget_exhausted=trace.budget_exhausted,
            )
        )
    bundle = ReportBundle(
        kind="run",
        config=cfg.to_dict(),
        rows=rows,
        fits=None,
        environment=_environment(cfg),
        checks={"all_runs_reached_optimum": all(not r.budget_exhausted for r in rows)},
    )
    return bundle, traces
