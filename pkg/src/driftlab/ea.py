"""The elitist single-parent, single-offspring EA with standard bit mutation.

Minimization convention: an offspring replaces the parent iff its objective
value does not exceed the parent's, so equal values (including the offspring
that flips nothing) are always accepted.  One repeat-loop iteration equals one
mutation + selection, whether or not any bit flips.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .objectives import BitString, as_bits
from .rng import RandomSource


@dataclass
class EAConfig:
    """Run parameters; mutation_probability defaults to 1/n of the instance."""

    max_iterations: int
    mutation_probability: Optional[float] = None
    trace_stride: int = 0  # 0 records endpoints only

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.mutation_probability is not None and not 0.0 < self.mutation_probability <= 1.0:
            raise ValueError("mutation probability must lie in (0, 1]")
        if self.trace_stride < 0:
            raise ValueError("trace_stride must be non-negative")


@dataclass
class MutationEvent:
    """Exact flip set of one mutation, split by the parent's bit values."""

    mask: np.ndarray
    flipped_one_bits: np.ndarray
    flipped_zero_bits: np.ndarray
    accepted: bool = False

    @property
    def flip_count(self) -> int:
        return int(np.count_nonzero(self.mask))


@dataclass
class RunTrace:
    """One EA execution: hitting time, acceptance count and sampled stats.

    samples is a list of (iteration, objective value, potential value or None,
    one-bit count) tuples; hitting_time is None iff the budget ran out first.
    accepted_steps counts accepted offspring that flipped at least one bit.
    """

    seed: int
    spawn_key: tuple
    hitting_time: Optional[int]
    budget_exhausted: bool
    accepted_steps: int
    samples: list
    final_state: np.ndarray = field(repr=False, default=None)

    def to_json_dict(self) -> dict:
        return {
            "seed": self.seed,
            "spawn_key": list(self.spawn_key),
            "hitting_time": self.hitting_time,
            "budget_exhausted": self.budget_exhausted,
            "accepted_steps": self.accepted_steps,
            "samples": [
                [it, f, phi, ones] for (it, f, phi, ones) in self.samples
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


def standard_bit_mutation(
    x: BitString, p: float, rng: RandomSource
) -> tuple[BitString, MutationEvent]:
    """Flip each bit independently with probability p."""
    x = np.asarray(x, dtype=np.uint8)
    mask = rng.generator.random(x.size) < p
    y = x ^ mask
    flipped = np.flatnonzero(mask)
    parent_ones = x[flipped] == 1
    return y, MutationEvent(mask, flipped[parent_ones], flipped[~parent_ones])


def _mutate_select(x, f, p, rng, f_x):
    y, event = standard_bit_mutation(x, p, rng)
    if event.flip_count == 0:
        event.accepted = True
        return x, event, f_x
    f_y = f(y)
    if f_y <= f_x:
        event.accepted = True
        return y, event, f_y
    return x, event, f_x


def elitist_step(
    x: BitString,
    f: Callable[[BitString], float],
    p: float,
    rng: RandomSource,
    current_value: Optional[float] = None,
) -> tuple[BitString, MutationEvent]:
    """One mutation + selection; ties keep the offspring.

    current_value, if given, must equal f(x); it skips re-evaluating the
    parent (and the offspring when no bit flipped).
    """
    x = np.asarray(x, dtype=np.uint8)
    f_x = f(x) if current_value is None else current_value
    new_x, event, _ = _mutate_select(x, f, p, rng, f_x)
    return new_x, event


def run_ea(
    instance,
    config: EAConfig,
    rng: RandomSource,
    initial: Optional[BitString] = None,
    potential: Optional[Callable[[BitString], float]] = None,
) -> RunTrace:
    """Run to the first optimal point or until the iteration budget is spent.

    The start point is uniform over the domain unless `initial` is given.
    `instance` must expose domain_size, mutation_probability, value(x) and
    is_optimal(x); `potential`, when given, fills the phi column of the trace.
    The outcome is deterministic given (instance, config, rng state).
    """
    m = instance.domain_size
    p = config.mutation_probability
    if p is None:
        p = instance.mutation_probability
    if initial is None:
        x = rng.generator.integers(0, 2, m, dtype=np.uint8)
    else:
        x = as_bits(initial).copy()
        if x.size != m:
            raise ValueError(f"initial point must have {m} bits")
    f_x = instance.value(x)

    samples = []

    def record(iteration: int):
        phi = float(potential(x)) if potential is not None else None
        samples.append((iteration, f_x, phi, int(x.sum())))

    record(0)
    hitting_time: Optional[int] = None
    accepted_steps = 0
    if instance.is_optimal(x):
        hitting_time = 0
    else:
        stride = config.trace_stride
        value = instance.value
        for t in range(1, config.max_iterations + 1):
            x_next, event, f_next = _mutate_select(x, value, p, rng, f_x)
            if event.accepted and event.flip_count:
                accepted_steps += 1
                x, f_x = x_next, f_next
                if instance.is_optimal(x):
                    hitting_time = t
                    break
            if stride and t % stride == 0:
                record(t)
        final_t = t if hitting_time is None else hitting_time
        if samples[-1][0] != final_t:
            record(final_t)

    return RunTrace(
        seed=rng.seed,
        spawn_key=rng.spawn_key,
        hitting_time=hitting_time,
        budget_exhausted=hitting_time is None,
        accepted_steps=accepted_steps,
        samples=samples,
        final_state=x,
    )


def default_budget(n: int, multiplier: float = 20.0) -> int:
    """Iteration budget 20*e*n*ln(n), floored at 100."""
    return max(100, math.ceil(multiplier * math.e * n * math.log(max(2, n))))
