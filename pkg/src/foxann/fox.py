"""FOX optimizer: population search modelled on red-fox hunting.

Each agent either jumps toward the prey (exploitation, scaled by a
sound-travel distance and a jump height) or walks around the incumbent
best (exploration), with a fixed 50/50 split between the two branches.

Randomness is drawn from per-agent streams keyed on ``(seed, iteration,
agent)`` so results do not depend on how fitness evaluations are
scheduled across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "SearchBounds",
    "FoxParams",
    "FoxPopulation",
    "OptResult",
    "ObjectiveError",
    "init_population",
    "exploitation_move",
    "exploration_move",
    "clip",
    "optimize",
    "sphere",
]

A_SCHEDULES = ("decreasing", "literal_eq10")
EXPLORATION_MODES = ("scaled", "walk")


class ObjectiveError(ValueError):
    """The objective returned a non-finite value."""

    def __init__(self, message: str, position: np.ndarray):
        super().__init__(message)
        self.position = position


@dataclass(frozen=True)
class SearchBounds:
    """Box constraints ``lower <= x <= upper``.

    ``lower`` and ``upper`` may be scalars, in which case they are broadcast
    to ``dimension``.
    """

    lower: np.ndarray
    upper: np.ndarray
    dimension: int

    def __init__(self, lower, upper, dimension: Optional[int] = None):
        lo = np.atleast_1d(np.asarray(lower, dtype=float))
        hi = np.atleast_1d(np.asarray(upper, dtype=float))
        if dimension is None:
            dimension = max(lo.size, hi.size)
        dimension = int(dimension)
        if dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {dimension}")
        try:
            lo = np.broadcast_to(lo, (dimension,)).copy()
            hi = np.broadcast_to(hi, (dimension,)).copy()
        except ValueError:
            raise ValueError(
                f"bounds of sizes {lo.size}/{hi.size} do not match dimension {dimension}"
            ) from None
        bad = np.flatnonzero(~(lo < hi))
        if bad.size:
            d = int(bad[0])
            raise ValueError(
                f"invalid bounds at dimension {d}: lower={lo[d]!r} must be < upper={hi[d]!r}"
            )
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "dimension", dimension)


@dataclass(frozen=True)
class FoxParams:
    """FOX hyperparameters.

    ``a_schedule`` selects the exploration scale: ``"decreasing"`` uses
    ``2 * (1 - iter / max_iter)``; ``"literal_eq10"`` uses
    ``2 * (iter - 1 / max_iter)``, which grows with the iteration count.

    ``exploration`` selects the exploration move: ``"scaled"`` multiplies
    the best position by ``rand * min_t * a``; ``"walk"`` adds a symmetric
    uniform step of half-width ``min_t * a`` to it.
    """

    population_size: int = 30
    max_iterations: int = 100
    c1: float = 0.18
    c2: float = 0.82
    p_threshold: float = 0.18
    r_threshold: float = 0.5
    gravity: float = 9.81
    a_schedule: str = "decreasing"
    exploration: str = "scaled"

    def __post_init__(self):
        if self.population_size < 1:
            raise ValueError(f"population_size must be >= 1, got {self.population_size}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if not 0.0 < self.c1 < self.c2 < 1.0:
            raise ValueError(f"need 0 < c1 < c2 < 1, got c1={self.c1}, c2={self.c2}")
        for name in ("p_threshold", "r_threshold"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.a_schedule not in A_SCHEDULES:
            raise ValueError(f"a_schedule must be one of {A_SCHEDULES}, got {self.a_schedule!r}")
        if self.exploration not in EXPLORATION_MODES:
            raise ValueError(
                f"exploration must be one of {EXPLORATION_MODES}, got {self.exploration!r}"
            )


@dataclass
class FoxPopulation:
    positions: np.ndarray
    fitnesses: np.ndarray
    best_position: Optional[np.ndarray] = None
    best_fitness: float = math.inf
    min_t: float = math.inf


@dataclass
class OptResult:
    best_position: np.ndarray
    best_fitness: float
    fitness_history: np.ndarray
    # post-move positions, one (population_size, dimension) array per iteration;
    # filled only when optimize(keep_positions=True)
    position_history: list = field(default_factory=list, repr=False)

    def __eq__(self, other):
        if not isinstance(other, OptResult):
            return NotImplemented
        return (
            np.array_equal(self.best_position, other.best_position)
            and self.best_fitness == other.best_fitness
            and np.array_equal(self.fitness_history, other.fitness_history)
        )


def init_population(params: FoxParams, bounds: SearchBounds, seed: int) -> FoxPopulation:
    """Draw ``population_size`` agents uniformly inside ``bounds``."""
    rng = np.random.default_rng(seed)
    positions = rng.uniform(
        bounds.lower, bounds.upper, size=(params.population_size, bounds.dimension)
    )
    # uniform() can return `upper` through round-off
    positions = np.clip(positions, bounds.lower, bounds.upper)
    fitnesses = np.full(params.population_size, np.nan)
    return FoxPopulation(positions=positions, fitnesses=fitnesses)


def exploitation_move(best_position, params: FoxParams, rng, return_time: bool = False):
    """Jump toward the prey.

    The draw order is ``Time`` (one value per dimension) then ``p``.
    When ``return_time`` is true the mean travel time ``tt`` is returned as
    well, so callers can track its running minimum.
    """
    best = np.asarray(best_position, dtype=float)
    # random() may return exactly 0.0; Time is a divisor
    time = np.maximum(rng.random(best.shape[0]), np.finfo(float).tiny)
    sp_s = best / time
    dist_s_t = sp_s * time
    dfp = 0.5 * dist_s_t
    tt = float(np.mean(time))
    t = tt / 2.0
    jump = 0.5 * params.gravity * t * t
    p = rng.random()
    c = params.c1 if p > params.p_threshold else params.c2
    new = dfp * jump * c
    if return_time:
        return new, tt
    return new


def a_coefficient(iteration: int, max_iter: int, schedule: str = "decreasing") -> float:
    if schedule == "decreasing":
        return 2.0 * (1.0 - iteration / max_iter)
    if schedule == "literal_eq10":
        return 2.0 * (iteration - 1.0 / max_iter)
    raise ValueError(f"unknown a_schedule {schedule!r}")


def exploration_move(best_position, min_t: float, iteration: int, max_iter: int,
                     params: FoxParams, rng):
    """Search around the best position, scaled by ``min_t`` and ``a``."""
    best = np.asarray(best_position, dtype=float)
    if not math.isfinite(min_t):
        min_t = 0.0
    a = a_coefficient(iteration, max_iter, params.a_schedule)
    r = rng.random(best.shape[0])
    if params.exploration == "walk":
        return best + (2.0 * r - 1.0) * min_t * a
    return best * r * min_t * a


def clip(position, bounds: SearchBounds) -> np.ndarray:
    return np.clip(np.asarray(position, dtype=float), bounds.lower, bounds.upper)


def _evaluate(objective, positions, n_jobs):
    if n_jobs is not None and n_jobs > 1 and len(positions) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            values = list(pool.map(objective, positions))
    else:
        values = [objective(x) for x in positions]
    return np.array(values, dtype=float)


def optimize(
    objective: Callable[[np.ndarray], float],
    bounds: SearchBounds,
    params: FoxParams = FoxParams(),
    seed: int = 0,
    n_jobs: Optional[int] = None,
    callback: Optional[Callable[[int, FoxPopulation], None]] = None,
    keep_positions: bool = False,
) -> OptResult:
    """Minimize ``objective`` over ``bounds``.

    Every iteration evaluates all agents, keeps the incumbent best (replaced
    only on strict improvement), then moves and clips each agent in index
    order. ``callback(iteration, population)`` is invoked after the
    incumbent is updated.

    ``n_jobs > 1`` evaluates agents on a thread pool; the objective must be
    pure. Results are identical for any ``n_jobs``.
    """
    pop = init_population(params, bounds, seed)
    history = np.empty(params.max_iterations)
    snapshots = []
    for it in range(params.max_iterations):
        pop.fitnesses = _evaluate(objective, pop.positions, n_jobs)
        bad = np.flatnonzero(np.isnan(pop.fitnesses))
        if bad.size:
            i = int(bad[0])
            raise ObjectiveError(
                f"objective returned NaN at iteration {it} for agent {i}, "
                f"position={pop.positions[i].tolist()}",
                pop.positions[i].copy(),
            )
        for i, f in enumerate(pop.fitnesses):
            if f < pop.best_fitness or pop.best_position is None:
                pop.best_fitness = float(f)
                pop.best_position = pop.positions[i].copy()
        history[it] = pop.best_fitness
        if callback is not None:
            callback(it, pop)

        for i in range(params.population_size):
            rng = np.random.default_rng([seed, it, i])
            if rng.random() >= params.r_threshold:
                new, tt = exploitation_move(pop.best_position, params, rng, return_time=True)
                pop.min_t = min(pop.min_t, tt)
            else:
                new = exploration_move(
                    pop.best_position, pop.min_t, it, params.max_iterations, params, rng
                )
            pop.positions[i] = clip(new, bounds)
        if keep_positions:
            snapshots.append(pop.positions.copy())

    return OptResult(
        best_position=pop.best_position.copy(),
        best_fitness=pop.best_fitness,
        fitness_history=history,
        position_history=snapshots,
    )


def sphere(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.dot(x, x))
