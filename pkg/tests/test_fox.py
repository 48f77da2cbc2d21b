import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from foxann import fox
from foxann.cli import SPHERE_REFERENCE_SEED
from foxann.fox import FoxParams, SearchBounds


class ScriptedRng:
    """Stand-in for a Generator that replays fixed draws in order."""

    def __init__(self, *draws):
        self.draws = list(draws)

    def random(self, size=None):
        value = self.draws.pop(0)
        if size is None:
            return float(value)
        return np.broadcast_to(np.asarray(value, dtype=float), (size,)).copy()


# --- bounds and params -------------------------------------------------------

def test_bounds_broadcast_scalar():
    b = SearchBounds(-3, 3, 10)
    assert b.lower.shape == (10,) and np.all(b.upper == 3)


@pytest.mark.parametrize("lo,hi", [(5, 5), (3, -3), ([0, 1], [1, 1])])
def test_bounds_rejects_empty_box(lo, hi):
    with pytest.raises(ValueError, match="invalid bounds"):
        SearchBounds(lo, hi, 2 if isinstance(lo, list) else 1)


def test_params_validation():
    with pytest.raises(ValueError):
        FoxParams(c1=0.9, c2=0.5)
    with pytest.raises(ValueError):
        FoxParams(population_size=0)
    with pytest.raises(ValueError):
        FoxParams(a_schedule="cosine")
    assert FoxParams().c1 == 0.18 and FoxParams().c2 == 0.82


# --- init_population ---------------------------------------------------------

def test_init_population_within_box():
    pop = fox.init_population(FoxParams(population_size=30), SearchBounds(-3, 3, 10), seed=1)
    assert pop.positions.shape == (30, 10)
    assert np.all((pop.positions >= -3) & (pop.positions <= 3))
    assert math.isinf(pop.min_t)
    assert np.all(np.isnan(pop.fitnesses))


def test_init_population_seeded():
    args = (FoxParams(population_size=30), SearchBounds(-3, 3, 10))
    a = fox.init_population(*args, seed=42).positions
    b = fox.init_population(*args, seed=42).positions
    assert np.array_equal(a, b)


def test_init_population_tiny_box():
    eps = 1e-9
    pop = fox.init_population(FoxParams(population_size=1), SearchBounds(5, 5 + eps, 1), seed=0)
    assert 5 <= pop.positions[0, 0] <= 5 + eps


# --- exploitation ------------------------------------------------------------

def test_exploitation_zero_best_stays_zero():
    rng = np.random.default_rng(0)
    for _ in range(20):
        assert np.all(fox.exploitation_move(np.zeros(4), FoxParams(), rng) == 0)


def test_exploitation_c1_branch_hand_value():
    # DFP = 0.5, tt = 1, t = 0.5, jump = 0.5 * 9.81 * 0.25 = 1.22625
    new, tt = fox.exploitation_move([1.0, 1.0], FoxParams(), ScriptedRng(1.0, 0.5),
                                    return_time=True)
    np.testing.assert_allclose(new, [0.1103625, 0.1103625], atol=1e-6)
    assert tt == 1.0


def test_exploitation_c2_branch_hand_value():
    new = fox.exploitation_move([1.0, 1.0], FoxParams(), ScriptedRng(1.0, 0.18))
    np.testing.assert_allclose(new, [0.502763, 0.502763], atol=1e-6)


def test_exploitation_zero_time_draw_is_finite():
    new = fox.exploitation_move([1.0], FoxParams(), ScriptedRng(0.0, 0.5))
    assert np.all(np.isfinite(new))


# --- exploration -------------------------------------------------------------

def test_exploration_zero_best():
    out = fox.exploration_move(np.zeros(3), 0.3, 0, 10, FoxParams(), np.random.default_rng(0))
    assert np.all(out == 0)


def test_exploration_schedule_endpoint_is_zero():
    # decreasing schedule reaches a = 0 when iter == max_iter
    assert fox.a_coefficient(10, 10, "decreasing") == 0.0
    out = fox.exploration_move(np.ones(3), 0.3, 10, 10, FoxParams(), np.random.default_rng(0))
    assert np.all(out == 0)


def test_exploration_hand_value():
    out = fox.exploration_move([1.0], 0.2, 0, 100, FoxParams(), ScriptedRng(0.5))
    np.testing.assert_allclose(out, [0.2], atol=1e-12)


def test_exploration_unset_min_t_is_zero():
    out = fox.exploration_move([1.0, 2.0], math.inf, 0, 100, FoxParams(), np.random.default_rng(0))
    assert np.all(out == 0)


def test_literal_schedule_grows():
    a = [fox.a_coefficient(i, 100, "literal_eq10") for i in range(100)]
    assert a[0] == pytest.approx(-0.02)
    assert np.all(np.diff(a) > 0)


def test_walk_exploration_stays_near_best():
    p = FoxParams(exploration="walk")
    out = fox.exploration_move([1.0, -1.0], 0.25, 0, 100, p, np.random.default_rng(3))
    assert np.all(np.abs(out - [1.0, -1.0]) <= 0.5)


# --- clip --------------------------------------------------------------------

def test_clip():
    b = SearchBounds(-3, 3, 3)
    assert fox.clip([-5, 0, 5], b).tolist() == [-3, 0, 3]
    inside = np.array([-2.5, 0.1, 2.9])
    assert np.array_equal(fox.clip(inside, b), inside)
    assert fox.clip([-3 - 1e-12], SearchBounds(-3, 3, 1)).tolist() == [-3.0]


# --- optimize ----------------------------------------------------------------

def test_constant_objective():
    res = fox.optimize(lambda x: 7.0, SearchBounds(-1, 1, 3), FoxParams(max_iterations=20), seed=0)
    assert res.best_fitness == 7.0
    assert np.all(res.fitness_history == 7.0)
    assert len(res.fitness_history) == 20


# Reference run: sphere, dim 5, pop 30, 100 iterations, bounds [-5, 5].
SPHERE_REFERENCE_BEST = 0.0


def test_sphere_reference_run():
    res = fox.optimize(fox.sphere, SearchBounds(-5, 5, 5), FoxParams(), seed=SPHERE_REFERENCE_SEED)
    assert res.best_fitness <= 1e-3
    assert res.best_fitness == SPHERE_REFERENCE_BEST


def test_determinism_and_worker_count():
    f = lambda x: float(np.sum((x - 0.3) ** 2) + np.sin(5 * x).sum())
    b = SearchBounds(-2, 2, 6)
    p = FoxParams(population_size=12, max_iterations=25)
    r1 = fox.optimize(f, b, p, seed=5)
    r2 = fox.optimize(f, b, p, seed=5)
    r3 = fox.optimize(f, b, p, seed=5, n_jobs=4)
    assert r1 == r2 == r3
    assert r1.best_position.tobytes() == r3.best_position.tobytes()


def test_nan_objective_aborts_with_position():
    def f(x):
        return float("nan") if x[0] > 0 else 1.0

    with pytest.raises(fox.ObjectiveError, match="NaN") as info:
        fox.optimize(f, SearchBounds(-1, 1, 2), FoxParams(population_size=10), seed=0)
    assert info.value.position[0] > 0


@pytest.mark.parametrize("schedule", ["decreasing", "literal_eq10"])
@pytest.mark.parametrize("exploration", ["scaled", "walk"])
def test_bounds_invariant_every_iteration(schedule, exploration):
    # optimum far outside the box, so moves routinely overshoot and get clipped
    f = lambda x: float(np.sum((x - 10.0) ** 2))
    b = SearchBounds([-1, -2, -3], [1, 2, 3])
    p = FoxParams(population_size=15, max_iterations=40, a_schedule=schedule,
                  exploration=exploration)
    res = fox.optimize(f, b, p, seed=2, keep_positions=True)
    assert len(res.position_history) == 40
    for pos in res.position_history:
        assert np.all(pos >= b.lower) and np.all(pos <= b.upper)


def test_bounds_are_hit_by_literal_schedule():
    f = lambda x: float(np.sum((x - 10.0) ** 2))
    b = SearchBounds(-1, 1, 3)
    p = FoxParams(population_size=15, max_iterations=40, a_schedule="literal_eq10")
    res = fox.optimize(f, b, p, seed=2, keep_positions=True)
    assert np.any(np.stack(res.position_history) == 1.0)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(1, 6),
       exploration=st.sampled_from(["scaled", "walk"]))
def test_history_non_increasing(seed, dim, exploration):
    shift = np.linspace(-1, 1, dim)
    f = lambda x: float(np.sum((x - shift) ** 2) + np.cos(3 * x).sum())
    p = FoxParams(population_size=8, max_iterations=15, exploration=exploration)
    res = fox.optimize(f, SearchBounds(-3, 3, dim), p, seed=seed)
    assert np.all(np.diff(res.fitness_history) <= 0)
    assert res.best_fitness == res.fitness_history[-1]
    assert f(res.best_position) == res.best_fitness


def test_strict_improvement_keeps_first_best():
    # all agents tie: the incumbent must stay the first agent of iteration 0
    p = FoxParams(population_size=5, max_iterations=3)
    b = SearchBounds(-1, 1, 2)
    res = fox.optimize(lambda x: 1.0, b, p, seed=9)
    first = fox.init_population(p, b, 9).positions[0]
    assert np.array_equal(res.best_position, first)


def test_branch_split_is_even(monkeypatch):
    counts = {"exploit": 0, "explore": 0}
    real_exploit, real_explore = fox.exploitation_move, fox.exploration_move

    def exploit(*a, **k):
        counts["exploit"] += 1
        return real_exploit(*a, **k)

    def explore(*a, **k):
        counts["explore"] += 1
        return real_explore(*a, **k)

    monkeypatch.setattr(fox, "exploitation_move", exploit)
    monkeypatch.setattr(fox, "exploration_move", explore)
    p = FoxParams(population_size=50, max_iterations=40)
    fox.optimize(fox.sphere, SearchBounds(-5, 5, 3), p, seed=11)
    observed = [counts["exploit"], counts["explore"]]
    assert sum(observed) == 2000
    assert stats.chisquare(observed).pvalue > 1e-3


def test_min_t_tracks_exploitation_minimum():
    ts = []
    p = FoxParams(population_size=10, max_iterations=10)
    fox.optimize(fox.sphere, SearchBounds(-5, 5, 4), p, seed=3,
                 callback=lambda it, pop: ts.append(pop.min_t))
    finite = [t for t in ts if math.isfinite(t)]
    assert finite and all(0 <= t <= 1 for t in finite)
    assert all(b <= a for a, b in zip(finite, finite[1:]))
