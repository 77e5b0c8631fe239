import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from flockopt.config import POINT_A, EvolutionConfig, SimConfig, TransferParams, bounds_arrays
from flockopt.moea import (
    FlockingProblem,
    SquaresBenchmark,
    crowding_distance,
    dominates,
    evaluate,
    evolve,
    fast_nondominated_sort,
    hypervolume_2d,
    load_archive,
    polynomial_mutation,
    run_seeds,
    save_generation,
    sbx_crossover,
    tournament_select,
)

LOWER, UPPER = bounds_arrays()


def brute_force_fronts(F):
    """Peel fronts by checking every pair against every remaining member: O(N^3)."""
    F = [tuple(map(float, f)) for f in F]
    remaining = list(range(len(F)))
    fronts = []
    while remaining:
        front = []
        for i in remaining:
            beaten = False
            for j in remaining:
                if all(a >= b for a, b in zip(F[j], F[i])) and any(a > b for a, b in zip(F[j], F[i])):
                    beaten = True
                    break
            if not beaten:
                front.append(i)
        fronts.append(sorted(front))
        remaining = [i for i in remaining if i not in front]
    return fronts


def random_population(rng, max_n=200):
    n = int(rng.integers(1, max_n + 1))
    m = int(rng.integers(2, 4))
    if rng.random() < 0.5:
        return rng.integers(0, 6, (n, m)).astype(float)  # many ties and duplicates
    return rng.random((n, m))


# --- domination and sorting ----------------------------------------------


def test_dominates_examples():
    assert not dominates((0.5, 0.5), (0.5, 0.5))
    assert dominates((0.9, 0.3), (0.8, 0.3))
    assert not dominates((0.9, 0.1), (0.1, 0.9)) and not dominates((0.1, 0.9), (0.9, 0.1))


objs = st.tuples(st.integers(0, 3), st.integers(0, 3))


@given(objs, objs, objs)
def test_domination_is_strict_partial_order(a, b, c):
    assert not dominates(a, a)
    assert not (dominates(a, b) and dominates(b, a))
    if dominates(a, b) and dominates(b, c):
        assert dominates(a, c)


def test_sort_identical():
    fronts = fast_nondominated_sort(np.full((7, 2), 0.4))
    assert len(fronts) == 1 and sorted(fronts[0]) == list(range(7))


def test_sort_chain():
    fronts = fast_nondominated_sort([[0.1, 0.1], [0.3, 0.3], [0.2, 0.2]])
    assert [list(f) for f in fronts] == [[1], [2], [0]]


def test_sort_matches_brute_force(rng):
    for _ in range(30):
        F = random_population(rng, 50)
        assert [sorted(f.tolist()) for f in fast_nondominated_sort(F)] == brute_force_fronts(F)


@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=1, max_size=40))
def test_first_front_property(points):
    F = np.array(points, dtype=float)
    fronts = fast_nondominated_sort(F)
    assert sorted(np.concatenate(fronts).tolist()) == list(range(len(F)))
    assert sorted(fronts[0].tolist()) == brute_force_fronts(F)[0]


# --- crowding and selection ---------------------------------------------------


def test_crowding_two_members():
    assert np.all(np.isinf(crowding_distance([[0.1, 0.9], [0.9, 0.1]])))


def test_crowding_hand_example():
    d = crowding_distance([[0.0, 1.0], [0.5, 0.5], [1.0, 0.0]])
    assert np.isinf(d[0]) and np.isinf(d[2])
    assert d[1] == pytest.approx(2.0)


def test_crowding_identical_members():
    d = crowding_distance(np.full((5, 2), 0.3))
    assert np.isinf(d).sum() == 2
    assert np.all(d[np.isfinite(d)] == 0)


class FixedDraw:
    def __init__(self, picks):
        self.picks = np.array(picks)

    def choice(self, n, size, replace):
        return self.picks


def test_tournament_rules():
    rank = np.array([0, 2, 1, 1])
    crowd = np.array([0.5, 9.0, np.inf, 1.3])
    assert tournament_select(rank, crowd, FixedDraw([1, 0])) == 0
    assert tournament_select(rank, crowd, FixedDraw([3, 2])) == 2
    crowd = np.array([1.0, 1.0, 1.0, 1.0])
    assert tournament_select(np.zeros(4, int), crowd, FixedDraw([3, 1])) == 1


# --- variation operators -------------------------------------------------------


def test_sbx_bypass_and_coincident(rng):
    p1 = LOWER + 0.2 * (UPPER - LOWER)
    p2 = LOWER + 0.7 * (UPPER - LOWER)
    c1, c2 = sbx_crossover(p1, p2, LOWER, UPPER, 0.0, 15.0, rng)
    assert np.array_equal(c1, p1) and np.array_equal(c2, p2)
    for eta in (1.0, 15.0, 100.0):
        c1, c2 = sbx_crossover(p1, p1, LOWER, UPPER, 1.0, eta, rng)
        assert np.array_equal(c1, p1) and np.array_equal(c2, p1)


def test_sbx_children_in_bounds(rng):
    for _ in range(500):
        p1, p2 = rng.uniform(LOWER, UPPER), rng.uniform(LOWER, UPPER)
        for c in sbx_crossover(p1, p2, LOWER, UPPER, 1.0, 15.0, rng):
            assert np.all(c >= LOWER) and np.all(c <= UPPER)


def test_sbx_mean_preservation():
    rng = np.random.default_rng(7)
    p1 = LOWER + 0.4 * (UPPER - LOWER)
    p2 = LOWER + 0.6 * (UPPER - LOWER)
    children = []
    for _ in range(10_000):
        children.extend(sbx_crossover(p1, p2, LOWER, UPPER, 1.0, 15.0, rng))
    mean = np.mean(children, axis=0)
    parent_mean = (p1 + p2) / 2
    assert np.all(np.abs(mean - parent_mean) <= 0.02 * np.abs(parent_mean))


def test_mutation_identity_and_bounds(rng):
    g = rng.uniform(LOWER, UPPER)
    assert np.array_equal(polynomial_mutation(g, LOWER, UPPER, 0.0, 20.0, rng), g)
    for _ in range(500):
        out = polynomial_mutation(LOWER.copy(), LOWER, UPPER, 1.0, 20.0, rng)
        assert np.all(out >= LOWER) and np.all(out <= UPPER)


def test_mutation_frequency_binomial():
    rng = np.random.default_rng(8)
    p, trials = 1 / 12, 10_000
    g = LOWER + 0.5 * (UPPER - LOWER)
    changed = np.zeros(12)
    for _ in range(trials):
        changed += polynomial_mutation(g, LOWER, UPPER, p, 20.0, rng) != g
    sigma = np.sqrt(trials * p * (1 - p))
    assert np.all(np.abs(changed - trials * p) <= 3 * sigma)


# --- hypervolume -----------------------------------------------------------------


def test_hypervolume_rectangles():
    assert hypervolume_2d([[1.0, 1.0]], (0.0, 0.0)) == 1.0
    assert hypervolume_2d([[1.0, 2.0], [2.0, 1.0]], (0.0, 0.0)) == 3.0
    # dominated and out-of-reference points add nothing
    assert hypervolume_2d([[1.0, 2.0], [2.0, 1.0], [0.5, 0.5], [-1.0, 5.0]], (0.0, 0.0)) == 3.0


def test_hypervolume_benchmark_front_against_quadrature():
    x = np.linspace(0, 2, 2001)
    F = np.column_stack([-(x ** 2), -((x - 2) ** 2)])
    # area between the reference line f2 = -4 and the front, as a function of f1
    exact, _ = quad(lambda f1: -((np.sqrt(-f1) - 2) ** 2) + 4, -4, 0)
    assert exact == pytest.approx(40 / 3, rel=1e-9)
    assert hypervolume_2d(F, (-4.0, -4.0)) == pytest.approx(exact, rel=1e-3)


# --- evaluation and evolution -----------------------------------------------------


def test_run_seeds():
    assert run_seeds(5, 3) == [5, 6, 7]
    assert run_seeds(2**64 - 1, 2) == [2**64 - 1, 0]


def test_evaluate_deterministic_and_bounded():
    cfg = SimConfig(duration=20.0)
    a, flag_a = evaluate(POINT_A.to_array(), cfg, TransferParams(), 1, 3)
    b, flag_b = evaluate(POINT_A.to_array(), cfg, TransferParams(), 1, 3)
    assert np.array_equal(a, b) and not flag_a and not flag_b
    assert np.all((a >= 0) & (a <= 1))


def test_evaluate_point_a_f1_above_f2():
    mean, _ = evaluate(POINT_A, SimConfig(), TransferParams(), 20, 0)
    assert mean[0] > mean[1]


def test_evaluate_flags_divergence():
    genome = POINT_A.to_array()
    genome[1] = 1e308  # p_rep overflows the state
    mean, flagged = evaluate(genome, SimConfig(duration=10.0), TransferParams(), 1, 0)
    assert flagged and np.array_equal(mean, [0.0, 0.0])


def test_evolve_zero_generations():
    arch = evolve(SquaresBenchmark(), EvolutionConfig(pop_size=20, generations=0))
    assert len(arch.generations) == 1
    X, F = arch.final_front()
    assert len(X) >= 1


def test_evolve_benchmark_invariants():
    cfg = EvolutionConfig(pop_size=40, generations=25, master_seed=3)
    arch = evolve(SquaresBenchmark(), cfg)
    best = np.array([g.F.max(axis=0) for g in arch.generations])
    assert np.all(np.diff(best, axis=0) >= 0)  # elitism per objective
    for g in arch.generations:
        assert np.all(g.X >= -5) and np.all(g.X <= 5)
        assert np.all(np.isinf(g.crowding[g.F.argmax(axis=0)]))
        _, F = g.front()
        for i in range(len(F)):
            for j in range(len(F)):
                assert not dominates(F[i], F[j])


def test_evolve_deterministic_and_resumable(tmp_path):
    cfg = EvolutionConfig(pop_size=20, generations=12, master_seed=9)
    full = evolve(SquaresBenchmark(), cfg)

    saved = tmp_path / "gens"
    saved.mkdir()
    evolve(SquaresBenchmark(), EvolutionConfig(pop_size=20, generations=5, master_seed=9),
           on_generation=lambda a: save_generation(a.last, saved, a.rng_state))
    resumed = evolve(SquaresBenchmark(), cfg, archive=load_archive(saved))
    assert len(resumed.generations) == len(full.generations)
    for a, b in zip(full.generations, resumed.generations):
        assert np.array_equal(a.X, b.X) and np.array_equal(a.F, b.F)


def test_generation_json_round_trip(tmp_path):
    arch = evolve(SquaresBenchmark(), EvolutionConfig(pop_size=10, generations=1))
    path = save_generation(arch.last, tmp_path, arch.rng_state)
    back = load_archive(tmp_path)
    g = back.last
    assert path.name == "generation_0001.json"
    assert np.array_equal(g.X, arch.last.X) and np.array_equal(g.crowding, arch.last.crowding)
    assert back.rng_state == arch.rng_state


def test_flocking_problem_small_run():
    problem = FlockingProblem(SimConfig(duration=10.0, n_agents=8))
    arch = evolve(problem, EvolutionConfig(pop_size=6, generations=2, master_seed=1))
    X, F = arch.final_front()
    assert np.all((X >= LOWER) & (X <= UPPER))
    assert np.all((F >= 0) & (F <= 1))
    # the extreme point with the best f1 is at least as good in f1 as any knee point
    assert F[:, 0].max() >= np.median(F[:, 0])
