import numpy as np
import pytest

import fluxspot as fs
from fluxspot.exceptions import EmptyInputError, InvalidParameterError
from fluxspot.pareto import (
    Individual,
    ParetoFront,
    crowding_distance,
    spea2_fitness,
)


def brute_force_ranks(objs):
    """O(n^2) peeling oracle for non-dominated sorting."""
    objs = [tuple(o) for o in objs]
    remaining = set(range(len(objs)))
    ranks = {}
    level = 0
    while remaining:
        front = {
            i
            for i in remaining
            if not any(fs.dominates(objs[j], objs[i]) for j in remaining if j != i)
        }
        for i in front:
            ranks[i] = level
        remaining -= front
        level += 1
    return [ranks[i] for i in range(len(objs))]


def make_front(objs, stamp=("nsga2", 0, 0)):
    genome = fs.Genome(p0=0.0, p_re=(0.0,) * 4, p_im=(0.0,) * 4, omega_d_frac=1.0)
    return ParetoFront(
        points=tuple(
            Individual(genome=genome, objectives=tuple(o), provenance=stamp)
            for o in objs
        ),
        provenance=(stamp,),
    )


class TestDominates:
    def test_strict(self):
        assert fs.dominates((1, 2), (2, 3))

    def test_incomparable(self):
        assert not fs.dominates((1, 3), (3, 1))
        assert not fs.dominates((3, 1), (1, 3))

    def test_tie(self):
        assert not fs.dominates((1, 2), (1, 2))


class TestNonDominatedSort:
    def test_small_example(self):
        objs = [(1, 1), (2, 2), (1, 3), (3, 1)]
        fronts = fs.non_dominated_sort(objs)
        assert fronts[0] == [0]
        assert sorted(fronts[1]) == [1, 2, 3]

    def test_identical_points_single_front(self):
        fronts = fs.non_dominated_sort([(2.0, 2.0)] * 5)
        assert fronts == [[0, 1, 2, 3, 4]]

    def test_against_brute_force(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            objs = rng.random((200, 2))
            fronts = fs.non_dominated_sort(objs)
            ranks = np.empty(len(objs), dtype=int)
            for level, front in enumerate(fronts):
                ranks[front] = level
            assert list(ranks) == brute_force_ranks(objs)


class TestEnvironmentalSelect:
    def test_nsga2_identity_on_nondominated(self):
        rng = np.random.default_rng(5)
        xs = np.sort(rng.random(8))
        front = np.stack([xs, 1.0 - xs], axis=1)          # mutually non-dominated
        dominated = front + 0.5
        pool = np.vstack([front, dominated])
        keep = fs.environmental_select("nsga2", pool, 8)
        assert keep == list(range(8))

    def test_crowding_boundary_points_infinite(self):
        dist = crowding_distance(np.array([[0.0, 2.0], [1.0, 1.0], [2.0, 0.0]]))
        assert dist[0] == np.inf and dist[2] == np.inf
        assert np.isfinite(dist[1])

    def test_spea2_hand_computed_table(self):
        objs = np.array(
            [[1, 5], [2, 3], [3, 1], [4, 4], [5, 2], [2.5, 6]], dtype=float
        )
        fit = spea2_fitness(objs)
        assert list(fit["strength"]) == [1, 2, 2, 0, 0, 0]
        assert list(fit["raw"]) == [0, 0, 0, 4, 2, 3]
        # exactly the non-dominated members carry fitness < 1
        assert [i for i in range(6) if fit["fitness"][i] < 1] == [0, 1, 2]

    @pytest.mark.parametrize("strategy", fs.pareto.STRATEGIES)
    def test_size_and_feasibility_priority(self, strategy):
        rng = np.random.default_rng(7)
        pool = rng.random((20, 2))
        pool[3] = (np.inf, np.inf)
        keep = fs.environmental_select(strategy, pool, 10)
        assert len(keep) == 10
        assert 3 not in keep

    @pytest.mark.parametrize("strategy", ["nsga2", "spea2", "ibea"])
    def test_per_objective_best_survives(self, strategy):
        rng = np.random.default_rng(11)
        pool = rng.random((30, 2))
        keep = fs.environmental_select(strategy, pool, 6)
        assert int(np.argmin(pool[:, 0])) in keep
        assert int(np.argmin(pool[:, 1])) in keep

    def test_unknown_strategy(self):
        with pytest.raises(InvalidParameterError):
            fs.environmental_select("annealing", np.zeros((4, 2)), 2)


class TestAggregate:
    def test_single_front_is_identity(self):
        front = make_front([(1, 2), (2, 1)])
        agg = fs.aggregate_fronts([front])
        assert agg.objectives().tolist() == [[1, 2], [2, 1]]

    def test_dominating_front_wins(self):
        strong = make_front([(1, 1), (0.5, 2)], stamp=("nsga2", 0, 0))
        weak = make_front([(2, 2), (3, 3)], stamp=("spea2", 1, 0))
        agg = fs.aggregate_fronts([strong, weak])
        assert sorted(map(tuple, agg.objectives().tolist())) == [(0.5, 2), (1, 1)]
        assert ("nsga2", 0, 0) in agg.provenance

    def test_matches_brute_force_union(self):
        rng = np.random.default_rng(23)
        fronts = []
        for s in range(4):
            objs = rng.random((15, 2))
            keep = fs.non_dominated_sort(objs)[0]
            fronts.append(make_front(objs[keep], stamp=("ibea", s, 0)))
        agg = fs.aggregate_fronts(fronts)
        pool = np.vstack([f.objectives() for f in fronts])
        expected = sorted(map(tuple, pool[fs.non_dominated_sort(pool)[0]].tolist()))
        assert sorted(map(tuple, agg.objectives().tolist())) == expected

    def test_empty_input(self):
        with pytest.raises(EmptyInputError):
            fs.aggregate_fronts([])


@pytest.fixture(scope="module")
def small_config():
    return dict(population_m=8, generations_n=6, n=4, seed=99)


class TestRunStage1:
    def test_front_is_mutually_non_dominated(self, context, small_config):
        cfg = fs.OptimizerConfig(strategy="nsga2", **small_config)
        front = fs.run_stage1(cfg, context, cache_weights=False)
        objs = front.objectives()
        for i in range(len(objs)):
            for j in range(len(objs)):
                if i != j:
                    assert not fs.dominates(objs[i], objs[j])

    def test_seed_determinism(self, context, small_config):
        cfg = fs.OptimizerConfig(strategy="spea2", **small_config)
        a = fs.run_stage1(cfg, context, cache_weights=False)
        b = fs.run_stage1(cfg, context, cache_weights=False)
        assert a.objectives().tobytes() == b.objectives().tobytes()
        assert all(
            x.genome == y.genome for x, y in zip(a.points, b.points)
        )

    def test_threaded_evaluation_matches_serial(self, context, small_config):
        cfg = fs.OptimizerConfig(strategy="moead", **small_config)
        serial = fs.run_stage1(cfg, context, n_threads=1, cache_weights=False)
        threaded = fs.run_stage1(cfg, context, n_threads=4, cache_weights=False)
        assert serial.objectives().tobytes() == threaded.objectives().tobytes()

    def test_bounds_preserved_and_elitism(self, context, small_config):
        best_gamma1 = []

        def hook(gen, objs):
            finite = objs[np.all(np.isfinite(objs), axis=1)]
            best_gamma1.append(finite[:, 0].min())

        cfg = fs.OptimizerConfig(strategy="nsga2", **small_config)
        front = fs.run_stage1(
            cfg, context, cache_weights=False, generation_hook=hook
        )
        lo, hi = fs.Genome.bounds(4)
        for ind in front.points:
            vec = ind.genome.to_vector()
            assert np.all(vec >= lo) and np.all(vec <= hi)
        assert np.all(np.diff(best_gamma1) <= 1e-15)

    def test_infeasible_genome_gets_inf(self):
        # at the unbiased sweet spot, a resonant undriven genome folds both
        # quasienergies onto the zone edge and cannot be branch-labeled
        ctx = fs.reference_context(phi_dc=np.pi)
        zero = fs.Genome(p0=0.0, p_re=(0.0,) * 4, p_im=(0.0,) * 4, omega_d_frac=1.0)
        objs, point = fs.evaluate_genome(zero, ctx)
        assert objs == (np.inf, np.inf)
        assert point is None

    def test_mismatched_order_rejected(self, context):
        cfg = fs.OptimizerConfig(population_m=8, generations_n=2, n=3, seed=1)
        with pytest.raises(InvalidParameterError):
            fs.run_stage1(cfg, context)

    def test_config_validation(self):
        with pytest.raises(InvalidParameterError):
            fs.OptimizerConfig(population_m=7)
        with pytest.raises(InvalidParameterError):
            fs.OptimizerConfig(strategy="hill-climb")
        with pytest.raises(InvalidParameterError):
            fs.OptimizerConfig(crossover_rate=1.5)
