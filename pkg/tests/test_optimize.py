import itertools

import numpy as np
import pytest

from bdris.emdata import generate_synthetic
from bdris.errors import TooLarge, UsageError
from bdris.optimize import (
    BeamTarget, Chromosome, GaParams, Objective, default_threads, exhaustive_search, fitness, ga_optimize,
)
from bdris.pattern import AngleGrid
from bdris.splitter import Mode, mode_preset
from bdris.thevenin import SurfaceConfig, simulate

F0 = 2.4e9
GRID = AngleGrid.cut(90.0, 1.0)


@pytest.fixture(scope="module")
def ds2():
    return generate_synthetic(1, 2, 0.0625, F0, grid=GRID)


@pytest.fixture(scope="module")
def ds1():
    return generate_synthetic(1, 1, 0.0625, F0, grid=GRID)


HYB = BeamTarget.from_signed("hybrid", 15.0, 165.0)


class TestTarget:
    def test_signed(self):
        t = BeamTarget.from_signed("hybrid", -15.0, -165.0)
        assert t.omega_r == (15.0, 270.0)
        assert t.omega_t == (165.0, 270.0)

    def test_sector_checks(self):
        with pytest.raises(UsageError):
            BeamTarget("reflection", (120.0, 90.0))
        with pytest.raises(UsageError):
            BeamTarget("transmission", None, (30.0, 90.0))
        with pytest.raises(UsageError):
            BeamTarget("hybrid", (10.0, 90.0))
        with pytest.raises(UsageError):
            BeamTarget("custom", (10.0, 90.0))


class TestParams:
    def test_defaults(self):
        p = GaParams()
        assert p.mutation_for(16) == 1 / 32

    @pytest.mark.parametrize("kw", [dict(population=1), dict(elitism=64), dict(crossover_rate=1.5),
                                    dict(tournament=0), dict(threads=0), dict(seed=-1)])
    def test_invalid(self, kw):
        with pytest.raises(UsageError):
            GaParams(**kw)

    def test_threads_env(self, monkeypatch):
        monkeypatch.setenv("BDRIS_THREADS", "3")
        assert default_threads() == 3
        monkeypatch.setenv("BDRIS_THREADS", "x")
        with pytest.raises(UsageError):
            default_threads()


class TestFitness:
    def test_matches_simulated_fields(self, ds2):
        obj = Objective(ds2, HYB)
        for genes in [(0, 1, 2, 3), (3, 3, 0, 1)]:
            e_r, e_t = obj.fields(genes)
            res = simulate(ds2, obj.config(genes), grid=GRID)
            assert abs(e_r - res.e_r.at(15.0, 90.0)) < 1e-12
            assert abs(e_t - res.e_t.at(165.0, 90.0)) < 1e-12
            assert abs(obj(genes) + abs(e_r) * abs(e_t)) < 1e-12

    def test_zero_fields_worst(self, ds2):
        from bdris.cell import IdealSplitter

        obj = Objective(ds2, HYB, splitters=IdealSplitter(1.0, 0.0))
        assert obj((0, 0, 0, 0)) == 0.0

    def test_cache(self, ds2):
        obj = Objective(ds2, HYB)
        obj((1, 2, 3, 0))
        obj((1, 2, 3, 0))
        assert obj.evaluations == 1
        vals = obj.many([(1, 2, 3, 0), (0, 0, 0, 0), (0, 0, 0, 0)], threads=2)
        assert obj.evaluations == 2
        assert vals[1] == vals[2]

    def test_threads_same_values(self, ds2):
        pop = np.random.default_rng(0).integers(0, 4, size=(40, 4))
        a = Objective(ds2, HYB).many(pop, 1)
        b = Objective(ds2, HYB).many(pop, 4)
        assert np.array_equal(a, b)

    def test_function_form(self, ds2):
        assert fitness(Chromosome((0, 1, 2, 3)), ds2, HYB) == Objective(ds2, HYB)((0, 1, 2, 3))


class TestGa:
    def test_deterministic(self, ds2):
        p = GaParams(population=16, generations=20, seed=7)
        a = ga_optimize(ds2, "hybrid", HYB, p)
        b = ga_optimize(ds2, "hybrid", HYB, p)
        assert a.best == b.best and a.fitness == b.fitness
        assert a.history == b.history

    def test_history_monotone(self, ds2):
        res = ga_optimize(ds2, "hybrid", HYB, GaParams(population=16, generations=30, seed=3))
        best = [g.best for g in res.history]
        # ties within the relative tolerance may swap to a lexicographically smaller vector
        assert all(b <= a + 1e-12 * abs(a) for a, b in zip(best, best[1:]))
        assert best[-1] <= best[0] + 1e-12 * abs(best[0])
        assert len(res.history) == 31

    def test_matches_exhaustive_small(self, ds2):
        _, f_ex = exhaustive_search(ds2, "hybrid", HYB)
        res = ga_optimize(ds2, "hybrid", HYB, GaParams(population=32, generations=40, seed=0))
        assert abs(res.fitness - f_ex) <= 1e-12 * abs(f_ex)

    def test_mode_mismatch(self, ds2):
        with pytest.raises(UsageError):
            ga_optimize(ds2, "reflection", HYB)


class TestExhaustive:
    def test_single_cell_brute_force(self, ds1):
        obj = Objective(ds1, HYB)
        want = min(obj(g) for g in itertools.product(range(4), repeat=2))
        _, f = exhaustive_search(ds1, "hybrid", HYB)
        assert abs(f - want) <= 1e-12 * abs(want)

    def test_reflection_ignores_transmit_genes(self, ds2):
        t = BeamTarget.from_signed("reflection", 20.0)
        obj = Objective(ds2, t)
        for r in itertools.product(range(4), repeat=2):
            vals = {obj(r + s) for s in itertools.product(range(4), repeat=2)}
            spread = max(vals) - min(vals)
            assert spread < 1e-12 * max(abs(v) for v in vals) + 1e-300

    def test_one_sided_equals_full(self, ds2):
        for mode, target in (("reflection", BeamTarget.from_signed("reflection", -25.0)),
                             ("transmission", BeamTarget.from_signed("transmission", None, 150.0))):
            _, f1 = exhaustive_search(ds2, mode, target)
            _, f2 = exhaustive_search(ds2, mode, target, one_sided=False)
            assert abs(f1 - f2) <= 1e-12 * abs(f2)

    def test_too_large(self, ds44):
        with pytest.raises(TooLarge):
            exhaustive_search(ds44, "hybrid", HYB)

    def test_canonical_representative(self, ds2):
        # a uniform shift of every reflecting state changes only the global phase
        best, f = exhaustive_search(ds2, "hybrid", HYB)
        obj = Objective(ds2, HYB)
        g = np.array(best.genes)
        for a in range(4):
            shifted = tuple(np.concatenate([(g[:2] + a) % 4, g[2:]]).tolist())
            assert abs(obj(shifted) - f) <= 1e-12 * abs(f)
            assert best.genes <= shifted


class TestChromosome:
    def test_codes(self):
        c = Chromosome(("00", "11", 1, 2))
        assert c.genes == (0, 3, 1, 2)
        assert c.codes == ["00", "11", "01", "10"]

    def test_odd_length(self):
        with pytest.raises(ValueError):
            Chromosome((0, 1, 2))

    def test_config(self):
        cfg = Chromosome((0, 1, 2, 3)).config(mode_preset(Mode.HYBRID, F0))
        assert isinstance(cfg, SurfaceConfig) and cfg.m == 2
        assert cfg.genes == (0, 1, 2, 3)
