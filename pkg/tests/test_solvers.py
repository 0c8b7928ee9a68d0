import numpy as np
import pytest
from hypothesis import given, strategies as st

from bifurjet.ising import IsingModel, brute_force_minimum, ising_energy
from bifurjet.solvers import (SaParams, SbParams, SolverDivergence, SolverSpec, auto_c0, beta_ladder,
                              bsb_solve, multi_shot, pump_schedule, sa_solve,
                              sb_positions, shot_seed)

from conftest import random_ising

FERRO = IsingModel([[0, -1], [-1, 0]], [0, 0])
FIELD = IsingModel(np.zeros((1, 1)), [-1.0])
SOLVERS = ["bsb", "dsb", "sa"]


def run(kind, model, seed=0, steps=200, record_every=None):
    return SolverSpec.make(kind, steps=steps)(model, seed, record_every)


class TestPump:
    def test_endpoints_and_midpoint(self):
        assert pump_schedule(0, 100, 1.0) == 0.0
        assert pump_schedule(100, 100, 1.0) == 1.0
        assert pump_schedule(50, 100, 1.0) == 0.5

    def test_monotone(self):
        vals = [pump_schedule(k, 37, 2.0) for k in range(38)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("step", [-1, 101])
    def test_out_of_range(self, step):
        with pytest.raises(ValueError):
            pump_schedule(step, 100, 1.0)


class TestParams:
    @pytest.mark.parametrize("kw", [dict(a0=0), dict(c0=-1.0), dict(dt=0), dict(steps=0), dict(pump="cubic")])
    def test_sb_invalid(self, kw):
        with pytest.raises(ValueError):
            SbParams(**kw)

    @pytest.mark.parametrize("kw", [dict(sweeps=0), dict(beta_min=0), dict(beta_min=5, beta_max=1)])
    def test_sa_invalid(self, kw):
        with pytest.raises(ValueError):
            SaParams(**kw)

    def test_sa_solve_rejects_bad_range(self):
        with pytest.raises(ValueError):
            sa_solve(FIELD, 10, (2.0, 1.0))

    def test_auto_c0(self):
        m = IsingModel([[0, 2], [2, 0]], [0, 0])
        assert auto_c0(m) == pytest.approx(0.5 / (2 * np.sqrt(2)))
        assert np.isfinite(auto_c0(FIELD))

    def test_beta_ladder_geometric(self):
        b = beta_ladder(5, 0.1, 10.0)
        assert b[0] == pytest.approx(0.1) and b[-1] == pytest.approx(10.0)
        np.testing.assert_allclose(b[1:] / b[:-1], b[1] / b[0])

    def test_unknown_solver(self):
        with pytest.raises(ValueError):
            SolverSpec.make("qaoa")


class TestSmallCases:
    @pytest.mark.parametrize("kind", SOLVERS)
    def test_single_field(self, kind):
        r = run(kind, FIELD)
        assert list(r.best_spins) == [1] and r.best_energy == -1.0

    @pytest.mark.parametrize("kind", ["bsb", "dsb"])
    def test_ferromagnet_most_shots(self, kind):
        hits = sum(run(kind, FERRO, seed=s).best_energy == -1.0 for s in range(10))
        assert hits >= 9

    def test_sa_ferromagnet(self):
        assert run("sa", FERRO).best_energy == -1.0

    def test_zero_model(self):
        m = IsingModel(np.zeros((3, 3)), np.zeros(3), offset=2.5)
        for kind in SOLVERS:
            assert run(kind, m).best_energy == 2.5

    @pytest.mark.parametrize("kind", SOLVERS)
    @pytest.mark.parametrize("seed", range(3))
    def test_random_n8_matches_oracle(self, kind, seed):
        m = random_ising(np.random.default_rng(100 + seed), 8)
        _, e_min = brute_force_minimum(m)
        ens = multi_shot(SolverSpec.make(kind, steps=1000), m, 100, seed)
        assert ens.best_energy == pytest.approx(e_min, rel=1e-9, abs=1e-12)
        assert all(ens.best_energy <= r.best_energy for r in ens.shots)


class TestResultInvariants:
    @pytest.mark.parametrize("kind", SOLVERS)
    def test_energy_rederivable(self, kind, rng):
        m = random_ising(rng, 9)
        r = run(kind, m, record_every=7)
        assert r.best_energy == ising_energy(m, r.best_spins)
        assert set(np.unique(r.best_spins)) <= {-1, 1}

    @pytest.mark.parametrize("kind", SOLVERS)
    def test_trajectory_grid_and_monotone(self, kind, rng):
        m = random_ising(rng, 9)
        r = run(kind, m, steps=95, record_every=10)
        np.testing.assert_array_equal(r.trajectory[:, 0], list(range(10, 100, 10)) + [95])
        assert np.all(np.diff(r.trajectory[:, 1]) <= 0)
        assert np.all(np.diff(r.trajectory[:, 2]) >= 0)
        assert r.trajectory[-1, 1] == pytest.approx(r.best_energy, abs=1e-9)
        assert r.snapshots.shape == (10, 9)

    @pytest.mark.parametrize("kind", SOLVERS)
    def test_recording_does_not_change_result(self, kind, rng):
        m = random_ising(rng, 9)
        a = run(kind, m, seed=4)
        b = run(kind, m, seed=4, record_every=3)
        np.testing.assert_array_equal(a.best_spins, b.best_spins)
        assert a.best_energy == b.best_energy and a.best_step == b.best_step

    def test_positions_match_solver_end_state(self, rng):
        m = random_ising(rng, 6)
        xs = sb_positions(m, SbParams(steps=50), seed=3)
        assert xs.shape == (50, 6)
        r = bsb_solve(m, SbParams(steps=50), seed=3)
        best = min(ising_energy(m, np.where(x >= 0, 1, -1)) for x in xs)
        assert r.best_energy == pytest.approx(best)

    def test_divergence_reported(self):
        m = IsingModel([[0, 1e300], [1e300, 0]], [1e300, 1e300])
        with pytest.raises(SolverDivergence, match="step"):
            bsb_solve(m, SbParams(dt=1e300, c0=1e300, steps=5))


class TestWallsProperty:
    @given(st.integers(0, 2**31 - 1), st.integers(1, 12), st.booleans(),
           st.sampled_from([0.1, 0.25, 0.5, 1.0]))
    def test_positions_bounded(self, seed, n, discrete, dt):
        m = random_ising(np.random.default_rng(seed), n)
        xs = sb_positions(m, SbParams(steps=200, dt=dt), seed=seed, discrete=discrete)
        assert np.abs(xs).max() <= 1.0


class TestEnsemble:
    def test_seeds_are_pure(self):
        assert shot_seed(7, 3) == shot_seed(7, 3)
        assert len({shot_seed(7, k) for k in range(100)}) == 100
        assert shot_seed(7, 0) != shot_seed(8, 0)

    def test_single_shot(self, rng):
        m = random_ising(rng, 5)
        ens = multi_shot(SolverSpec.make("bsb", steps=100), m, 1, 0)
        assert ens.best is ens.shots[0]

    @pytest.mark.parametrize("kind", SOLVERS)
    def test_threads_bit_identical(self, kind, rng):
        m = random_ising(rng, 10)
        spec = SolverSpec.make(kind, steps=300)
        a = multi_shot(spec, m, 12, 99, record_every=50, threads=1)
        b = multi_shot(spec, m, 12, 99, record_every=50, threads=4)
        for ra, rb in zip(a.shots, b.shots):
            np.testing.assert_array_equal(ra.best_spins, rb.best_spins)
            np.testing.assert_array_equal(ra.trajectory[:, :2], rb.trajectory[:, :2])
            assert ra.best_energy == rb.best_energy and ra.shot_seed == rb.shot_seed

    def test_order_independence(self, rng):
        m = random_ising(rng, 8)
        spec = SolverSpec.make("bsb", steps=200)
        ens = multi_shot(spec, m, 6, 5)
        for k in reversed(range(6)):
            r = spec(m, shot_seed(5, k))
            np.testing.assert_array_equal(r.best_spins, ens.shots[k].best_spins)

    def test_mean_and_std(self, rng):
        m = random_ising(rng, 6)
        ens = multi_shot(SolverSpec.make("sa", steps=40), m, 5, 1, record_every=10)
        traj = np.stack([r.trajectory[:, 1] for r in ens.shots])
        np.testing.assert_allclose(ens.energy_mean, traj.mean(axis=0))
        np.testing.assert_allclose(ens.energy_std, traj.std(axis=0))
        np.testing.assert_array_equal(ens.steps, [10, 20, 30, 40])

    def test_unrecorded_has_no_trajectories(self, rng):
        ens = multi_shot(SolverSpec.make("bsb", steps=10), random_ising(rng, 3), 2, 0)
        with pytest.raises(ValueError):
            ens.trajectories()

    def test_zero_shots(self, rng):
        with pytest.raises(ValueError):
            multi_shot(SolverSpec.make("bsb"), random_ising(rng, 3), 0, 0)
