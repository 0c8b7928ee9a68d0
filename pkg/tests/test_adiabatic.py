import math

import numpy as np
import pytest
from scipy.linalg import expm

from bifurjet.adiabatic import (AnnealSchedule, NormDriftError, anneal_evolve, build_target_hamiltonian,
                                ground_state_probability, initial_state)
from bifurjet.ising import IsingModel, brute_force_minimum

from conftest import random_ising

FERRO = IsingModel([[0, -1], [-1, 0]], [0, 0])
FIELD = IsingModel(np.zeros((1, 1)), [-1.0])


def dense_x(n):
    """``sum_i X_i`` as a dense matrix; qubit i is bit i of the basis index."""
    x = np.array([[0, 1], [1, 0]])
    total = np.zeros((2**n, 2**n))
    for i in range(n):
        op = np.array([[1.0]])
        for k in reversed(range(n)):
            op = np.kron(op, x if k == i else np.eye(2))
        total += op
    return total


def dense_evolve(model, total_time, steps):
    diag = build_target_hamiltonian(model)
    hx = dense_x(model.n)
    psi = initial_state(model.n)
    dt = total_time / steps
    for k in range(steps):
        s = (k + 0.5) / steps
        psi = expm(-1j * dt * ((1 - s) * hx + s * np.diag(diag))) @ psi
    return psi


class TestTargetHamiltonian:
    def test_single_field(self):
        np.testing.assert_array_equal(build_target_hamiltonian(FIELD), [-1, 1])

    def test_zero(self):
        m = IsingModel(np.zeros((3, 3)), np.zeros(3))
        assert not build_target_hamiltonian(m).any()

    def test_ferromagnet_degenerate(self):
        d = build_target_hamiltonian(FERRO)
        np.testing.assert_array_equal(d, [-1, 1, 1, -1])

    @pytest.mark.parametrize("n", range(1, 13))
    def test_min_matches_brute_force(self, n):
        m = random_ising(np.random.default_rng(n), n)
        assert build_target_hamiltonian(m).min() == pytest.approx(brute_force_minimum(m)[1], abs=1e-12)

    def test_size_guard(self):
        with pytest.raises(ValueError):
            build_target_hamiltonian(IsingModel(np.zeros((15, 15)), np.zeros(15)))


class TestInitialState:
    @pytest.mark.parametrize("n", [1, 2, 3, 5])
    def test_ground_of_transverse_field(self, n):
        psi = initial_state(n)
        hx = dense_x(n)
        assert np.vdot(psi, hx @ psi).real == pytest.approx(-n)
        assert np.linalg.norm(psi) == pytest.approx(1.0)


class TestSchedule:
    def test_defaults(self):
        s = AnnealSchedule()
        assert s.a(0) == 1 and s.b(0) == 0 and s.a(1) == 0 and s.b(1) == 1

    def test_convention_checked(self):
        with pytest.raises(ValueError):
            AnnealSchedule(a=lambda s: 0.0)
        with pytest.raises(ValueError):
            AnnealSchedule(b=lambda s: 0.1 + s)


class TestEvolution:
    def test_tiny_time_keeps_initial_state(self):
        psi = anneal_evolve(FERRO, total_time=1e-6, steps=1)
        assert abs(np.vdot(initial_state(2), psi)) ** 2 > 0.999

    @pytest.mark.parametrize("model", [FIELD, FERRO], ids=["field", "ferro"])
    def test_slow_anneal_finds_ground(self, model):
        psi = anneal_evolve(model, total_time=100.0, steps=10_000)
        assert ground_state_probability(psi, model) > 0.99
        assert abs(np.linalg.norm(psi) - 1) < 1e-8

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_matches_dense_oracle(self, n):
        m = random_ising(np.random.default_rng(10 + n), n)
        ours = anneal_evolve(m, total_time=5.0, steps=50)
        ref = dense_evolve(m, 5.0, 50)
        np.testing.assert_allclose(ours, ref, atol=1e-10)

    def test_adiabatic_trend(self):
        rng = np.random.default_rng(3)
        models = [random_ising(rng, 2) for _ in range(4)]
        times = [1, 2, 4, 8, 16, 32, 64, 128]
        probs = [np.mean([ground_state_probability(anneal_evolve(m, total_time=T, steps=40 * T), m) for m in models])
                 for T in times]
        assert probs[-1] > probs[0]
        assert np.all(np.diff(probs) >= 0)

    def test_trace_rows(self):
        trace = []
        anneal_evolve(FERRO, total_time=10.0, steps=100, record_every=25, trace=trace)
        assert [r.s for r in trace] == [0.0, 0.25, 0.5, 0.75, 1.0]
        assert trace[0].energy_expectation == pytest.approx(0.0)
        assert all(abs(r.norm - 1) < 1e-10 for r in trace)

    def test_deterministic(self):
        a = anneal_evolve(FERRO, total_time=3.0, steps=30)
        b = anneal_evolve(FERRO, total_time=3.0, steps=30)
        np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize("kw", [dict(steps=0), dict(total_time=0.0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            anneal_evolve(FERRO, **kw)

    def test_norm_drift_error_exists(self):
        assert issubclass(NormDriftError, RuntimeError)


class TestGroundProbability:
    def test_exact_ground(self):
        psi = np.array([1, 0], dtype=complex)
        assert ground_state_probability(psi, FIELD) == 1.0

    def test_uniform(self):
        psi = np.ones(2, dtype=complex) / math.sqrt(2)
        assert ground_state_probability(psi, FIELD) == pytest.approx(0.5)

    def test_bell_like(self):
        psi = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
        assert ground_state_probability(psi, FERRO) == pytest.approx(1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            ground_state_probability(np.ones(4, dtype=complex), FIELD)
