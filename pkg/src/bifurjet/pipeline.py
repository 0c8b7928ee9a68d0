"""Event-level clustering: QUBO build, solver ensemble, decode, compare."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

from .durham import Jet, durham_exclusive, make_jets
from .ising import qubo_to_ising, spins_to_bits
from .jetqubo import JetAssignment, Metric, build_multijet_qubo, decode_assignment, distance_matrix
from .kinematics import Event
from .metrics import EfficiencyReport, jet_efficiency
from .solvers import ShotEnsemble, SolverSpec, multi_shot


def default_shots(n_jet: int) -> int:
    return 100 if n_jet == 2 else 50


@dataclass
class ClusterResult:
    qubo_size: int
    best_energy: float
    assignment: JetAssignment
    efficiency: EfficiencyReport
    jets: list[Jet]
    reference: list[Jet]
    ensemble: ShotEnsemble
    wall_time: float

    @property
    def n_violations(self) -> int:
        return self.assignment.n_violations


def cluster_event(event: Event, n_jet: int, solver: SolverSpec, n_shots: Optional[int] = None,
                  seed: int = 0, metric: Metric | str = Metric.EEKT, lam: Optional[float] = None,
                  record_every: Optional[int] = None, threads: int = 1,
                  reference: Optional[list[Jet]] = None) -> ClusterResult:
    """Cluster one event through the multijet QUBO and score it against Durham."""
    t0 = time.perf_counter()
    qubo = build_multijet_qubo(event, n_jet, metric, lam)
    model = qubo_to_ising(qubo)
    shots = n_shots if n_shots is not None else default_shots(n_jet)
    ensemble = multi_shot(solver, model, shots, seed, record_every, threads)
    best = ensemble.best
    d = distance_matrix(event.particles, metric)
    assignment = decode_assignment(spins_to_bits(best.best_spins), len(event), n_jet, d)
    wall = time.perf_counter() - t0
    if reference is None:
        reference = durham_exclusive(event, n_jet)
    eff = jet_efficiency(assignment, reference)
    return ClusterResult(
        qubo_size=qubo.n,
        best_energy=best.best_energy,
        assignment=assignment,
        efficiency=eff,
        jets=make_jets(assignment.jets, event.particles),
        reference=reference,
        ensemble=ensemble,
        wall_time=wall,
    )
