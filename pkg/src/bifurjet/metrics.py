"""Clustering efficiency, invariant masses, top pairing and time-to-solution."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .durham import Jet
from .jetqubo import JetAssignment, decode_assignment
from .ising import spins_to_bits
from .kinematics import mass
from .solvers import ShotEnsemble

M_W_REF = 80.4
M_TOP_REF = 172.5

Groups = Union[JetAssignment, Sequence[Jet], Sequence[Sequence[int]]]


def _groups(jets: Groups) -> list[set[int]]:
    if isinstance(jets, JetAssignment):
        return [set(j) for j in jets.jets]
    return [set(j.constituents) if isinstance(j, Jet) else set(j) for j in jets]


@dataclass
class EfficiencyReport:
    per_jet: list[float]
    # matching[k] is the solver jet paired with reference jet k
    matching: tuple[int, ...]
    violated: bool = False

    @property
    def mean(self) -> float:
        return float(np.mean(self.per_jet))


def overlap_matrix(solver: Groups, reference: Groups) -> np.ndarray:
    """``M[k, l] = |reference_k & solver_l|``."""
    ref = _groups(reference)
    sol = _groups(solver)
    return np.array([[len(r & s) for s in sol] for r in ref], dtype=np.int64)


def jet_efficiency(solver_jets: Groups, reference_jets: Groups) -> EfficiencyReport:
    """Per-reference-jet fraction of constituents the solver clustered the same way.

    Solver jets are matched to reference jets by the permutation with the
    largest total overlap (brute force). Among equal totals the per-jet
    vector is compared lexicographically, which keeps the result independent
    of how the solver jets are labeled.
    """
    ref = _groups(reference_jets)
    sol = _groups(solver_jets)
    if len(ref) != len(sol):
        raise ValueError(f"jet counts differ: solver {len(sol)}, reference {len(ref)}")
    if set().union(*ref) != set().union(*sol):
        raise ValueError("solver and reference jets cover different constituents")
    overlap = overlap_matrix(sol, ref)
    n = len(ref)
    sizes = np.array([len(r) for r in ref], dtype=np.float64)
    best_perm, best_key, per_jet = None, None, None
    for perm in itertools.permutations(range(n)):
        hits = overlap[np.arange(n), perm]
        eff = tuple(float(v) for v in np.where(sizes > 0, hits / np.maximum(sizes, 1), 1.0))
        key = (int(hits.sum()), eff)
        if best_key is None or key > best_key:
            best_perm, best_key, per_jet = perm, key, list(eff)
    violated = isinstance(solver_jets, JetAssignment) and solver_jets.violated
    return EfficiencyReport(per_jet, tuple(best_perm), violated)


def _p4(obj) -> np.ndarray:
    return obj.p4 if isinstance(obj, Jet) else np.asarray(obj, dtype=np.float64)


def invariant_mass(jets: Sequence) -> float:
    """Mass of the summed four-momentum of jets (or raw ``(e, px, py, pz)`` rows)."""
    if len(jets) == 0:
        raise ValueError("invariant mass of an empty jet list")
    return mass(np.sum([_p4(j) for j in jets], axis=0))


W_PAIRINGS = (((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2)))


@dataclass
class TopPairing:
    w_pairs: tuple[tuple[int, int], tuple[int, int]]
    w_masses: tuple[float, float]
    w_deviation: float
    # b_for_w[k] is the b-jet index combined with W candidate k
    b_for_w: tuple[int, int]
    top_masses: tuple[float, float]


def top_pairing(b_jets: Sequence, light_jets: Sequence, m_w: float = M_W_REF,
                m_top: float = M_TOP_REF) -> TopPairing:
    """Two-step top reconstruction.

    Step one picks the light-jet pairing whose two masses deviate least
    from ``m_w`` in summed absolute terms; step two attaches the b-jets in
    the order that brings both top candidates closest to ``m_top``.
    """
    if len(b_jets) != 2 or len(light_jets) != 4:
        raise ValueError(f"need 2 b-jets and 4 light jets, got {len(b_jets)} and {len(light_jets)}")
    if not m_w > 0:
        raise ValueError("m_w must be positive")
    light = [_p4(j) for j in light_jets]
    bees = [_p4(j) for j in b_jets]

    best = None
    for pairing in W_PAIRINGS:
        masses = tuple(mass(light[a] + light[b]) for a, b in pairing)
        dev = abs(masses[0] - m_w) + abs(masses[1] - m_w)
        if best is None or dev < best[0]:
            best = (dev, pairing, masses)
    dev, pairing, w_masses = best
    w4 = [light[a] + light[b] for a, b in pairing]

    choice = None
    for order in ((0, 1), (1, 0)):
        tops = (mass(w4[0] + bees[order[0]]), mass(w4[1] + bees[order[1]]))
        score = abs(tops[0] - m_top) + abs(tops[1] - m_top)
        if choice is None or score < choice[0]:
            choice = (score, order, tops)
    return TopPairing(pairing, w_masses, dev, choice[1], choice[2])


def time_to_solution(p_success: float, t_shot: float, target: float = 0.99) -> float:
    """Expected time to hit the solution with probability ``target``."""
    if p_success == 0:
        raise ValueError("unreachable solution: success probability is zero")
    if not 0 < p_success <= 1:
        raise ValueError(f"p_success must lie in (0, 1], got {p_success}")
    if not t_shot > 0:
        raise ValueError("t_shot must be positive")
    if not 0 < target < 1:
        raise ValueError("target must lie in (0, 1)")
    if p_success >= target:
        return float(t_shot)
    return t_shot * math.log(1.0 - target) / math.log(1.0 - p_success)


@dataclass
class TrajectoryRow:
    step: int
    time_s: float
    energy_mean: float
    energy_std: float
    eff_mean: float
    eff_std: float


def trajectory_aggregate(ensemble: ShotEnsemble, reference_jets: Groups, n_input: int,
                         n_jet: int, distances: Optional[np.ndarray] = None) -> list[TrajectoryRow]:
    """Mean and population std over shots at every recorded step.

    Efficiencies are computed from each shot's best-so-far spins, decoded
    (and repaired) with :func:`decode_assignment`.
    """
    stacked = ensemble.trajectories()
    snaps = [r.snapshots for r in ensemble.shots]
    if any(s.shape[0] != stacked.shape[1] for s in snaps):
        raise ValueError("shots were not recorded with spin snapshots on a common grid")
    effs = np.empty(stacked.shape[:2])
    for k, shot in enumerate(snaps):
        for t, spins in enumerate(shot):
            assignment = decode_assignment(spins_to_bits(spins), n_input, n_jet, distances)
            effs[k, t] = jet_efficiency(assignment, reference_jets).mean
    rows = []
    for t in range(stacked.shape[1]):
        rows.append(TrajectoryRow(
            step=int(stacked[0, t, 0]),
            time_s=float(stacked[:, t, 2].mean()),
            energy_mean=float(stacked[:, t, 1].mean()),
            energy_std=float(stacked[:, t, 1].std()),
            eff_mean=float(effs[:, t].mean()),
            eff_std=float(effs[:, t].std()),
        ))
    return rows


def reconstruct_masses(jets: Sequence[Jet], m_w: float = M_W_REF) -> dict[str, float]:
    """Boson and top candidate masses by jet multiplicity.

    Two jets give a Z candidate. Four jets with exactly two b-tags give H
    (the b pair) and Z (the rest). Six jets with exactly two b-tags go
    through :func:`top_pairing`. Other configurations only report the
    total mass under ``"all"``.
    """
    out = {"all": invariant_mass(jets)}
    bees = [j for j in jets if j.btag]
    light = [j for j in jets if not j.btag]
    if len(jets) == 2:
        out["Z"] = out["all"]
    elif len(jets) == 4 and len(bees) == 2:
        out["H"] = invariant_mass(bees)
        out["Z"] = invariant_mass(light)
    elif len(jets) == 6 and len(bees) == 2:
        tp = top_pairing(bees, light, m_w)
        out["W1"], out["W2"] = tp.w_masses
        out["top1"], out["top2"] = tp.top_masses
    return out
