"""Exclusive Durham (ee-kt) clustering and event preselection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .kinematics import Event, Particle, cos_angle, cos_theta

ACCEPTANCE_COS = 0.9
MIN_SEPARATION = 20.0  # GeV


@dataclass
class Jet:
    p4: np.ndarray
    constituents: list[int]
    btag: bool = False

    @property
    def e(self) -> float:
        return float(self.p4[0])

    @property
    def p3(self) -> np.ndarray:
        return self.p4[1:]

    @property
    def pt(self) -> float:
        return math.hypot(self.p4[1], self.p4[2])


def _unit_rows(p3: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(p3, axis=1)
    safe = np.where(norms > 0.0, norms, 1.0)
    return p3 / safe[:, None]


def _dij(e: np.ndarray, unit: np.ndarray, i: int) -> np.ndarray:
    """Durham distances from object ``i`` to every object."""
    cos = np.clip(unit @ unit[i], -1.0, 1.0)
    return 2.0 * np.minimum(e, e[i]) ** 2 * (1.0 - cos)


def is_btagged(constituents: Sequence[int], particles: Sequence[Particle]) -> bool:
    """True when more than half of the jet energy comes from truth-b particles."""
    total = sum(particles[i].e for i in constituents)
    from_b = sum(particles[i].e for i in constituents if particles[i].flavor == "b")
    return total > 0 and from_b > 0.5 * total


def make_jets(groups: Sequence[Sequence[int]], particles: Sequence[Particle]) -> list[Jet]:
    """E-scheme jets from explicit constituent groups (empty groups are skipped)."""
    jets = []
    for members in groups:
        if not members:
            continue
        p4 = np.sum([particles[i].p4 for i in members], axis=0)
        jets.append(Jet(p4, sorted(int(i) for i in members), is_btagged(members, particles)))
    return jets


def durham_exclusive(event: Event | Sequence[Particle], n_jet: int) -> list[Jet]:
    """Merge the closest pair until exactly ``n_jet`` objects remain.

    Recombination is the four-vector sum. Equal distances resolve to the
    lexicographically smallest ``(i, j)`` among surviving objects, where a
    merged object keeps the lower slot.
    """
    particles = list(event.particles) if isinstance(event, Event) else list(event)
    n = len(particles)
    if n_jet < 1:
        raise ValueError(f"n_jet must be at least 1, got {n_jet}")
    if n < n_jet:
        raise ValueError(f"cannot form {n_jet} jets from {n} particles")

    p4 = np.array([p.p4 for p in particles], dtype=np.float64).reshape(n, 4)
    members: list[list[int]] = [[i] for i in range(n)]
    active = np.ones(n, dtype=bool)
    e = p4[:, 0].copy()
    unit = _unit_rows(p4[:, 1:])
    d = np.full((n, n), np.inf)
    for i in range(n):
        d[i, i + 1:] = _dij(e, unit, i)[i + 1:]

    for _ in range(n - n_jet):
        flat = int(np.argmin(d))
        i, j = divmod(flat, n)
        p4[i] += p4[j]
        members[i].extend(members[j])
        active[j] = False
        d[j, :] = np.inf
        d[:, j] = np.inf
        e[i] = p4[i, 0]
        unit[i] = _unit_rows(p4[i:i + 1, 1:])[0]
        row = _dij(e, unit, i)
        row[~active] = np.inf
        d[i, i + 1:] = row[i + 1:]
        d[:i, i] = row[:i]

    jets = []
    for i in np.flatnonzero(active):
        jets.append(Jet(p4[i].copy(), sorted(members[i]), is_btagged(members[i], particles)))
    return jets


def jet_separation(jn: Jet, jm: Jet) -> float:
    """``sqrt(2 min(E_n^2, E_m^2) (1 - cos theta_nm))`` in GeV."""
    if not np.any(jn.p3) or not np.any(jm.p3):
        raise ValueError("jet separation undefined for a zero-momentum jet")
    c = cos_angle(jn.p3, jm.p3)
    return math.sqrt(max(0.0, 2.0 * min(jn.e, jm.e) ** 2 * (1.0 - c)))


def event_preselection(jets: Sequence[Jet]) -> tuple[bool, list[str]]:
    """Detector acceptance and soft-jet separation cuts.

    Every jet needs ``|cos theta| < 0.9``; the two jets with the lowest
    transverse momenta must be separated by more than 20 GeV.
    """
    if len(jets) < 2:
        raise ValueError("preselection needs at least 2 jets")
    reasons = []
    for k, jet in enumerate(jets):
        if not abs(cos_theta(jet.p3)) < ACCEPTANCE_COS:
            reasons.append(f"jet {k} outside acceptance (|cos theta| >= {ACCEPTANCE_COS})")
    soft = sorted(range(len(jets)), key=lambda k: (jets[k].pt, k))[:2]
    sep = jet_separation(jets[soft[0]], jets[soft[1]])
    if not sep > MIN_SEPARATION:
        reasons.append(
            f"jets {soft[0]} and {soft[1]} separated by {sep:.2f} GeV (need > {MIN_SEPARATION})"
        )
    return not reasons, reasons
