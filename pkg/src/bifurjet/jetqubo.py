"""Jet clustering as a QUBO: distance matrices, builders and decoding.

Multijet variables are laid out jet-major: bit ``n * n_input + i`` is set
when constituent ``i`` belongs to jet ``n``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .ising import Qubo, as_bits, canonicalize
from .kinematics import Event, Particle, cos_angle, cos_matrix, energies, momenta

LAMBDA_FACTOR = 1.1
LAMBDA_FLOOR = 1e-12


class Metric(str, enum.Enum):
    ANGLE = "angle"
    EEKT = "eekt"


def _check_nonzero(p: Particle, index: int) -> None:
    if p.px == 0.0 and p.py == 0.0 and p.pz == 0.0:
        raise ValueError(f"particle {index} has zero momentum")


def angle_distance(pi: Particle, pj: Particle) -> float:
    """``-cos(theta_ij) / 2``; in [-0.5, 0.5]."""
    _check_nonzero(pi, 0)
    _check_nonzero(pj, 1)
    return -0.5 * cos_angle(pi.p3, pj.p3)


def eekt_distance(pi: Particle, pj: Particle) -> float:
    """Durham distance ``2 min(E_i^2, E_j^2) (1 - cos(theta_ij))`` in GeV^2."""
    _check_nonzero(pi, 0)
    _check_nonzero(pj, 1)
    return 2.0 * min(pi.e**2, pj.e**2) * (1.0 - cos_angle(pi.p3, pj.p3))


def distance_matrix(particles: Sequence[Particle], metric: Metric | str) -> np.ndarray:
    """Full ``N x N`` distance matrix including the diagonal.

    The angle metric has ``-0.5`` on the diagonal (a particle is parallel to
    itself); the ee-kt diagonal is zero.
    """
    metric = Metric(metric)
    cos = cos_matrix(momenta(particles))
    if metric is Metric.ANGLE:
        return -0.5 * cos
    e2 = energies(particles) ** 2
    d = 2.0 * np.minimum(e2[:, None], e2[None, :]) * (1.0 - cos)
    np.fill_diagonal(d, 0.0)
    return d


def _particles(event: Event | Sequence[Particle]) -> list[Particle]:
    return list(event.particles) if isinstance(event, Event) else list(event)


def build_dijet_qubo(event: Event | Sequence[Particle], metric: Metric | str) -> Qubo:
    """Single-bit-per-constituent dijet QUBO (bit 1 = jet A, bit 0 = jet B)."""
    particles = _particles(event)
    if len(particles) < 2:
        raise ValueError(f"dijet QUBO needs at least 2 particles, got {len(particles)}")
    return canonicalize(distance_matrix(particles, metric))


def default_lambda(q_entries_max: float, n_input: int) -> float:
    """Penalty weight strictly above ``n_input * max Q``."""
    if n_input < 1:
        raise ValueError("n_input must be at least 1")
    return LAMBDA_FACTOR * n_input * max(float(q_entries_max), LAMBDA_FLOOR)


def build_multijet_qubo(
    event: Event | Sequence[Particle],
    n_jet: int,
    metric: Metric | str,
    lam: Optional[float] = None,
) -> Qubo:
    """One-hot multijet QUBO with ``n_jet * N_input`` variables.

    Each jet block carries the pairwise distances of its members; the
    penalty ``lam * sum_i (1 - sum_n s_i^(n))**2`` is expanded exactly into
    couplings, linear terms and the offset.
    """
    particles = _particles(event)
    n_input = len(particles)
    if n_jet < 2:
        raise ValueError(f"n_jet must be at least 2, got {n_jet}")
    if n_input < n_jet:
        raise ValueError(f"n_jet={n_jet} exceeds the number of particles {n_input}")
    d = distance_matrix(particles, metric)
    if lam is None:
        lam = default_lambda(float(d.max()), n_input)
    elif not lam > 0:
        raise ValueError(f"penalty lambda must be positive, got {lam}")

    size = n_jet * n_input
    coupling = np.zeros((size, size))
    linear = np.zeros(size)
    off = d.copy()
    np.fill_diagonal(off, 0.0)
    for n in range(n_jet):
        blk = slice(n * n_input, (n + 1) * n_input)
        coupling[blk, blk] = off
        linear[blk] = np.diag(d) - lam
    idx = np.arange(n_input)
    for n in range(n_jet):
        for m in range(n_jet):
            if n != m:
                coupling[n * n_input + idx, m * n_input + idx] = lam
    return Qubo(coupling, linear, lam * n_input)


@dataclass
class JetAssignment:
    """Partition of constituent indices into jets, with decode diagnostics."""

    jets: list[list[int]]
    n_input: int
    unassigned: list[int] = field(default_factory=list)
    multiply_assigned: list[int] = field(default_factory=list)

    @property
    def n_jet(self) -> int:
        return len(self.jets)

    @property
    def violated(self) -> bool:
        return bool(self.unassigned or self.multiply_assigned)

    @property
    def n_violations(self) -> int:
        return len(self.unassigned) + len(self.multiply_assigned)

    @property
    def empty_jets(self) -> list[int]:
        """Jets with no members; allowed by the one-hot penalty but flagged."""
        return [k for k, members in enumerate(self.jets) if not members]

    @property
    def flagged(self) -> bool:
        return self.violated or bool(self.empty_jets)

    def labels(self) -> np.ndarray:
        """Jet label per constituent."""
        out = np.full(self.n_input, -1, dtype=np.int64)
        for k, members in enumerate(self.jets):
            out[members] = k
        return out


def decode_assignment(
    bits,
    n_input: int,
    n_jet: int,
    distances: Optional[np.ndarray] = None,
) -> JetAssignment:
    """Turn jet-major one-hot bits into a jet partition.

    Constituents set in zero or several jet blocks are reported and then
    repaired, in index order, by joining the jet that minimizes the summed
    distance to its current members. Without ``distances`` a repaired
    constituent joins the lowest-index jet it was set in (jet 0 if none).
    """
    b = as_bits(bits)
    if b.shape[0] != n_input * n_jet:
        raise ValueError(
            f"bit vector length {b.shape[0]} != n_input * n_jet = {n_input * n_jet}"
        )
    grid = b.reshape(n_jet, n_input)
    counts = grid.sum(axis=0)
    unassigned = [int(i) for i in np.flatnonzero(counts == 0)]
    multiple = [int(i) for i in np.flatnonzero(counts >= 2)]
    jets: list[list[int]] = [[] for _ in range(n_jet)]
    for i in np.flatnonzero(counts == 1):
        jets[int(np.argmax(grid[:, i]))].append(int(i))

    for i in sorted(unassigned + multiple):
        if distances is not None:
            cost = [float(distances[i, members].sum()) for members in jets]
            target = int(np.argmin(cost))
        else:
            set_in = np.flatnonzero(grid[:, i])
            target = int(set_in[0]) if set_in.size else 0
        jets[target].append(i)
    return JetAssignment([sorted(j) for j in jets], n_input, unassigned, multiple)


def encode_assignment(assignment: JetAssignment) -> np.ndarray:
    """Jet-major one-hot bits for a partition (inverse of a clean decode)."""
    bits = np.zeros(assignment.n_jet * assignment.n_input, dtype=np.int8)
    for n, members in enumerate(assignment.jets):
        for i in members:
            bits[n * assignment.n_input + i] = 1
    return bits


def block_energy(assignment: JetAssignment, distances: np.ndarray) -> float:
    """Sum of in-jet distances over all ordered pairs, diagonal included.

    For a one-hot bit vector this is the multijet QUBO energy; the angle
    metric's diagonal contributes a constant ``-0.5`` per constituent.
    """
    total = 0.0
    for members in assignment.jets:
        total += float(distances[np.ix_(members, members)].sum())
    return total
