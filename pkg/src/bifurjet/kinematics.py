"""Particle/event containers and four-vector helpers.

Four-momenta are ``(e, px, py, pz)`` in GeV.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

FLAVORS = ("b", "light", "none")


@dataclass(frozen=True)
class Particle:
    e: float
    px: float
    py: float
    pz: float
    flavor: Optional[str] = None
    truth_jet: Optional[int] = None

    def __post_init__(self):
        if not self.e > 0:
            raise ValueError(f"particle energy must be positive, got {self.e}")
        p2 = self.px**2 + self.py**2 + self.pz**2
        if self.e**2 < p2 - 1e-6 * self.e**2:
            raise ValueError(f"particle is spacelike: e={self.e}, |p|={math.sqrt(p2)}")
        if self.flavor is not None and self.flavor not in FLAVORS:
            raise ValueError(f"unknown flavor {self.flavor!r}")

    @property
    def p4(self) -> np.ndarray:
        return np.array([self.e, self.px, self.py, self.pz])

    @property
    def p3(self) -> np.ndarray:
        return np.array([self.px, self.py, self.pz])

    @property
    def pt(self) -> float:
        return math.hypot(self.px, self.py)


@dataclass
class Event:
    particles: list[Particle]
    meta: dict[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.particles)

    def p4s(self) -> np.ndarray:
        """``(N, 4)`` array of four-momenta."""
        if not self.particles:
            return np.zeros((0, 4))
        return np.array([[p.e, p.px, p.py, p.pz] for p in self.particles])


def momenta(particles: Sequence[Particle]) -> np.ndarray:
    return np.array([[p.px, p.py, p.pz] for p in particles], dtype=np.float64).reshape(-1, 3)


def energies(particles: Sequence[Particle]) -> np.ndarray:
    return np.array([p.e for p in particles], dtype=np.float64)


def cos_angle(p: np.ndarray, q: np.ndarray) -> float:
    """Cosine of the opening angle between two three-momenta, clipped to [-1, 1]."""
    npn = np.linalg.norm(p)
    nq = np.linalg.norm(q)
    if npn == 0.0 or nq == 0.0:
        raise ValueError("opening angle undefined for a zero three-momentum")
    return float(np.clip(np.dot(p, q) / (npn * nq), -1.0, 1.0))


def cos_matrix(p3: np.ndarray) -> np.ndarray:
    """Pairwise opening-angle cosines for an ``(N, 3)`` momentum array."""
    norms = np.linalg.norm(p3, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValueError(f"particle {int(zero[0])} has zero momentum")
    unit = p3 / norms[:, None]
    return np.clip(unit @ unit.T, -1.0, 1.0)


def mass(p4) -> float:
    """Invariant mass of a four-momentum, clamped at zero for spacelike rounding."""
    e, px, py, pz = p4
    m2 = e * e - (px * px + py * py + pz * pz)
    return math.sqrt(max(0.0, m2))


def cos_theta(p3) -> float:
    """Cosine of the polar angle with respect to the beam (z) axis."""
    norm = float(np.linalg.norm(p3))
    if norm == 0.0:
        raise ValueError("polar angle undefined for a zero three-momentum")
    return float(p3[2]) / norm


def boost(p4: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Lorentz-boost four-momenta (rows of ``p4``) by velocity ``beta``."""
    p4 = np.atleast_2d(np.asarray(p4, dtype=np.float64))
    b2 = float(beta @ beta)
    if b2 == 0.0:
        return p4.copy()
    if b2 >= 1.0:
        raise ValueError("boost velocity must be below the speed of light")
    gamma = 1.0 / math.sqrt(1.0 - b2)
    bp = p4[:, 1:] @ beta
    e = gamma * (p4[:, 0] + bp)
    coef = (gamma - 1.0) * bp / b2 + gamma * p4[:, 0]
    p = p4[:, 1:] + coef[:, None] * beta[None, :]
    return np.column_stack([e, p])


def rotation_to(axis: np.ndarray) -> np.ndarray:
    """Rotation matrix taking +z onto the unit vector along ``axis``."""
    n = axis / np.linalg.norm(axis)
    z = np.array([0.0, 0.0, 1.0])
    c = float(n @ z)
    if c > 1.0 - 1e-15:
        return np.eye(3)
    if c < -1.0 + 1e-15:
        return np.diag([1.0, -1.0, -1.0])
    v = np.cross(z, n)
    s = np.linalg.norm(v)
    k = v / s
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + s * kx + (1 - c) * (kx @ kx)
