"""QUBO and Ising representations, energies, and exact conversion.

Conventions
-----------
QUBO energy over bits ``s`` in {0, 1}::

    E(s) = sum_{i != j} C_ij s_i s_j + sum_i l_i s_i + offset

Ising energy over spins ``x`` in {-1, +1}::

    E(x) = 1/2 sum_{i != j} J_ij x_i x_j + sum_i h_i x_i + offset

Both sums run over ordered pairs, so a symmetric off-diagonal entry is
counted twice. Coupling matrices are symmetric with a zero diagonal; the
diagonal of a raw QUBO matrix lives in the linear vector (``s_i**2 == s_i``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


def _check_coupling(name: str, m: np.ndarray) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    if m.shape[0] < 1:
        raise ValueError(f"{name} must have at least one variable")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    if np.any(np.diag(m) != 0.0):
        raise ValueError(f"{name} must have a zero diagonal")
    if not np.array_equal(m, m.T):
        raise ValueError(f"{name} must be symmetric")


def _check_vector(name: str, v: np.ndarray, n: int) -> None:
    if v.shape != (n,):
        raise ValueError(f"{name} has length {v.shape}, expected ({n},)")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")


@dataclass(frozen=True, eq=False)
class Qubo:
    """Canonical QUBO: symmetric zero-diagonal coupling, linear vector, offset."""

    coupling: np.ndarray
    linear: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        c = _frozen(self.coupling)
        _check_coupling("coupling", c)
        lin = _frozen(self.linear)
        _check_vector("linear", lin, c.shape[0])
        if not np.isfinite(self.offset):
            raise ValueError("offset must be finite")
        object.__setattr__(self, "coupling", c)
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def n(self) -> int:
        return self.coupling.shape[0]

    @classmethod
    def zeros(cls, n: int) -> Qubo:
        return cls(np.zeros((n, n)), np.zeros(n), 0.0)


@dataclass(frozen=True, eq=False)
class IsingModel:
    """Ising model with symmetric zero-diagonal couplings ``j`` and fields ``h``."""

    j: np.ndarray
    h: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        j = _frozen(self.j)
        _check_coupling("j", j)
        h = _frozen(self.h)
        _check_vector("h", h, j.shape[0])
        if not np.isfinite(self.offset):
            raise ValueError("offset must be finite")
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def n(self) -> int:
        return self.j.shape[0]


def as_bits(s) -> np.ndarray:
    """Validate a bit configuration and return it as an int8 array."""
    arr = np.asarray(s)
    if arr.ndim != 1:
        raise ValueError("bit configuration must be one-dimensional")
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError("bit configuration entries must be 0 or 1")
    return arr.astype(np.int8)


def as_spins(x) -> np.ndarray:
    """Validate a spin configuration and return it as an int8 array."""
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise ValueError("spin configuration must be one-dimensional")
    if not np.all((arr == -1) | (arr == 1)):
        raise ValueError("spin configuration entries must be -1 or +1")
    return arr.astype(np.int8)


def bits_to_spins(s) -> np.ndarray:
    return (2 * as_bits(s) - 1).astype(np.int8)


def spins_to_bits(x) -> np.ndarray:
    return ((as_spins(x) + 1) // 2).astype(np.int8)


def qubo_energy(q: Qubo, s) -> float:
    bits = as_bits(s)
    if bits.shape[0] != q.n:
        raise ValueError(f"bit vector length {bits.shape[0]} does not match QUBO size {q.n}")
    v = bits.astype(np.float64)
    return float(v @ q.coupling @ v + q.linear @ v + q.offset)


def ising_energy(m: IsingModel, x) -> float:
    spins = as_spins(x)
    if spins.shape[0] != m.n:
        raise ValueError(f"spin vector length {spins.shape[0]} does not match model size {m.n}")
    v = spins.astype(np.float64)
    return float(0.5 * (v @ m.j @ v) + m.h @ v + m.offset)


def qubo_to_ising(q: Qubo) -> IsingModel:
    """Exact conversion under ``x = 2s - 1``.

    ``J = C/2``, ``h_i = (sum_j C_ij + l_i)/2`` and the constant collects
    ``sum(C)/4 + sum(l)/2`` on top of the QUBO offset.
    """
    c = q.coupling
    j = c / 2.0
    h = c.sum(axis=1) / 2.0 + q.linear / 2.0
    offset = q.offset + c.sum() / 4.0 + q.linear.sum() / 2.0
    return IsingModel(j, h, offset)


def ising_to_qubo(m: IsingModel) -> Qubo:
    """Inverse of :func:`qubo_to_ising`."""
    c = 2.0 * m.j
    linear = 2.0 * m.h - c.sum(axis=1)
    offset = m.offset - c.sum() / 4.0 - linear.sum() / 2.0
    return Qubo(c, linear, offset)


def canonicalize(raw, offset: float = 0.0) -> Qubo:
    """Turn an arbitrary square matrix into a canonical :class:`Qubo`.

    The diagonal moves into the linear vector and the off-diagonal part is
    symmetrized, so ``qubo_energy`` equals ``s @ raw @ s`` for every ``s``.
    """
    a = np.asarray(raw, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"raw QUBO matrix must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("raw QUBO matrix has non-finite entries")
    linear = np.diag(a).copy()
    sym = 0.5 * (a + a.T)
    np.fill_diagonal(sym, 0.0)
    return Qubo(sym, linear, offset)


def all_spin_configs(n: int) -> np.ndarray:
    """All ``2**n`` spin vectors, row ``k`` encoding the bits of ``k`` (bit 0 -> +1)."""
    k = np.arange(2**n, dtype=np.int64)[:, None]
    bits = (k >> np.arange(n)) & 1
    return (1 - 2 * bits).astype(np.int8)


def enumerate_ising(m: IsingModel) -> tuple[np.ndarray, np.ndarray]:
    """Exhaustively evaluate every spin configuration.

    Returns ``(configs, energies)`` with ``configs`` from
    :func:`all_spin_configs`. Intended for small ``n`` (oracle use).
    """
    if m.n > 24:
        raise ValueError(f"exhaustive enumeration refused for n={m.n} > 24")
    x = all_spin_configs(m.n).astype(np.float64)
    energies = 0.5 * np.einsum("ki,ij,kj->k", x, m.j, x) + x @ m.h + m.offset
    return x.astype(np.int8), energies


def brute_force_minimum(m: IsingModel) -> tuple[np.ndarray, float]:
    configs, energies = enumerate_ising(m)
    k = int(np.argmin(energies))
    return configs[k], float(energies[k])
