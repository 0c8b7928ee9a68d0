"""Simulated-bifurcation and simulated-annealing Ising solvers.

All solvers minimize ``1/2 x^T J x + h^T x + offset`` over spins and keep the
best configuration seen at any step. The inner loops are compiled with numba
and evaluate the mean field in a fixed sequential order, so a shot's result
depends only on its seed, never on threading.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

import numba
import numpy as np

from .ising import IsingModel, ising_energy

C0_SIGMA_FLOOR = 1e-12
INIT_MOMENTUM = 0.1


class SolverDivergence(RuntimeError):
    """Raised when the oscillator state stops being finite."""


def pump_schedule(step: int, steps: int, a0: float) -> float:
    """Linear pump ramp ``a0 * step / steps``."""
    if not 0 <= step <= steps:
        raise ValueError(f"step {step} outside [0, {steps}]")
    return a0 * step / steps


def auto_c0(model: IsingModel) -> float:
    """``0.5 / (sigma * sqrt(n))`` with ``sigma`` the RMS off-diagonal coupling."""
    n = model.n
    if n > 1:
        sigma = math.sqrt(float(np.sum(model.j**2)) / (n * (n - 1)))
    else:
        sigma = 0.0
    return 0.5 / (max(sigma, C0_SIGMA_FLOOR) * math.sqrt(n))


@dataclass(frozen=True)
class SbParams:
    a0: float = 1.0
    c0: Optional[float] = None
    dt: float = 0.25
    steps: int = 1000
    pump: str = "linear"

    def __post_init__(self):
        if not self.a0 > 0:
            raise ValueError("a0 must be positive")
        if self.c0 is not None and not self.c0 > 0:
            raise ValueError("c0 must be positive when given")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.pump != "linear":
            raise ValueError(f"unsupported pump schedule {self.pump!r}")


@dataclass(frozen=True)
class SaParams:
    sweeps: int = 1000
    beta_min: float = 0.1
    beta_max: float = 10.0

    def __post_init__(self):
        if self.sweeps < 1:
            raise ValueError("sweeps must be at least 1")
        if not 0 < self.beta_min < self.beta_max:
            raise ValueError(
                f"need 0 < beta_min < beta_max, got ({self.beta_min}, {self.beta_max})"
            )

    @property
    def steps(self) -> int:
        return self.sweeps


@dataclass
class SolverResult:
    best_spins: np.ndarray
    best_energy: float
    best_step: int
    shot_seed: int
    # rows of (step, best_so_far_energy, wall_time_s); empty when not recorded
    trajectory: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    # best-so-far spins at each trajectory row
    snapshots: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=np.int8))
    wall_time: float = 0.0


# ---------------------------------------------------------------- kernels


@numba.njit(cache=True, nogil=True)
def _spin_energy(j, h, offset, s):
    n = s.shape[0]
    e = 0.0
    for i in range(n):
        acc = 0.0
        for k in range(n):
            acc += j[i, k] * s[k]
        e += s[i] * (0.5 * acc + h[i])
    return e + offset


@numba.njit(cache=True, nogil=True)
def _sb_kernel(j, h, offset, x, y, spins, best_spins, state,
               a0, c0, dt, steps, start, stop, discrete):
    """Advance SB from step ``start`` (exclusive) to ``stop`` (inclusive).

    ``state`` holds ``[best_energy, best_step]``. Returns 0 on success or the
    step number at which the state became non-finite.
    """
    n = x.shape[0]
    field_buf = np.empty(n)
    for k in range(start + 1, stop + 1):
        a = a0 * k / steps
        for i in range(n):
            acc = 0.0
            if discrete:
                for m in range(n):
                    xm = x[m]
                    if xm > 0.0:
                        acc += j[i, m]
                    elif xm < 0.0:
                        acc -= j[i, m]
            else:
                for m in range(n):
                    acc += j[i, m] * x[m]
            field_buf[i] = acc
        changed = False
        for i in range(n):
            # minimize: force is minus the gradient of the Ising energy
            y[i] += dt * (-(a0 - a) * x[i] - c0 * (h[i] + field_buf[i]))
            x[i] += dt * a0 * y[i]
            if not (np.isfinite(x[i]) and np.isfinite(y[i])):
                return k
            if x[i] > 1.0:
                x[i] = 1.0
                y[i] = 0.0
            elif x[i] < -1.0:
                x[i] = -1.0
                y[i] = 0.0
            s = 1 if x[i] >= 0.0 else -1
            if s != spins[i]:
                spins[i] = s
                changed = True
        if changed:
            e = _spin_energy(j, h, offset, spins)
            if e < state[0]:
                state[0] = e
                state[1] = k
                best_spins[:] = spins
    return 0


@numba.njit(cache=True, nogil=True)
def _sa_kernel(j, h, offset, spins, local, best_spins, state, betas, uniforms, start):
    """Metropolis sweeps ``start+1 .. start+len(betas)``; ``state = [best, step, energy]``."""
    n = spins.shape[0]
    e = state[2]
    for r in range(betas.shape[0]):
        beta = betas[r]
        for i in range(n):
            delta = -2.0 * spins[i] * (h[i] + local[i])
            if delta <= 0.0 or uniforms[r, i] < math.exp(-beta * delta):
                spins[i] = -spins[i]
                two_s = 2.0 * spins[i]
                for m in range(n):
                    local[m] += j[m, i] * two_s
                e += delta
        if e < state[0]:
            state[0] = e
            state[1] = start + r + 1
            best_spins[:] = spins
    state[2] = e


# ---------------------------------------------------------------- solvers


def _grid(steps: int, record_every: Optional[int]) -> list[int]:
    if not record_every:
        return [steps]
    if record_every < 1:
        raise ValueError("record_every must be positive")
    grid = list(range(record_every, steps + 1, record_every))
    if not grid or grid[-1] != steps:
        grid.append(steps)
    return grid


def _finish(model, best_spins, state, seed, traj, snaps, wall) -> SolverResult:
    spins = best_spins.astype(np.int8)
    return SolverResult(
        best_spins=spins,
        best_energy=ising_energy(model, spins),
        best_step=int(state[1]),
        shot_seed=int(seed),
        trajectory=np.array(traj, dtype=np.float64).reshape(-1, 3),
        snapshots=np.array(snaps, dtype=np.int8).reshape(-1, model.n),
        wall_time=wall,
    )


def _sb_solve(model: IsingModel, p: SbParams, seed: int, record_every, discrete: bool):
    rng = np.random.default_rng(seed)
    n = model.n
    c0 = p.c0 if p.c0 is not None else auto_c0(model)
    x = np.zeros(n)
    y = rng.uniform(-INIT_MOMENTUM, INIT_MOMENTUM, n)
    spins = np.zeros(n, dtype=np.int64)
    best = np.ones(n, dtype=np.int64)
    state = np.array([np.inf, 0.0])
    j = np.ascontiguousarray(model.j)
    h = np.ascontiguousarray(model.h)
    record = bool(record_every)
    traj, snaps = [], []
    t0 = time.perf_counter()
    start = 0
    for stop in _grid(p.steps, record_every):
        bad = _sb_kernel(j, h, model.offset, x, y, spins, best, state,
                         p.a0, c0, p.dt, p.steps, start, stop, discrete)
        if bad:
            raise SolverDivergence(
                f"non-finite oscillator state at step {bad} "
                f"(dt={p.dt}, a0={p.a0}, c0={c0}); reduce dt"
            )
        if record:
            traj.append((stop, state[0], time.perf_counter() - t0))
            snaps.append(best.copy())
        start = stop
    return _finish(model, best, state, seed, traj, snaps, time.perf_counter() - t0)


def sb_positions(model: IsingModel, params: SbParams = SbParams(), seed: int = 0,
                 discrete: bool = False) -> np.ndarray:
    """Oscillator positions after every step, shape ``(steps, n)``.

    Runs the same kernel as the solvers one step at a time; the final row
    equals the state a ``bsb_solve``/``dsb_solve`` run ends in.
    """
    rng = np.random.default_rng(seed)
    n = model.n
    c0 = params.c0 if params.c0 is not None else auto_c0(model)
    x = np.zeros(n)
    y = rng.uniform(-INIT_MOMENTUM, INIT_MOMENTUM, n)
    spins = np.zeros(n, dtype=np.int64)
    best = np.ones(n, dtype=np.int64)
    state = np.array([np.inf, 0.0])
    j = np.ascontiguousarray(model.j)
    h = np.ascontiguousarray(model.h)
    out = np.empty((params.steps, n))
    for k in range(params.steps):
        if _sb_kernel(j, h, model.offset, x, y, spins, best, state,
                      params.a0, c0, params.dt, params.steps, k, k + 1, discrete):
            raise SolverDivergence(f"non-finite oscillator state at step {k + 1}")
        out[k] = x
    return out


def bsb_solve(model: IsingModel, params: SbParams = SbParams(), seed: int = 0,
              record_every: Optional[int] = None) -> SolverResult:
    """Ballistic simulated bifurcation (inelastic walls at ``|x| = 1``)."""
    return _sb_solve(model, params, seed, record_every, discrete=False)


def dsb_solve(model: IsingModel, params: SbParams = SbParams(), seed: int = 0,
              record_every: Optional[int] = None) -> SolverResult:
    """Discrete simulated bifurcation: the mean field sees ``sgn(x_j)``."""
    return _sb_solve(model, params, seed, record_every, discrete=True)


def beta_ladder(sweeps: int, beta_min: float, beta_max: float) -> np.ndarray:
    """Geometric inverse-temperature ladder, one rung per sweep."""
    if sweeps == 1:
        return np.array([beta_max])
    return np.geomspace(beta_min, beta_max, sweeps)


def sa_solve(model: IsingModel, sweeps: int = 1000, beta_range: tuple[float, float] = (0.1, 10.0),
             seed: int = 0, record_every: Optional[int] = None) -> SolverResult:
    """Single-spin Metropolis annealing from a random start."""
    p = SaParams(sweeps, *beta_range)
    rng = np.random.default_rng(seed)
    n = model.n
    j = np.ascontiguousarray(model.j)
    h = np.ascontiguousarray(model.h)
    spins = rng.choice(np.array([-1, 1], dtype=np.int64), size=n)
    local = j @ spins.astype(np.float64)
    e0 = ising_energy(model, spins)
    state = np.array([e0, 0.0, e0])
    best = spins.copy()
    betas = beta_ladder(p.sweeps, p.beta_min, p.beta_max)
    record = bool(record_every)
    traj, snaps = [], []
    t0 = time.perf_counter()
    start = 0
    for stop in _grid(p.sweeps, record_every):
        uniforms = rng.random((stop - start, n))
        _sa_kernel(j, h, model.offset, spins, local, best, state,
                   betas[start:stop], uniforms, start)
        if record:
            traj.append((stop, state[0], time.perf_counter() - t0))
            snaps.append(best.copy())
        start = stop
    return _finish(model, best, state, seed, traj, snaps, time.perf_counter() - t0)


# ---------------------------------------------------------------- ensembles


@dataclass(frozen=True)
class SolverSpec:
    """A named solver with its parameters, callable as ``spec(model, seed)``."""

    kind: str
    params: Union[SbParams, SaParams]

    @classmethod
    def make(cls, kind: str, steps: Optional[int] = None, **kwargs) -> SolverSpec:
        kind = kind.lower()
        if kind in ("bsb", "dsb"):
            if steps is not None:
                kwargs["steps"] = steps
            return cls(kind, SbParams(**kwargs))
        if kind == "sa":
            if steps is not None:
                kwargs["sweeps"] = steps
            return cls(kind, SaParams(**kwargs))
        raise ValueError(f"unknown solver {kind!r}; expected bsb, dsb or sa")

    def __call__(self, model: IsingModel, seed: int,
                 record_every: Optional[int] = None) -> SolverResult:
        if self.kind == "bsb":
            return bsb_solve(model, self.params, seed, record_every)
        if self.kind == "dsb":
            return dsb_solve(model, self.params, seed, record_every)
        p = self.params
        return sa_solve(model, p.sweeps, (p.beta_min, p.beta_max), seed, record_every)


def shot_seed(master_seed: int, k: int) -> int:
    """Child seed of shot ``k``, a pure function of ``(master_seed, k)``."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(k,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class ShotEnsemble:
    shots: list[SolverResult]

    @property
    def best(self) -> SolverResult:
        return min(self.shots, key=lambda r: r.best_energy)

    @property
    def best_energy(self) -> float:
        return self.best.best_energy

    def energies(self) -> np.ndarray:
        return np.array([r.best_energy for r in self.shots])

    def trajectories(self) -> np.ndarray:
        grids = [tuple(r.trajectory[:, 0]) for r in self.shots]
        if not grids[0] or any(g != grids[0] for g in grids):
            raise ValueError("shots were not recorded on a common step grid")
        return np.stack([r.trajectory for r in self.shots])

    @property
    def steps(self) -> np.ndarray:
        return self.trajectories()[0, :, 0]

    @property
    def energy_mean(self) -> np.ndarray:
        return self.trajectories()[:, :, 1].mean(axis=0)

    @property
    def energy_std(self) -> np.ndarray:
        return self.trajectories()[:, :, 1].std(axis=0)


def multi_shot(solver: SolverSpec, model: IsingModel, n_shots: int, master_seed: int,
               record_every: Optional[int] = None, threads: int = 1) -> ShotEnsemble:
    """Run ``n_shots`` independently seeded shots; results are in shot order."""
    if n_shots < 1:
        raise ValueError("n_shots must be at least 1")
    seeds = [shot_seed(master_seed, k) for k in range(n_shots)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            shots = list(pool.map(lambda s: solver(model, s, record_every), seeds))
    else:
        shots = [solver(model, s, record_every) for s in seeds]
    return ShotEnsemble(shots)
