"""Synthetic e+e- events, JSON Lines I/O and event slimming.

The generator stands in for a full Monte Carlo chain. Partons are produced
with exact two-body kinematics, then each one is fragmented into massless
particles inside a narrow cone. A jet's fragment pattern fixes its mass, and
the decay kinematics are solved with those masses, so every truth jet sums
exactly to its parton and the event sums to ``(sqrt_s, 0, 0, 0)``.
"""

from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .kinematics import Event, Particle, boost, mass, rotation_to

M_Z = 91.2
M_H = 125.0
M_W = 80.4
M_TOP = 172.5


class Process(str, enum.Enum):
    Z = "z"
    ZH = "zh"
    TT = "tt"

    @property
    def n_jet(self) -> int:
        return {"z": 2, "zh": 4, "tt": 6}[self.value]

    @property
    def default_sqrt_s(self) -> float:
        return {"z": 91.0, "zh": 240.0, "tt": 350.0}[self.value]


@dataclass(frozen=True)
class SyntheticSpec:
    process: Process = Process.Z
    sqrt_s: Optional[float] = None
    particles_per_jet: tuple[int, int] = (3, 8)
    angular_spread: float = 0.1
    seed: int = 0
    energy_smear: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "process", Process(self.process))
        if self.sqrt_s is None:
            object.__setattr__(self, "sqrt_s", self.process.default_sqrt_s)
        if not self.sqrt_s > 0:
            raise ValueError("sqrt_s must be positive")
        lo, hi = self.particles_per_jet
        if not 1 <= lo <= hi:
            raise ValueError(f"invalid particles_per_jet range {self.particles_per_jet}")
        if not 0 < self.angular_spread <= math.pi / 4:
            raise ValueError("angular_spread must lie in (0, pi/4]")
        if self.energy_smear < 0:
            raise ValueError("energy_smear must be non-negative")


class KinematicsError(ValueError):
    pass


def _two_body(parent: np.ndarray, m1: float, m2: float, cos_t: float, phi: float):
    """Decay ``parent`` into masses ``m1``, ``m2`` at rest-frame angles (cos_t, phi)."""
    big_m = mass(parent)
    if big_m < m1 + m2:
        raise KinematicsError(f"parent mass {big_m:.4f} below daughter masses {m1:.4f}+{m2:.4f}")
    lam = (big_m**2 - (m1 + m2) ** 2) * (big_m**2 - (m1 - m2) ** 2)
    p = math.sqrt(max(lam, 0.0)) / (2.0 * big_m)
    sin_t = math.sqrt(max(0.0, 1.0 - cos_t**2))
    n = np.array([sin_t * math.cos(phi), sin_t * math.sin(phi), cos_t])
    d1 = np.concatenate([[math.sqrt(p * p + m1 * m1)], p * n])
    d2 = np.concatenate([[math.sqrt(p * p + m2 * m2)], -p * n])
    beta = parent[1:] / parent[0]
    return boost(d1, beta)[0], boost(d2, beta)[0]


def _angles(rng, count):
    return [(rng.uniform(-1.0, 1.0), rng.uniform(0.0, 2.0 * math.pi)) for _ in range(count)]


def _partons(process: Process, sqrt_s: float, masses, ang) -> list[np.ndarray]:
    """Parton four-momenta for the process, in truth-jet order."""
    beam = np.array([sqrt_s, 0.0, 0.0, 0.0])
    if process is Process.Z:
        return list(_two_body(beam, masses[0], masses[1], *ang[0]))
    if process is Process.ZH:
        z, h = _two_body(beam, M_Z, M_H, *ang[0])
        b1, b2 = _two_body(h, masses[0], masses[1], *ang[1])
        q1, q2 = _two_body(z, masses[2], masses[3], *ang[2])
        return [b1, b2, q1, q2]
    t1, t2 = _two_body(beam, M_TOP, M_TOP, *ang[0])
    out = []
    for k, top in enumerate((t1, t2)):
        b, w = _two_body(top, masses[3 * k], M_W, *ang[1 + 2 * k])
        q1, q2 = _two_body(w, masses[3 * k + 1], masses[3 * k + 2], *ang[2 + 2 * k])
        out.extend([b, q1, q2])
    return out


_FLAVORS = {
    Process.Z: ["light"] * 2,
    Process.ZH: ["b", "b", "light", "light"],
    Process.TT: ["b", "light", "light", "b", "light", "light"],
}


def _pattern(rng, k: int, spread: float) -> np.ndarray:
    """Unit-energy fragment four-momenta in a cone around +z."""
    z = rng.dirichlet(np.ones(k)) if k > 1 else np.ones(1)
    theta = spread * np.sqrt(-2.0 * np.log1p(-rng.random(k)))
    phi = rng.uniform(0.0, 2.0 * math.pi, k)
    st = np.sin(theta)
    dirs = np.column_stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)])
    return np.column_stack([z, z[:, None] * dirs])


def _place(pattern: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Lorentz-map a fragment pattern so that its sum equals ``target``."""
    total = pattern.sum(axis=0)
    mu = mass(total)
    m_target = mass(target)
    if mu < 1e-12 or m_target < 1e-12:
        return np.outer(pattern[:, 0] / pattern[:, 0].sum(), target)
    frags = pattern * (m_target / mu)
    total = total * (m_target / mu)
    frags = boost(frags, -total[1:] / total[0])
    p_len = float(np.linalg.norm(target[1:]))
    if p_len > 0.0:
        # rest-frame fragments keep the pattern's orientation, so align its
        # axis with the target direction before boosting out
        rot = rotation_to(target[1:]) @ rotation_to(pattern.sum(axis=0)[1:]).T
        frags = np.column_stack([frags[:, 0], frags[:, 1:] @ rot.T])
        frags = boost(frags, target[1:] / target[0])
    return frags


def generate_synthetic_event(spec: SyntheticSpec) -> tuple[Event, np.ndarray]:
    """Generate one event; returns ``(event, partons)`` with partons ``(n_jet, 4)``.

    Each particle carries ``truth_jet`` (index into ``partons``) and a flavor.
    """
    rng = np.random.default_rng(spec.seed)
    proc = spec.process
    n_jet = proc.n_jet
    lo, hi = spec.particles_per_jet
    ang = _angles(rng, {Process.Z: 1, Process.ZH: 3, Process.TT: 5}[proc])
    patterns = [_pattern(rng, int(rng.integers(lo, hi + 1)), spec.angular_spread)
                for _ in range(n_jet)]

    try:
        massless = _partons(proc, spec.sqrt_s, [0.0] * n_jet, ang)
        masses = [mass(pat.sum(axis=0)) * p[0] for pat, p in zip(patterns, massless)]
        partons = _partons(proc, spec.sqrt_s, masses, ang)
    except KinematicsError as exc:
        raise KinematicsError(f"infeasible kinematics for {proc.value} at sqrt_s={spec.sqrt_s}: {exc}")

    flavors = _FLAVORS[proc]
    particles = []
    for jet, (pat, parton) in enumerate(zip(patterns, partons)):
        frags = _place(pat, parton)
        for f in frags:
            if spec.energy_smear > 0:
                f = f * max(1e-3, 1.0 + spec.energy_smear * rng.standard_normal())
            e = max(f[0], float(np.linalg.norm(f[1:])))
            particles.append(Particle(e, f[1], f[2], f[3], flavors[jet], jet))
    meta = {"process": proc.value, "seed": str(spec.seed), "sqrt_s": repr(spec.sqrt_s)}
    return Event(particles, meta), np.array(partons)


def truth_jets(event: Event) -> list[list[int]]:
    """Constituent indices grouped by ``truth_jet`` label."""
    labels = sorted({p.truth_jet for p in event.particles if p.truth_jet is not None})
    return [[i for i, p in enumerate(event.particles) if p.truth_jet == t] for t in labels]


def event_seed(master_seed: int, index: int, attempt: int = 0) -> int:
    ss = np.random.SeedSequence(master_seed, spawn_key=(index, attempt))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def generate_sample(spec: SyntheticSpec, n_events: int, preselect: bool = True,
                    max_attempts: int = 1000) -> list[Event]:
    """Generate ``n_events`` events, optionally keeping only preselected ones.

    Preselection clusters each event with the exclusive Durham algorithm at
    the process jet multiplicity and applies the acceptance and separation
    cuts; ZH and tt events additionally need exactly two b-tagged jets.
    Event ``k`` is drawn from seeds derived from ``(spec.seed, k, attempt)``.
    """
    from .durham import durham_exclusive, event_preselection

    events = []
    for k in range(n_events):
        for attempt in range(max_attempts):
            sub = SyntheticSpec(spec.process, spec.sqrt_s, spec.particles_per_jet,
                                spec.angular_spread, event_seed(spec.seed, k, attempt),
                                spec.energy_smear)
            event, _ = generate_synthetic_event(sub)
            if not preselect:
                break
            n_jet = spec.process.n_jet
            if len(event) < n_jet:
                continue
            jets = durham_exclusive(event, n_jet)
            ok, _ = event_preselection(jets)
            if ok and spec.process is not Process.Z:
                ok = sum(j.btag for j in jets) == 2
            if ok:
                break
        else:
            raise RuntimeError(f"no event passed preselection after {max_attempts} attempts")
        event.meta["index"] = str(k)
        events.append(event)
    return events


# ---------------------------------------------------------------- JSONL I/O


class EventFormatError(ValueError):
    pass


_REQUIRED = ("e", "px", "py", "pz")


def event_to_dict(event: Event) -> dict:
    return {
        "meta": {str(k): str(v) for k, v in event.meta.items()},
        "particles": [
            {"e": p.e, "px": p.px, "py": p.py, "pz": p.pz,
             "flavor": p.flavor, "truth_jet": p.truth_jet}
            for p in event.particles
        ],
    }


def event_from_dict(d: dict) -> Event:
    if not isinstance(d, dict) or "particles" not in d:
        raise EventFormatError("missing required field 'particles'")
    particles = []
    for k, rec in enumerate(d["particles"]):
        missing = [f for f in _REQUIRED if f not in rec]
        if missing:
            raise EventFormatError(f"particle {k} missing required field(s) {', '.join(missing)}")
        tj = rec.get("truth_jet")
        try:
            particles.append(Particle(float(rec["e"]), float(rec["px"]), float(rec["py"]),
                                      float(rec["pz"]), rec.get("flavor"),
                                      None if tj is None else int(tj)))
        except (TypeError, ValueError) as exc:
            raise EventFormatError(f"particle {k}: {exc}") from None
    meta = {str(k): str(v) for k, v in (d.get("meta") or {}).items()}
    return Event(particles, meta)


def write_events(events: Iterable[Event], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for event in events:
            fh.write(json.dumps(event_to_dict(event)) + "\n")


def read_events(path) -> list[Event]:
    events = []
    with open(Path(path), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                events.append(event_from_dict(json.loads(line)))
            except json.JSONDecodeError as exc:
                raise EventFormatError(f"line {lineno}: malformed JSON ({exc.msg})") from None
            except EventFormatError as exc:
                raise EventFormatError(f"line {lineno}: {exc}") from None
    return events


# ---------------------------------------------------------------- slimming


def simplify_event(event: Event, keep: int) -> Event:
    """Keep the ``keep`` highest-pT particles, preserving their original order.

    Asking for more particles than the event has returns an unchanged copy,
    flagged in ``meta["simplify_warning"]``.
    """
    if keep < 1:
        raise ValueError("keep must be at least 1")
    n = len(event.particles)
    meta = dict(event.meta)
    if keep > n:
        warnings.warn(f"keep={keep} exceeds the {n} particles in the event", stacklevel=2)
        meta["simplify_warning"] = f"keep={keep} > {n}"
        return Event(list(event.particles), meta)
    order = sorted(range(n), key=lambda i: (-event.particles[i].pt, i))
    kept = sorted(order[:keep])
    meta["simplified_from"] = str(n)
    return Event([event.particles[i] for i in kept], meta)
