import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bifurjet.ising import IsingModel
from bifurjet.kinematics import Event, Particle

settings.register_profile(
    "default", max_examples=50, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def random_ising(rng: np.random.Generator, n: int) -> IsingModel:
    """Couplings and fields uniform in [-1, 1]."""
    a = rng.uniform(-1, 1, (n, n))
    j = np.triu(a, 1)
    return IsingModel(j + j.T, rng.uniform(-1, 1, n))


def massless(e: float, direction) -> Particle:
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    return Particle(e, *(e * d))


def random_event(rng: np.random.Generator, n: int, tie_free: bool = True) -> Event:
    """Massless particles with random energies and isotropic directions."""
    parts = []
    for _ in range(n):
        v = rng.normal(size=3)
        parts.append(massless(float(rng.uniform(1.0, 50.0)), v))
    return Event(parts)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def report(criterion: int, passed: bool, detail: str) -> str:
    """Record and print one acceptance line."""
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
